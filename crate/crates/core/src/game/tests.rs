use super::*;
use crate::deck::{random_deck, DeckVector};
use proptest::prelude::*;
use rand::Rng;

fn minion(id: u16, cost: u8, attack: u8, health: u8, keywords: Vec<Keyword>) -> CardSpec {
    CardSpec {
        id,
        kind: CardKind::Minion,
        cost,
        attack,
        health,
        tribe: None,
        keywords,
        effect: None,
    }
}

fn spell(id: u16, cost: u8, effect: Effect) -> CardSpec {
    CardSpec {
        id,
        kind: CardKind::Spell,
        cost,
        attack: 0,
        health: 0,
        tribe: None,
        keywords: vec![],
        effect: Some(effect),
    }
}

fn pool_of(cards: Vec<CardSpec>) -> CardPool {
    let pool = CardPool {
        seed: 0,
        n_cards: cards.len(),
        cards,
    };
    pool.validate().unwrap();
    pool
}

/// A small hand-made pool used by the rule tests.
fn rules_pool() -> CardPool {
    pool_of(vec![
        minion(0, 1, 2, 1, vec![]),
        minion(1, 2, 2, 3, vec![]),
        minion(2, 3, 1, 5, vec![Keyword::Taunt]),
        minion(3, 2, 3, 1, vec![Keyword::Charge]),
        spell(4, 3, Effect::DealDamageFace { amount: 4 }),
        spell(5, 2, Effect::DealDamageAnyMinion { amount: 3 }),
        spell(6, 4, Effect::AoeDamageEnemyMinions { amount: 2 }),
        spell(7, 1, Effect::DrawCards { count: 2 }),
        minion(8, 10, 10, 11, vec![]),
        spell(9, 2, Effect::Heal { amount: 6 }),
    ])
}

/// A state with nothing in hand, nothing on board and long libraries.
fn blank_state(pool: &CardPool) -> GameState<'_> {
    let lib = vec![0u16; 20];
    let mut s = GameState::new(pool, lib.clone(), lib, Player::P0, 1);
    for p in s.players.iter_mut() {
        p.hand.clear();
    }
    s
}

fn ready(card: u16, attack: i32, health: i32) -> MinionInstance {
    MinionInstance {
        card,
        attack,
        health,
        can_attack: true,
    }
}

#[test]
fn only_end_turn_with_empty_hand_and_no_ready_minions() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].board.push(MinionInstance {
        can_attack: false,
        ..ready(1, 2, 3)
    });
    assert_eq!(legal_game_actions(&s), vec![GameAction::EndTurn]);
}

#[test]
fn taunt_shields_the_hero() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].board.push(ready(1, 2, 3));
    s.players[1].board.push(ready(0, 2, 1));
    s.players[1].board.push(ready(2, 1, 5));
    let actions = legal_game_actions(&s);
    assert!(!actions.iter().any(|a| matches!(
        a,
        GameAction::Attack {
            target: AttackTarget::Hero,
            ..
        }
    )));
    assert!(actions.contains(&GameAction::Attack {
        attacker: 0,
        target: AttackTarget::Minion(1)
    }));
    assert!(!actions.contains(&GameAction::Attack {
        attacker: 0,
        target: AttackTarget::Minion(0)
    }));
    let illegal = GameAction::Attack {
        attacker: 0,
        target: AttackTarget::Hero,
    };
    assert!(matches!(s.apply(&illegal), Err(crate::Error::InvalidAction(_))));
}

#[test]
fn dead_hero_means_no_actions() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[1].hero_health = 0;
    assert!(legal_game_actions(&s).is_empty());
    assert!(greedy_policy_move(&s, &ProxyConfig::default()).is_err());
}

#[test]
fn end_turn_ramps_the_next_players_mana() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].mana_cap = 3;
    s.players[1].mana_cap = 3;
    let next = apply_game_action(&s, &GameAction::EndTurn).unwrap();
    assert_eq!(next.active, Player::P1);
    assert_eq!(next.turn_number, s.turn_number + 1);
    assert_eq!(next.players[1].mana_cap, 4);
    assert_eq!(next.players[1].mana_available, 4);
    assert_eq!(next.players[1].hand.len(), 1);

    let mut capped = s.clone();
    capped.players[1].mana_cap = 10;
    let next = apply_game_action(&capped, &GameAction::EndTurn).unwrap();
    assert_eq!(next.players[1].mana_cap, 10);
}

#[test]
fn face_damage_can_end_the_match() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].hand.push(4);
    s.players[0].mana_available = 3;
    s.players[1].hero_health = 3;
    let next = s
        .apply(&GameAction::Play {
            hand_index: 0,
            target: None,
        })
        .unwrap();
    assert_eq!(next.players[1].hero_health, -1);
    assert!(next.is_terminal());
    assert_eq!(next.outcome().unwrap().winner, Winner::P0);
    assert_eq!(next.players[0].mana_available, 0);
}

#[test]
fn fatigue_escalates() {
    let pool = rules_pool();
    let mut s = GameState::new(&pool, vec![], vec![0; 10], Player::P1, 1);
    // P0 drew 4 cards from an empty library during setup
    assert_eq!(s.players[0].fatigue_counter, 4);
    s.players[0].fatigue_counter = 2;
    s.players[0].hero_health = 20;
    let next = s.apply(&GameAction::EndTurn).unwrap();
    assert_eq!(next.players[0].fatigue_counter, 3);
    assert_eq!(next.players[0].hero_health, 17);
}

#[test]
fn turn_limit_ends_in_a_draw() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.turn_number = 2 * TURN_LIMIT;
    let next = s.apply(&GameAction::EndTurn).unwrap();
    assert!(next.is_terminal());
    assert_eq!(next.outcome().unwrap().winner, Winner::Draw);
}

#[test]
fn combat_and_spells_resolve() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].board.push(ready(1, 2, 3));
    s.players[1].board.push(ready(0, 2, 1));
    s.players[1].board.push(ready(1, 2, 3));
    let next = s
        .apply(&GameAction::Attack {
            attacker: 0,
            target: AttackTarget::Minion(0),
        })
        .unwrap();
    assert_eq!(next.players[0].board[0].health, 1);
    assert!(!next.players[0].board[0].can_attack);
    assert_eq!(next.players[1].board.len(), 1);

    let mut s2 = next.clone();
    s2.players[0].hand.push(6);
    s2.players[0].hand.push(5);
    s2.players[0].hand.push(9);
    s2.players[0].mana_available = 10;
    s2.players[0].hero_health = 26;
    let after_aoe = s2
        .apply(&GameAction::Play {
            hand_index: 0,
            target: None,
        })
        .unwrap();
    assert_eq!(after_aoe.players[1].board[0].health, 1);
    let after_bolt = after_aoe
        .apply(&GameAction::Play {
            hand_index: 0,
            target: Some(MinionRef {
                side: Side::Enemy,
                index: 0,
            }),
        })
        .unwrap();
    assert!(after_bolt.players[1].board.is_empty());
    let healed = after_bolt
        .apply(&GameAction::Play {
            hand_index: 0,
            target: None,
        })
        .unwrap();
    assert_eq!(healed.players[0].hero_health, STARTING_HEALTH);
}

#[test]
fn targeted_spell_needs_a_target() {
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].hand.push(5);
    s.players[0].mana_available = 5;
    assert_eq!(legal_game_actions(&s), vec![GameAction::EndTurn]);
    assert!(s
        .apply(&GameAction::Play {
            hand_index: 0,
            target: None
        })
        .is_err());
}

#[test]
fn tribe_buff_hits_only_the_tribe() {
    let mut cards = vec![minion(0, 1, 1, 1, vec![]), minion(1, 1, 1, 1, vec![])];
    cards[0].tribe = Some(Tribe::B);
    cards.push(CardSpec {
        tribe: Some(Tribe::B),
        effect: Some(Effect::BuffTribe {
            tribe: Tribe::B,
            attack: 2,
            health: 1,
        }),
        ..minion(2, 2, 1, 2, vec![])
    });
    let pool = pool_of(cards);
    let mut s = blank_state(&pool);
    s.players[0].board.push(ready(0, 1, 1));
    s.players[0].board.push(ready(1, 1, 1));
    s.players[0].hand.push(2);
    s.players[0].mana_available = 2;
    let next = s
        .apply(&GameAction::Play {
            hand_index: 0,
            target: None,
        })
        .unwrap();
    let b = &next.players[0].board;
    assert_eq!((b[0].attack, b[0].health), (3, 2));
    assert_eq!((b[1].attack, b[1].health), (1, 1));
    assert_eq!((b[2].attack, b[2].health), (1, 2));
    assert!(!b[2].can_attack);
}

#[test]
fn heuristic_examples() {
    let pool = rules_pool();
    let proxy = ProxyConfig::default();
    let s = blank_state(&pool);
    assert_eq!(heuristic_score(&s, Player::P0, &proxy), 0.0);

    let mut s2 = s.clone();
    s2.players[0].board.push(ready(1, 2, 3));
    assert_eq!(heuristic_score(&s2, Player::P0, &proxy), 5.0);
    assert_eq!(heuristic_score(&s2, Player::P1, &proxy), -5.0);

    let mut dead = s.clone();
    dead.players[1].hero_health = 0;
    assert_eq!(heuristic_score(&dead, Player::P0, &proxy), f64::INFINITY);
    assert_eq!(heuristic_score(&dead, Player::P1, &proxy), f64::NEG_INFINITY);
}

#[test]
fn greedy_takes_lethal() {
    // Two minions on our board; enemy hero in range of the 3-attack one.
    // Scores by hand (w_hp = w_board = 1, w_hand = 0.5, hands empty):
    //   current: hp 0 + board (2+3)+(3+1) - (2+1) = 6
    //   0 -> hero: 2 dmg -> 8, 0 -> minion: kills 2/1, takes 2 -> 6
    //   1 -> hero: lethal -> +inf
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].board.push(ready(1, 2, 3));
    s.players[0].board.push(ready(3, 3, 1));
    s.players[1].board.push(ready(0, 2, 1));
    s.players[1].hero_health = 3;
    s.players[0].hero_health = 3;
    let mv = greedy_policy_move(&s, &ProxyConfig::default()).unwrap();
    assert_eq!(
        mv,
        GameAction::Attack {
            attacker: 1,
            target: AttackTarget::Hero
        }
    );
}

#[test]
fn greedy_passes_when_nothing_else_is_legal() {
    let pool = rules_pool();
    let s = blank_state(&pool);
    assert_eq!(greedy_policy_move(&s, &ProxyConfig::default()).unwrap(), GameAction::EndTurn);
}

#[test]
fn greedy_breaks_ties_by_lowest_index() {
    // Two identical ready minions: attacking face with either scores the same.
    let pool = rules_pool();
    let mut s = blank_state(&pool);
    s.players[0].board.push(ready(1, 2, 3));
    s.players[0].board.push(ready(1, 2, 3));
    let actions = legal_game_actions(&s);
    assert_eq!(
        actions[1],
        GameAction::Attack {
            attacker: 0,
            target: AttackTarget::Hero
        }
    );
    let mv = greedy_policy_move(&s, &ProxyConfig::default()).unwrap();
    assert_eq!(mv, actions[1]);
}

#[test]
fn matches_are_deterministic() {
    let pool = generate_card_pool(7, 40).unwrap();
    let a = random_deck(40, 8, 1).unwrap();
    let b = random_deck(40, 8, 2).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    for seed in 0..20 {
        let x = simulate_match(&pool, &a, &b, &proxies, seed, Player::P1).unwrap();
        let y = simulate_match(&pool, &a, &b, &proxies, seed, Player::P1).unwrap();
        assert_eq!(x, y);
        let (z, log) = simulate_match_transcript(&pool, &a, &b, &proxies, seed, Player::P1).unwrap();
        assert_eq!(x, z);
        assert!(!log.is_empty());
    }
}

#[test]
fn walls_survive_to_the_turn_limit() {
    let cards = (0..40).map(|i| minion(i, 1, 0, 1, vec![])).collect();
    let pool = pool_of(cards);
    let deck = DeckVector::from_indices(40, &(0..35).collect::<Vec<_>>()).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    let out = simulate_match(&pool, &deck, &deck, &proxies, 3, Player::P0).unwrap();
    assert_eq!(out.winner, Winner::Draw);
    assert_eq!(out.turns_played, 2 * TURN_LIMIT);
}

#[test]
fn aggro_beats_an_unplayable_hand() {
    let mut cards: Vec<CardSpec> = (0..5).map(|i| minion(i, 1, 2, 1, vec![])).collect();
    cards.extend((5..10).map(|i| minion(i, 10, 10, 11, vec![])));
    let pool = pool_of(cards);
    let aggro = DeckVector::from_indices(10, &[0, 1, 2, 3, 4]).unwrap();
    let slow = DeckVector::from_indices(10, &[5, 6, 7, 8, 9]).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    let out = simulate_match(&pool, &aggro, &slow, &proxies, 2024, Player::P0).unwrap();
    assert_eq!(out.winner, Winner::P0);
}

#[test]
fn win_rate_rejects_odd_match_counts() {
    let pool = generate_card_pool(7, 40).unwrap();
    let a = random_deck(40, 8, 1).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    assert!(evaluate_win_rate(&pool, &a, &a, &proxies, 3, 0).is_err());
    assert!(evaluate_win_rate(&pool, &a, &a, &proxies, 0, 0).is_err());
}

#[test]
fn mirror_match_is_even() {
    let pool = generate_card_pool(7, 40).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    let x = random_deck(40, 8, 11).unwrap();
    let wr = evaluate_win_rate(&pool, &x, &x, &proxies, 300, 5).unwrap();
    assert!((wr.value - 0.5).abs() <= 0.10, "{wr:?}");
    let again = evaluate_win_rate(&pool, &x, &x, &proxies, 300, 5).unwrap();
    assert_eq!(wr, again);
}

#[test]
fn win_rate_does_not_depend_on_match_order() {
    let pool = generate_card_pool(7, 40).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    let a = random_deck(40, 8, 3).unwrap();
    let b = random_deck(40, 8, 4).unwrap();
    let parallel = evaluate_win_rate(&pool, &a, &b, &proxies, 60, 9).unwrap();
    let (mut wins, mut draws) = (0, 0);
    for i in (0..60u32).rev() {
        let first = if i % 2 == 0 { Player::P0 } else { Player::P1 };
        match simulate_match(&pool, &a, &b, &proxies, match_seed(9, i), first).unwrap().winner {
            Winner::P0 => wins += 1,
            Winner::Draw => draws += 1,
            Winner::P1 => {}
        }
    }
    assert_eq!(parallel, WinRate::from_counts(wins, draws, 60));
}

#[test]
fn win_rate_signal_exists_on_the_pinned_pool() {
    // random search for two decks whose win rates against a third differ by
    // at least 0.3
    let pool = generate_card_pool(7, 40).unwrap();
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    let opp = random_deck(40, 8, 100).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in 0..20 {
        let d = random_deck(40, 8, 200 + s).unwrap();
        let f = evaluate_win_rate(&pool, &d, &opp, &proxies, 100, 1).unwrap().value;
        lo = lo.min(f);
        hi = hi.max(f);
    }
    assert!(hi - lo >= 0.3, "spread {lo}..{hi}");
}

fn random_playout(pool: &CardPool, seed: u64, check: &mut dyn FnMut(&GameState<'_>)) {
    let mut rng = crate::seed::rng(seed);
    let a = random_deck(pool.n_cards, 8, rng.gen()).unwrap();
    let b = random_deck(pool.n_cards, 8, rng.gen()).unwrap();
    let first = if rng.gen() { Player::P0 } else { Player::P1 };
    let mut s = initial_game_state(pool, &a, &b, rng.gen(), first).unwrap();
    while !s.is_terminal() {
        check(&s);
        let actions = legal_game_actions(&s);
        assert_eq!(actions[0], GameAction::EndTurn);
        // bias towards non-pass moves so boards fill up
        let pick = if actions.len() > 1 && rng.gen_bool(0.85) {
            rng.gen_range(1..actions.len())
        } else {
            0
        };
        s = apply_game_action(&s, &actions[pick]).expect("legal action must apply");
    }
    check(&s);
}

fn assert_valid(s: &GameState<'_>) {
    for p in &s.players {
        assert!(p.board.len() <= BOARD_LIMIT);
        assert!(p.hero_health <= STARTING_HEALTH);
        assert!(p.mana_available <= p.mana_cap && p.mana_cap <= MAX_MANA);
        assert!(p.board.iter().all(|m| m.health >= 1));
        assert!(p.hand.len() <= HAND_LIMIT);
    }
    assert!(s.turn_number >= 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legal_actions_always_apply(seed in any::<u64>()) {
        let pool = generate_card_pool(seed % 5, 40).unwrap();
        random_playout(&pool, seed, &mut |s| assert_valid(s));
    }

    #[test]
    fn heuristic_is_antisymmetric(seed in any::<u64>()) {
        let pool = generate_card_pool(7, 40).unwrap();
        let proxy = ProxyConfig { w_hp: 0.7, w_board: 1.3, w_hand: 0.25, ..ProxyConfig::default() };
        random_playout(&pool, seed, &mut |s| {
            if !s.is_terminal() {
                let a = heuristic_score(s, Player::P0, &proxy);
                let b = heuristic_score(s, Player::P1, &proxy);
                assert_eq!(a, -b);
            }
        });
    }
}
