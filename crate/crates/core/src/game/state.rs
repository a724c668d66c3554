use std::sync::Arc;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use super::cards::{CardPool, Effect, Keyword};
use crate::{Error, Result};

pub const STARTING_HEALTH: i32 = 30;
pub const MAX_MANA: u8 = 10;
pub const BOARD_LIMIT: usize = 7;
pub const HAND_LIMIT: usize = 10;
/// Full turns (one per player) before a match is declared a draw.
pub const TURN_LIMIT: u32 = 60;
pub const FIRST_HAND: usize = 3;
pub const SECOND_HAND: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    P0,
    P1,
}

impl Player {
    #[inline]
    pub fn other(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinionInstance {
    pub card: u16,
    pub attack: i32,
    pub health: i32,
    pub can_attack: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerState {
    pub hero_health: i32,
    pub mana_cap: u8,
    pub mana_available: u8,
    pub hand: ArrayVec<u16, HAND_LIMIT>,
    /// Shuffled library; cards at `library_pos..` are still to be drawn.
    pub library: Arc<[u16]>,
    pub library_pos: usize,
    pub board: ArrayVec<MinionInstance, BOARD_LIMIT>,
    pub fatigue_counter: u32,
}

impl PlayerState {
    pub fn new(library: Vec<u16>) -> Self {
        Self {
            hero_health: STARTING_HEALTH,
            mana_cap: 0,
            mana_available: 0,
            hand: ArrayVec::new(),
            library: library.into(),
            library_pos: 0,
            board: ArrayVec::new(),
            fatigue_counter: 0,
        }
    }

    pub fn library_remaining(&self) -> usize {
        self.library.len() - self.library_pos
    }

    /// Draws one card; an empty library deals escalating fatigue damage and
    /// a full hand burns the drawn card.
    fn draw(&mut self) {
        if self.library_pos < self.library.len() {
            let card = self.library[self.library_pos];
            self.library_pos += 1;
            if !self.hand.is_full() {
                self.hand.push(card);
            }
        } else {
            self.fatigue_counter += 1;
            self.hero_health -= self.fatigue_counter as i32;
        }
    }

    fn remove_dead(&mut self) {
        self.board.retain(|m| m.health > 0);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Own,
    Enemy,
}

/// A minion on one of the two boards, relative to the active player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinionRef {
    pub side: Side,
    pub index: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackTarget {
    Hero,
    Minion(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameAction {
    EndTurn,
    Play {
        hand_index: u8,
        target: Option<MinionRef>,
    },
    Attack {
        attacker: u8,
        target: AttackTarget,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    P0,
    P1,
    Draw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub winner: Winner,
    /// Player turns played (two per full turn).
    pub turns_played: u32,
}

#[derive(Clone, Debug)]
pub struct GameState<'p> {
    pub pool: &'p CardPool,
    pub players: [PlayerState; 2],
    pub active: Player,
    /// Player turns started so far, from 1.
    pub turn_number: u32,
    /// Seed the libraries were shuffled with.
    pub match_seed: u64,
}

impl<'p> GameState<'p> {
    /// Sets up a match from already-shuffled libraries: deals the opening
    /// hands and starts the first player's turn.
    pub fn new(
        pool: &'p CardPool,
        library_p0: Vec<u16>,
        library_p1: Vec<u16>,
        first: Player,
        match_seed: u64,
    ) -> Self {
        let mut state = Self {
            pool,
            players: [PlayerState::new(library_p0), PlayerState::new(library_p1)],
            active: first,
            turn_number: 1,
            match_seed,
        };
        for _ in 0..FIRST_HAND {
            state.players[first.index()].draw();
        }
        for _ in 0..SECOND_HAND {
            state.players[first.other().index()].draw();
        }
        state.start_turn();
        state
    }

    pub fn player(&self, p: Player) -> &PlayerState {
        &self.players[p.index()]
    }

    pub fn is_terminal(&self) -> bool {
        self.players.iter().any(|p| p.hero_health <= 0) || self.turn_number > 2 * TURN_LIMIT
    }

    /// The result of a finished match, or `None` while it is still running.
    pub fn outcome(&self) -> Option<MatchOutcome> {
        if !self.is_terminal() {
            return None;
        }
        let dead0 = self.players[0].hero_health <= 0;
        let dead1 = self.players[1].hero_health <= 0;
        let winner = match (dead0, dead1) {
            (false, true) => Winner::P0,
            (true, false) => Winner::P1,
            _ => Winner::Draw,
        };
        Some(MatchOutcome {
            winner,
            turns_played: self.turn_number.min(2 * TURN_LIMIT),
        })
    }

    fn start_turn(&mut self) {
        let me = &mut self.players[self.active.index()];
        me.mana_cap = (me.mana_cap + 1).min(MAX_MANA);
        me.mana_available = me.mana_cap;
        for m in me.board.iter_mut() {
            m.can_attack = true;
        }
        me.draw();
    }

    fn split_mut(&mut self) -> (&mut PlayerState, &mut PlayerState) {
        let [p0, p1] = &mut self.players;
        match self.active {
            Player::P0 => (p0, p1),
            Player::P1 => (p1, p0),
        }
    }

    /// Every legal move for the active player. `EndTurn` comes first; one
    /// play is listed per distinct card in hand.
    pub fn legal_actions(&self) -> Vec<GameAction> {
        let mut out = Vec::new();
        if self.is_terminal() {
            return out;
        }
        out.push(GameAction::EndTurn);
        let me = self.player(self.active);
        let foe = self.player(self.active.other());

        let mut seen: ArrayVec<u16, HAND_LIMIT> = ArrayVec::new();
        for (hi, &card_id) in me.hand.iter().enumerate() {
            if seen.contains(&card_id) {
                continue;
            }
            seen.push(card_id);
            let card = self.pool.card(card_id);
            if card.cost > me.mana_available {
                continue;
            }
            if card.is_minion() && me.board.is_full() {
                continue;
            }
            let hand_index = hi as u8;
            let targeted = card.effect.is_some_and(|e| e.needs_minion_target());
            let any_minions = !me.board.is_empty() || !foe.board.is_empty();
            if targeted && any_minions {
                for (side, board) in [(Side::Enemy, &foe.board), (Side::Own, &me.board)] {
                    for i in 0..board.len() {
                        out.push(GameAction::Play {
                            hand_index,
                            target: Some(MinionRef {
                                side,
                                index: i as u8,
                            }),
                        });
                    }
                }
            } else if targeted && !card.is_minion() {
                // a targeted spell with nothing to target cannot be cast
            } else {
                out.push(GameAction::Play {
                    hand_index,
                    target: None,
                });
            }
        }

        let taunts: ArrayVec<u8, BOARD_LIMIT> = foe
            .board
            .iter()
            .enumerate()
            .filter(|(_, m)| self.pool.card(m.card).has(Keyword::Taunt))
            .map(|(i, _)| i as u8)
            .collect();
        for (ai, m) in me.board.iter().enumerate() {
            if !m.can_attack || m.attack <= 0 {
                continue;
            }
            let attacker = ai as u8;
            if taunts.is_empty() {
                out.push(GameAction::Attack {
                    attacker,
                    target: AttackTarget::Hero,
                });
                for ti in 0..foe.board.len() {
                    out.push(GameAction::Attack {
                        attacker,
                        target: AttackTarget::Minion(ti as u8),
                    });
                }
            } else {
                for &ti in &taunts {
                    out.push(GameAction::Attack {
                        attacker,
                        target: AttackTarget::Minion(ti),
                    });
                }
            }
        }
        out
    }

    fn check_action(&self, action: &GameAction) -> Result<()> {
        let illegal = |msg: String| Err(Error::InvalidAction(msg));
        if self.is_terminal() {
            return illegal("the match is over".into());
        }
        let me = self.player(self.active);
        let foe = self.player(self.active.other());
        match *action {
            GameAction::EndTurn => Ok(()),
            GameAction::Play { hand_index, target } => {
                let Some(&card_id) = me.hand.get(hand_index as usize) else {
                    return illegal(format!("no card at hand index {hand_index}"));
                };
                let card = self.pool.card(card_id);
                if card.cost > me.mana_available {
                    return illegal(format!("card {card_id} costs {} > {} mana", card.cost, me.mana_available));
                }
                if card.is_minion() && me.board.is_full() {
                    return illegal("board is full".into());
                }
                let targeted = card.effect.is_some_and(|e| e.needs_minion_target());
                let any_minions = !me.board.is_empty() || !foe.board.is_empty();
                match target {
                    Some(t) => {
                        if !targeted {
                            return illegal(format!("card {card_id} takes no target"));
                        }
                        let board = match t.side {
                            Side::Own => &me.board,
                            Side::Enemy => &foe.board,
                        };
                        if t.index as usize >= board.len() {
                            return illegal(format!("no minion at {t:?}"));
                        }
                        Ok(())
                    }
                    None if targeted && any_minions => illegal(format!("card {card_id} needs a target")),
                    None if targeted && !card.is_minion() => {
                        illegal(format!("spell {card_id} has no minion to target"))
                    }
                    None => Ok(()),
                }
            }
            GameAction::Attack { attacker, target } => {
                let Some(m) = me.board.get(attacker as usize) else {
                    return illegal(format!("no attacker at {attacker}"));
                };
                if !m.can_attack || m.attack <= 0 {
                    return illegal(format!("minion {attacker} cannot attack"));
                }
                let has_taunt = foe.board.iter().any(|m| self.pool.card(m.card).has(Keyword::Taunt));
                match target {
                    AttackTarget::Hero if has_taunt => illegal("a taunt minion blocks the hero".into()),
                    AttackTarget::Hero => Ok(()),
                    AttackTarget::Minion(i) => {
                        let Some(t) = foe.board.get(i as usize) else {
                            return illegal(format!("no defender at {i}"));
                        };
                        if has_taunt && !self.pool.card(t.card).has(Keyword::Taunt) {
                            return illegal("must attack a taunt minion".into());
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    /// Applies a legal action, returning the successor state.
    pub fn apply(&self, action: &GameAction) -> Result<GameState<'p>> {
        self.check_action(action)?;
        let mut next = self.clone();
        next.apply_in_place(action);
        Ok(next)
    }

    /// Applies an action already known to be legal.
    pub(crate) fn apply_in_place(&mut self, action: &GameAction) {
        match *action {
            GameAction::EndTurn => {
                self.active = self.active.other();
                self.turn_number += 1;
                if !self.is_terminal() {
                    self.start_turn();
                }
            }
            GameAction::Play { hand_index, target } => {
                let pool = self.pool;
                let (me, foe) = self.split_mut();
                let card_id = me.hand.remove(hand_index as usize);
                let card = pool.card(card_id);
                me.mana_available -= card.cost;
                if let Some(effect) = card.effect {
                    resolve_effect(pool, effect, target, me, foe);
                }
                if card.is_minion() {
                    me.board.push(MinionInstance {
                        card: card_id,
                        attack: card.attack as i32,
                        health: card.health as i32,
                        can_attack: card.has(Keyword::Charge),
                    });
                }
            }
            GameAction::Attack { attacker, target } => {
                let (me, foe) = self.split_mut();
                let a = &mut me.board[attacker as usize];
                a.can_attack = false;
                match target {
                    AttackTarget::Hero => foe.hero_health -= a.attack,
                    AttackTarget::Minion(i) => {
                        let d = &mut foe.board[i as usize];
                        d.health -= a.attack;
                        a.health -= d.attack;
                        me.remove_dead();
                        foe.remove_dead();
                    }
                }
            }
        }
    }
}

fn resolve_effect(
    pool: &CardPool,
    effect: Effect,
    target: Option<MinionRef>,
    me: &mut PlayerState,
    foe: &mut PlayerState,
) {
    match effect {
        Effect::DealDamageFace { amount } => foe.hero_health -= amount as i32,
        Effect::DealDamageAnyMinion { amount } => {
            if let Some(t) = target {
                let side = match t.side {
                    Side::Own => me,
                    Side::Enemy => foe,
                };
                side.board[t.index as usize].health -= amount as i32;
                side.remove_dead();
            }
        }
        Effect::AoeDamageEnemyMinions { amount } => {
            for m in foe.board.iter_mut() {
                m.health -= amount as i32;
            }
            foe.remove_dead();
        }
        Effect::Heal { amount } => {
            me.hero_health = (me.hero_health + amount as i32).min(STARTING_HEALTH);
        }
        Effect::DrawCards { count } => {
            for _ in 0..count {
                me.draw();
            }
        }
        Effect::BuffTribe {
            tribe,
            attack,
            health,
        } => {
            for m in me.board.iter_mut() {
                if pool.card(m.card).tribe == Some(tribe) {
                    m.attack += attack as i32;
                    m.health += health as i32;
                }
            }
        }
    }
}

pub fn legal_game_actions(state: &GameState<'_>) -> Vec<GameAction> {
    state.legal_actions()
}

pub fn apply_game_action<'p>(state: &GameState<'p>, action: &GameAction) -> Result<GameState<'p>> {
    state.apply(action)
}
