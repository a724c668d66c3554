use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

pub const MIN_COST: u8 = 1;
pub const MAX_COST: u8 = 10;
pub const MIN_POOL_SIZE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CardKind {
    Minion,
    Spell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tribe {
    A,
    B,
    C,
}

impl Tribe {
    pub const ALL: [Tribe; 3] = [Tribe::A, Tribe::B, Tribe::C];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Keyword {
    Taunt,
    Charge,
}

/// What a spell does, or a minion's battlecry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Effect {
    DealDamageFace { amount: u8 },
    DealDamageAnyMinion { amount: u8 },
    AoeDamageEnemyMinions { amount: u8 },
    Heal { amount: u8 },
    DrawCards { count: u8 },
    BuffTribe { tribe: Tribe, attack: u8, health: u8 },
}

impl Effect {
    pub fn needs_minion_target(&self) -> bool {
        matches!(self, Effect::DealDamageAnyMinion { .. })
    }

    fn magnitudes(&self) -> [u8; 2] {
        match *self {
            Effect::DealDamageFace { amount }
            | Effect::DealDamageAnyMinion { amount }
            | Effect::AoeDamageEnemyMinions { amount }
            | Effect::Heal { amount } => [amount, amount],
            Effect::DrawCards { count } => [count, count],
            Effect::BuffTribe { attack, health, .. } => [attack, health],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardSpec {
    pub id: u16,
    pub kind: CardKind,
    pub cost: u8,
    /// Zero for spells.
    pub attack: u8,
    /// Zero for spells.
    pub health: u8,
    pub tribe: Option<Tribe>,
    pub keywords: Vec<Keyword>,
    pub effect: Option<Effect>,
}

impl CardSpec {
    pub fn is_minion(&self) -> bool {
        self.kind == CardKind::Minion
    }

    pub fn has(&self, keyword: Keyword) -> bool {
        self.keywords.contains(&keyword)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("card {}: {what}", self.id)));
        if !(MIN_COST..=MAX_COST).contains(&self.cost) {
            return bad("cost outside 1..=10");
        }
        if let Some(e) = &self.effect {
            if e.magnitudes().contains(&0) {
                return bad("effect magnitude must be at least 1");
            }
        }
        match self.kind {
            CardKind::Minion => {
                if self.health == 0 {
                    return bad("minion health must be at least 1");
                }
            }
            CardKind::Spell => {
                if self.effect.is_none() {
                    return bad("spell without an effect");
                }
                if self.attack != 0 || self.health != 0 || self.tribe.is_some() || !self.keywords.is_empty() {
                    return bad("spells carry no stats, tribe or keywords");
                }
            }
        }
        Ok(())
    }
}

/// The card universe a game is played with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardPool {
    pub seed: u64,
    pub n_cards: usize,
    pub cards: Vec<CardSpec>,
}

impl CardPool {
    pub fn card(&self, id: u16) -> &CardSpec {
        &self.cards[id as usize]
    }

    /// Checks the invariants of an imported pool.
    pub fn validate(&self) -> Result<()> {
        if self.cards.len() != self.n_cards {
            return Err(Error::invalid(format!(
                "pool declares {} cards but lists {}",
                self.n_cards,
                self.cards.len()
            )));
        }
        for (i, c) in self.cards.iter().enumerate() {
            if c.id as usize != i {
                return Err(Error::invalid(format!("card at position {i} has id {}", c.id)));
            }
            c.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pool: CardPool = serde_json::from_str(text)?;
        pool.validate()?;
        Ok(pool)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Minion,
    Spell,
    Buff(Tribe),
}

/// Relative frequency of each mana cost for cards beyond the first ten.
const COST_CURVE: [u32; 10] = [10, 14, 14, 12, 10, 8, 6, 5, 4, 3];

/// Procedurally generates a pool of `n_cards` cards from `seed`.
///
/// Minions follow the vanilla budget `attack + health = 2·cost + 1` with a
/// jitter of ±2; keywords and battlecries are paid for out of that budget.
/// About a quarter of the pool are spells and a tenth are tribe-buff minions
/// (at least one per tribe once the pool has 30 cards). Every cost from 1 to
/// 10 appears at least once.
pub fn generate_card_pool(seed: u64, n_cards: usize) -> Result<CardPool> {
    if n_cards < MIN_POOL_SIZE {
        return Err(Error::invalid(format!(
            "card pool needs at least {MIN_POOL_SIZE} cards, got {n_cards}"
        )));
    }
    if n_cards > u16::MAX as usize {
        return Err(Error::invalid(format!("card pool of {n_cards} cards is too large")));
    }
    let mut rng = seed::rng(seed);

    let n_spell = (n_cards as f64 * 0.25).round() as usize;
    let mut n_buff = (n_cards as f64 * 0.10).round() as usize;
    if n_cards >= 30 {
        n_buff = n_buff.max(3);
    }
    let mut roles = Vec::with_capacity(n_cards);
    roles.extend(std::iter::repeat_n(Role::Spell, n_spell));
    roles.extend((0..n_buff).map(|i| Role::Buff(Tribe::ALL[i % 3])));
    roles.resize(n_cards, Role::Minion);
    roles.shuffle(&mut rng);

    let curve_total: u32 = COST_CURVE.iter().sum();
    let mut costs: Vec<u8> = (MIN_COST..=MAX_COST).collect();
    while costs.len() < n_cards {
        let mut roll = rng.gen_range(0..curve_total);
        let mut cost = 1u8;
        for (i, &w) in COST_CURVE.iter().enumerate() {
            if roll < w {
                cost = i as u8 + 1;
                break;
            }
            roll -= w;
        }
        costs.push(cost);
    }
    costs.shuffle(&mut rng);

    let cards = roles
        .into_iter()
        .zip(costs)
        .enumerate()
        .map(|(id, (role, cost))| make_card(id as u16, role, cost, &mut rng))
        .collect();

    Ok(CardPool {
        seed,
        n_cards,
        cards,
    })
}

fn make_card(id: u16, role: Role, cost: u8, rng: &mut impl Rng) -> CardSpec {
    match role {
        Role::Spell => make_spell(id, cost, rng),
        Role::Minion => make_minion(id, cost, rng),
        Role::Buff(tribe) => {
            let attack = 1 + u8::from(cost >= 5);
            let health = 1 + u8::from(cost >= 4);
            let budget = (2 * cost as i32 + 1 - (attack + health) as i32).max(2);
            let (a, h) = split_stats(budget, rng);
            CardSpec {
                id,
                kind: CardKind::Minion,
                cost,
                attack: a,
                health: h,
                tribe: Some(tribe),
                keywords: Vec::new(),
                effect: Some(Effect::BuffTribe {
                    tribe,
                    attack,
                    health,
                }),
            }
        }
    }
}

fn make_spell(id: u16, cost: u8, rng: &mut impl Rng) -> CardSpec {
    let effect = match rng.gen_range(0..5) {
        0 => Effect::DealDamageFace { amount: cost + 1 },
        1 => Effect::DealDamageAnyMinion { amount: cost + 2 },
        2 => Effect::AoeDamageEnemyMinions {
            amount: cost.div_ceil(2),
        },
        3 => Effect::Heal {
            amount: 2 * cost + 2,
        },
        _ => Effect::DrawCards {
            count: (cost / 2).clamp(1, 3),
        },
    };
    CardSpec {
        id,
        kind: CardKind::Spell,
        cost,
        attack: 0,
        health: 0,
        tribe: None,
        keywords: Vec::new(),
        effect: Some(effect),
    }
}

fn make_minion(id: u16, cost: u8, rng: &mut impl Rng) -> CardSpec {
    let mut budget = 2 * cost as i32 + 1 + rng.gen_range(-2..=2);
    let mut keywords = Vec::new();
    if rng.gen_bool(0.15) {
        if rng.gen_bool(0.5) {
            keywords.push(Keyword::Taunt);
        } else {
            keywords.push(Keyword::Charge);
            budget -= 1;
        }
    }
    let mut effect = None;
    if rng.gen_bool(0.15) {
        let m = (cost / 2).max(1);
        effect = Some(match rng.gen_range(0..4) {
            0 => Effect::DealDamageAnyMinion { amount: m },
            1 => Effect::DealDamageFace { amount: m },
            2 => Effect::Heal { amount: 2 * m },
            _ => Effect::DrawCards { count: 1 },
        });
        budget -= m as i32;
    }
    let tribe = match rng.gen_range(0..4) {
        0 => Some(Tribe::A),
        1 => Some(Tribe::B),
        2 => Some(Tribe::C),
        _ => None,
    };
    let (attack, health) = split_stats(budget.max(1), rng);
    CardSpec {
        id,
        kind: CardKind::Minion,
        cost,
        attack,
        health,
        tribe,
        keywords,
        effect,
    }
}

/// Splits a stat budget into attack and health, health at least 1.
fn split_stats(total: i32, rng: &mut impl Rng) -> (u8, u8) {
    let lo = total / 3;
    let hi = (2 * total) / 3;
    let attack = rng.gen_range(lo..=hi).min(total - 1).max(0);
    let health = total - attack;
    (attack as u8, health as u8)
}
