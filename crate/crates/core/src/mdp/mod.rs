//! The deck-search MDP.
//!
//! A state pairs the current player deck with the opponent deck and a step
//! counter. An action either keeps the deck or swaps one card in for one
//! card out, so there are `(N − D)·D + 1` actions in every non-terminal
//! state. An episode takes exactly `D` actions.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::deck::{validate_deck, DeckVector};
use crate::game::WinRateEvaluator;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchState {
    pub x_p: DeckVector,
    pub x_o: DeckVector,
    pub t: usize,
}

impl SearchState {
    /// Pool size `N`.
    pub fn n(&self) -> usize {
        self.x_p.len()
    }

    /// Deck size `D`, which is also the episode horizon.
    pub fn horizon(&self) -> usize {
        self.x_p.count_ones()
    }

    pub fn is_terminal(&self) -> bool {
        self.t >= self.horizon()
    }

    pub fn num_actions(&self) -> usize {
        action_count(self.n(), self.horizon())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchAction {
    Keep,
    /// Swap `out_card` (in the deck) for `in_card` (not in the deck).
    Replace { out_card: usize, in_card: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: SearchState,
    pub a: SearchAction,
    pub r: f64,
    pub s_next: SearchState,
}

/// How reward evaluations are seeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// A fresh root seed per (episode, step).
    PerStep,
    /// One root seed for every evaluation (common random numbers).
    Fixed(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    /// Amplification constant `b`.
    pub b: f64,
    pub num_matches: u32,
    pub seed_policy: SeedPolicy,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            b: 10.0,
            num_matches: crate::game::DEFAULT_NUM_MATCHES,
            seed_policy: SeedPolicy::PerStep,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid(format!("reward amplification b must be positive, got {}", self.b)));
        }
        if self.num_matches < 2 || !self.num_matches.is_multiple_of(2) {
            return Err(Error::invalid("reward num_matches must be even and at least 2"));
        }
        Ok(())
    }

    /// Root seed for the reward of step `t` in the episode seeded `episode_seed`.
    pub fn reward_seed(&self, episode_seed: u64, t: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::PerStep => crate::seed::mix_all(episode_seed, &[crate::seed::tag::REWARD, t as u64]),
            SeedPolicy::Fixed(s) => s,
        }
    }
}

/// `(N − D)·D + 1`.
pub fn action_count(n: usize, d: usize) -> usize {
    (n - d) * d + 1
}

pub fn initial_state(x_p0: DeckVector, x_o: DeckVector) -> Result<SearchState> {
    let n = x_o.len();
    let d = x_o.count_ones();
    if d == 0 || d >= n {
        return Err(Error::invalid(format!("opponent deck with {d} of {n} cards is not a valid deck")));
    }
    validate_deck(&x_p0, n, d).map_err(|v| Error::invalid(format!("initial player deck: {v}")))?;
    Ok(SearchState { x_p: x_p0, x_o, t: 0 })
}

/// All actions of `s`: `Keep` first, then replacements in ascending
/// `(out_card, in_card)` order.
pub fn enumerate_actions(s: &SearchState) -> Result<Vec<SearchAction>> {
    if s.is_terminal() {
        return Err(Error::HorizonExhausted {
            t: s.t,
            horizon: s.horizon(),
        });
    }
    let outs: Vec<usize> = s.x_p.to_indices();
    let ins: Vec<usize> = s.x_p.complement_indices().collect();
    let mut actions = Vec::with_capacity(outs.len() * ins.len() + 1);
    actions.push(SearchAction::Keep);
    for &out_card in &outs {
        for &in_card in &ins {
            actions.push(SearchAction::Replace { out_card, in_card });
        }
    }
    Ok(actions)
}

/// The action at position `index` of [`enumerate_actions`], computed without
/// building the list. `outs`/`ins` are the deck's and the complement's
/// ascending indices.
pub(crate) fn action_at(index: usize, outs: &[usize], ins: &[usize]) -> SearchAction {
    if index == 0 {
        SearchAction::Keep
    } else {
        let k = index - 1;
        SearchAction::Replace {
            out_card: outs[k / ins.len()],
            in_card: ins[k % ins.len()],
        }
    }
}

pub fn apply_search_action(s: &SearchState, a: &SearchAction) -> Result<SearchState> {
    if s.is_terminal() {
        return Err(Error::HorizonExhausted {
            t: s.t,
            horizon: s.horizon(),
        });
    }
    let mut next = s.clone();
    if let SearchAction::Replace { out_card, in_card } = *a {
        if !s.x_p.contains(out_card) {
            return Err(Error::InvalidAction(format!("card {out_card} is not in the deck")));
        }
        if in_card >= s.n() || s.x_p.contains(in_card) {
            return Err(Error::InvalidAction(format!("card {in_card} cannot be added")));
        }
        next.x_p.remove(out_card);
        next.x_p.insert(in_card);
    }
    next.t += 1;
    Ok(next)
}

/// `exp(b · f)`.
pub fn reward_from_win_rate(f: f64, b: f64) -> f64 {
    (b * f).exp()
}

/// Reward for arriving at `s_next`: `exp(b · f(x_p; x_o))`, with `f`
/// estimated from `cfg.num_matches` matches under `root_seed`.
pub fn step_reward<E: WinRateEvaluator + ?Sized>(
    s_next: &SearchState,
    cfg: &RewardConfig,
    evaluator: &E,
    root_seed: u64,
) -> Result<f64> {
    if s_next.t == 0 {
        return Err(Error::invalid("reward is defined for successor states (t >= 1)"));
    }
    let f = evaluator.win_rate(&s_next.x_p, &s_next.x_o, cfg.num_matches, root_seed)?.value;
    Ok(reward_from_win_rate(f, cfg.b))
}

/// Undiscounted episode return.
pub fn episode_return(rewards: &[f64], horizon: usize) -> Result<f64> {
    if rewards.len() != horizon {
        return Err(Error::invalid(format!(
            "episode has {} rewards, expected D = {horizon}",
            rewards.len()
        )));
    }
    Ok(rewards.iter().sum())
}

pub fn write_transitions(mut out: impl Write, transitions: &[Transition]) -> Result<()> {
    for tr in transitions {
        serde_json::to_writer(&mut out, tr)?;
        out.write_all(b"\n").map_err(|e| Error::io("<transitions>", e))?;
    }
    Ok(())
}

pub fn read_transitions(input: impl BufRead) -> Result<Vec<Transition>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<transitions>", e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
