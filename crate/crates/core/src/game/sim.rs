use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cards::CardPool;
use super::policy::{greedy_policy_move, ProxyConfig};
use super::state::{GameAction, GameState, MatchOutcome, Player, Winner};
use crate::deck::DeckVector;
use crate::seed::{self, tag};
use crate::{Error, Result};

/// Matches per win-rate evaluation unless configured otherwise.
pub const DEFAULT_NUM_MATCHES: u32 = 300;

/// Estimated win probability of P0's deck, draws counting half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub value: f64,
    pub num_matches: u32,
    pub num_draws: u32,
}

impl WinRate {
    pub fn from_counts(wins: u32, draws: u32, num_matches: u32) -> Self {
        Self {
            value: (f64::from(wins) + 0.5 * f64::from(draws)) / f64::from(num_matches),
            num_matches,
            num_draws: draws,
        }
    }
}

fn check_deck(pool: &CardPool, x: &DeckVector, who: &str) -> Result<()> {
    if x.len() != pool.n_cards {
        return Err(Error::invalid(format!(
            "{who} deck has length {} but the pool has {} cards",
            x.len(),
            pool.n_cards
        )));
    }
    if x.count_ones() == 0 {
        return Err(Error::invalid(format!("{who} deck is empty")));
    }
    Ok(())
}

/// Two copies of every selected card, shuffled.
fn build_library(x: &DeckVector, rng: &mut seed::Rng) -> Vec<u16> {
    let mut lib: Vec<u16> = x.indices().flat_map(|i| [i as u16, i as u16]).collect();
    lib.shuffle(rng);
    lib
}

/// The opening position of a match: both libraries shuffled from
/// `match_seed` and hands dealt.
pub fn initial_game_state<'p>(
    pool: &'p CardPool,
    deck_p: &DeckVector,
    deck_o: &DeckVector,
    match_seed: u64,
    first_player: Player,
) -> Result<GameState<'p>> {
    check_deck(pool, deck_p, "player")?;
    check_deck(pool, deck_o, "opponent")?;
    let mut rng = seed::rng(seed::mix(match_seed, tag::SHUFFLE));
    let lib_p = build_library(deck_p, &mut rng);
    let lib_o = build_library(deck_o, &mut rng);
    Ok(GameState::new(pool, lib_p, lib_o, first_player, match_seed))
}

fn play_out(
    mut state: GameState<'_>,
    proxies: &(ProxyConfig, ProxyConfig),
    mut observe: impl FnMut(&GameState<'_>, &GameAction),
) -> Result<MatchOutcome> {
    loop {
        if let Some(outcome) = state.outcome() {
            return Ok(outcome);
        }
        let proxy = match state.active {
            Player::P0 => &proxies.0,
            Player::P1 => &proxies.1,
        };
        let action = greedy_policy_move(&state, proxy)?;
        observe(&state, &action);
        state.apply_in_place(&action);
    }
}

/// Plays one match between `deck_p` (P0) and `deck_o` (P1), both sides
/// driven by their greedy proxies.
pub fn simulate_match(
    pool: &CardPool,
    deck_p: &DeckVector,
    deck_o: &DeckVector,
    proxies: &(ProxyConfig, ProxyConfig),
    match_seed: u64,
    first_player: Player,
) -> Result<MatchOutcome> {
    let state = initial_game_state(pool, deck_p, deck_o, match_seed, first_player)?;
    play_out(state, proxies, |_, _| {})
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub turn: u32,
    pub player: Player,
    pub hero_health: [i32; 2],
    pub action: GameAction,
}

/// Like [`simulate_match`], also recording every action taken.
pub fn simulate_match_transcript(
    pool: &CardPool,
    deck_p: &DeckVector,
    deck_o: &DeckVector,
    proxies: &(ProxyConfig, ProxyConfig),
    match_seed: u64,
    first_player: Player,
) -> Result<(MatchOutcome, Vec<TranscriptEntry>)> {
    let state = initial_game_state(pool, deck_p, deck_o, match_seed, first_player)?;
    let mut log = Vec::new();
    let outcome = play_out(state, proxies, |s, a| {
        log.push(TranscriptEntry {
            turn: s.turn_number,
            player: s.active,
            hero_health: [s.players[0].hero_health, s.players[1].hero_health],
            action: *a,
        })
    })?;
    Ok((outcome, log))
}

/// Writes a transcript as JSON lines.
pub fn write_transcript(mut out: impl Write, entries: &[TranscriptEntry]) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Seed of match `index` under `root_seed`.
pub fn match_seed(root_seed: u64, index: u32) -> u64 {
    seed::mix_all(root_seed, &[tag::MATCH, u64::from(index)])
}

/// Estimates the win rate of `x_p` against `x_o` over `num_matches`
/// matches. Match `i` uses seed `match_seed(root_seed, i)` and P0 moves
/// first on even `i`, so the result does not depend on execution order.
pub fn evaluate_win_rate(
    pool: &CardPool,
    x_p: &DeckVector,
    x_o: &DeckVector,
    proxies: &(ProxyConfig, ProxyConfig),
    num_matches: u32,
    root_seed: u64,
) -> Result<WinRate> {
    if num_matches < 2 || !num_matches.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "num_matches must be even and at least 2, got {num_matches}"
        )));
    }
    check_deck(pool, x_p, "player")?;
    check_deck(pool, x_o, "opponent")?;
    let (wins, draws) = (0..num_matches)
        .into_par_iter()
        .map(|i| {
            let first = if i % 2 == 0 { Player::P0 } else { Player::P1 };
            simulate_match(pool, x_p, x_o, proxies, match_seed(root_seed, i), first).map(|o| {
                match o.winner {
                    Winner::P0 => (1u32, 0u32),
                    Winner::Draw => (0, 1),
                    Winner::P1 => (0, 0),
                }
            })
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(WinRate::from_counts(wins, draws, num_matches))
}

/// The black-box objective `f(x_p; x_o)`.
pub trait WinRateEvaluator: Sync {
    fn win_rate(
        &self,
        x_p: &DeckVector,
        x_o: &DeckVector,
        num_matches: u32,
        root_seed: u64,
    ) -> Result<WinRate>;
}

impl<E: WinRateEvaluator + ?Sized> WinRateEvaluator for &E {
    fn win_rate(&self, x_p: &DeckVector, x_o: &DeckVector, n: u32, seed: u64) -> Result<WinRate> {
        (**self).win_rate(x_p, x_o, n, seed)
    }
}

/// Win rates from simulated matches on a fixed pool and pair of proxies.
#[derive(Clone, Debug)]
pub struct MatchEvaluator {
    pub pool: Arc<CardPool>,
    pub proxies: (ProxyConfig, ProxyConfig),
}

impl MatchEvaluator {
    pub fn new(pool: Arc<CardPool>, proxies: (ProxyConfig, ProxyConfig)) -> Self {
        Self { pool, proxies }
    }
}

impl WinRateEvaluator for MatchEvaluator {
    fn win_rate(&self, x_p: &DeckVector, x_o: &DeckVector, n: u32, seed: u64) -> Result<WinRate> {
        evaluate_win_rate(&self.pool, x_p, x_o, &self.proxies, n, seed)
    }
}

/// Wraps a closure `(x_p, x_o, root_seed) -> f` as an evaluator.
pub struct FnEvaluator<F>(pub F);

impl<F> WinRateEvaluator for FnEvaluator<F>
where
    F: Fn(&DeckVector, &DeckVector, u64) -> f64 + Sync,
{
    fn win_rate(&self, x_p: &DeckVector, x_o: &DeckVector, n: u32, seed: u64) -> Result<WinRate> {
        Ok(WinRate {
            value: (self.0)(x_p, x_o, seed),
            num_matches: n,
            num_draws: 0,
        })
    }
}

/// Counts calls into the wrapped evaluator. One call is one `f(·)`
/// evaluation, however many matches it simulates.
pub struct CountingEvaluator<E> {
    inner: E,
    calls: AtomicU64,
}

impl<E> CountingEvaluator<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: WinRateEvaluator> WinRateEvaluator for CountingEvaluator<E> {
    fn win_rate(&self, x_p: &DeckVector, x_o: &DeckVector, n: u32, seed: u64) -> Result<WinRate> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.win_rate(x_p, x_o, n, seed)
    }
}
