use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deck::DeckVector;
use crate::game::WinRateEvaluator;
use crate::{Error, Result};

/// Largest instance the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedDeck {
    pub deck: DeckVector,
    pub win_rate: f64,
}

/// `C(n, d)` as a float, so oversized counts do not overflow.
pub fn combinations(n: usize, d: usize) -> f64 {
    if d > n {
        return 0.0;
    }
    let d = d.min(n - d);
    (0..d).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Evaluates every size-`d` deck against `x_o` and ranks them by win rate,
/// best first, ties broken by lexicographic deck order. Every deck is
/// evaluated with the same root seed, so all candidates face identical
/// shuffles.
pub fn brute_force_solve<E: WinRateEvaluator + ?Sized>(
    evaluator: &E,
    x_o: &DeckVector,
    d: usize,
    matches_per_deck: u32,
    seed: u64,
) -> Result<Vec<RankedDeck>> {
    let n = x_o.len();
    if d == 0 || d >= n {
        return Err(Error::invalid(format!("deck size {d} must lie in 1..{n}")));
    }
    let count = combinations(n, d);
    if count > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::InstanceTooLarge {
            combinations: count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let decks: Vec<Vec<usize>> = (0..n).combinations(d).collect();
    let mut ranked = decks
        .par_iter()
        .map(|cards| {
            let deck = DeckVector::from_indices(n, cards)?;
            let win_rate = evaluator.win_rate(&deck, x_o, matches_per_deck, seed)?.value;
            Ok(RankedDeck { deck, win_rate })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.win_rate.total_cmp(&a.win_rate).then_with(|| a.deck.lex_cmp(&b.deck)));
    Ok(ranked)
}
