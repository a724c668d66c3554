use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predictor::WinRatePredictor;
use crate::deck::{random_deck, DeckVector};
use crate::timing::Stopwatch;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Number of sampled decks `X`.
    pub x: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McLog {
    pub x: usize,
    pub predicted_win_rate: f64,
    /// Index of the winning sample in the seeded stream.
    pub winner_index: usize,
    pub f_calls: u64,
    pub wall_s: f64,
    pub cpu_s: f64,
}

/// Sample `i` of the stream for `seed`. Smaller `X` uses a prefix of the
/// same stream, so sample sets are nested.
pub fn mc_sample(n: usize, d: usize, seed: u64, i: usize) -> Result<DeckVector> {
    random_deck(n, d, crate::seed::mix(seed, i as u64))
}

fn best_in(
    predictor: &WinRatePredictor,
    x_o: &DeckVector,
    d: usize,
    seed: u64,
    range: std::ops::Range<usize>,
) -> Result<Option<(usize, f64)>> {
    let n = x_o.len();
    range
        .into_par_iter()
        .map(|i| Ok(Some((i, predictor.predict(&mc_sample(n, d, seed, i)?, x_o)?))))
        .try_reduce(|| None, |a, b| Ok(better(a, b)))
}

// higher score wins, then lower index
fn better(a: Option<(usize, f64)>, b: Option<(usize, f64)>) -> Option<(usize, f64)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Argmax of the predicted win rate over `X` random decks. Makes no
/// win-rate evaluations.
pub fn mc_solve(predictor: &WinRatePredictor, x_o: &DeckVector, d: usize, cfg: &McConfig) -> Result<(DeckVector, McLog)> {
    let mut out = mc_solve_nested(predictor, x_o, d, &[cfg.x], cfg.seed)?;
    Ok(out.remove(0))
}

/// Runs `mc_solve` for every `X` in ascending `xs` in a single pass over
/// the shared sample stream.
pub fn mc_solve_nested(
    predictor: &WinRatePredictor,
    x_o: &DeckVector,
    d: usize,
    xs: &[usize],
    seed: u64,
) -> Result<Vec<(DeckVector, McLog)>> {
    if xs.contains(&0) {
        return Err(Error::invalid("X must be at least 1"));
    }
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("X values must be ascending"));
    }
    let watch = Stopwatch::start();
    let mut best = None;
    let mut done = 0;
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        best = better(best, best_in(predictor, x_o, d, seed, done..x)?);
        done = x;
        let (i, score) = best.expect("at least one sample");
        let t = watch.elapsed();
        out.push((
            mc_sample(x_o.len(), d, seed, i)?,
            McLog {
                x,
                predicted_win_rate: score,
                winner_index: i,
                f_calls: 0,
                wall_s: t.wall_s,
                cpu_s: t.cpu_s,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdeckrec::MlpParams;

    fn predictor(n: usize) -> WinRatePredictor {
        WinRatePredictor {
            n,
            d: 4,
            params: MlpParams::init(2 * n, 8, 5),
            dataset_size: 0,
            matches_per_label: 0,
        }
    }

    #[test]
    fn single_sample_is_returned() {
        let p = predictor(12);
        let x_o = random_deck(12, 4, 1).unwrap();
        let (deck, log) = mc_solve(&p, &x_o, 4, &McConfig { x: 1, seed: 8 }).unwrap();
        assert_eq!(deck, mc_sample(12, 4, 8, 0).unwrap());
        assert_eq!(log.f_calls, 0);
    }

    #[test]
    fn nested_predictions_are_monotone() {
        let p = predictor(12);
        let x_o = random_deck(12, 4, 1).unwrap();
        let runs = mc_solve_nested(&p, &x_o, 4, &[1, 10, 100, 1000], 3).unwrap();
        assert!(runs.windows(2).all(|w| w[0].1.predicted_win_rate <= w[1].1.predicted_win_rate));
        for (deck, log) in &runs {
            let (single, single_log) = mc_solve(&p, &x_o, 4, &McConfig { x: log.x, seed: 3 }).unwrap();
            assert_eq!(&single, deck);
            assert_eq!(single_log.predicted_win_rate, log.predicted_win_rate);
        }
    }
}
