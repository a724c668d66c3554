use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::state_features;
use super::mlp::MlpParams;
use super::sweep::{check_theta, greedy_action, max_q};
use crate::deck::DeckVector;
use crate::mdp::{action_at, apply_search_action, initial_state, SearchAction, SearchState, Transition};
use crate::timing::Stopwatch;
use crate::{Error, Result};

/// ε-greedy choice: with probability ε a uniformly random action, otherwise
/// the greedy one (`Keep` wins ties).
pub fn select_action(theta: &MlpParams, s: &SearchState, epsilon: f64, rng: &mut impl Rng) -> Result<SearchAction> {
    if s.is_terminal() {
        return Err(Error::HorizonExhausted {
            t: s.t,
            horizon: s.horizon(),
        });
    }
    if rng.gen::<f64>() < epsilon {
        let outs = s.x_p.to_indices();
        let ins: Vec<usize> = s.x_p.complement_indices().collect();
        let k = rng.gen_range(0..s.num_actions());
        return Ok(action_at(k, &outs, &ins));
    }
    Ok(greedy_action(theta, s)?.0)
}

/// `Q_θ(s, a)`, i.e. the network applied to the successor's features.
pub fn q_value(theta: &MlpParams, s_next: &SearchState) -> Result<f64> {
    theta.forward(state_features(s_next).as_slice())
}

/// `δ = r + max_a′ Q_θ(s′, a′) − Q_θ(s, a)`, with the bootstrap term zero
/// when `s′` ends the episode.
pub fn td_error(theta: &MlpParams, tr: &Transition) -> Result<f64> {
    Ok(tr.r + max_q(theta, &tr.s_next)? - q_value(theta, &tr.s_next)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveLog {
    pub q_evaluations: u64,
    /// Win-rate evaluations made while solving; always zero.
    pub f_calls: u64,
    pub actions: Vec<SearchAction>,
    pub wall_s: f64,
    pub cpu_s: f64,
}

/// Follows the greedy policy for `D` steps from `x_p0` against `x_o`.
/// No win-rate evaluation is made.
pub fn solve(theta: &MlpParams, x_o: &DeckVector, x_p0: &DeckVector) -> Result<(DeckVector, SolveLog)> {
    check_theta(theta, x_o.len())?;
    let watch = Stopwatch::start();
    let mut s = initial_state(x_p0.clone(), x_o.clone())?;
    let mut q_evaluations = 0u64;
    let mut actions = Vec::with_capacity(s.horizon());
    while !s.is_terminal() {
        let (a, _, evals) = greedy_action(theta, &s)?;
        q_evaluations += evals as u64;
        s = apply_search_action(&s, &a)?;
        actions.push(a);
    }
    let t = watch.elapsed();
    Ok((
        s.x_p,
        SolveLog {
            q_evaluations,
            f_calls: 0,
            actions,
            wall_s: t.wall_s,
            cpu_s: t.cpu_s,
        },
    ))
}
