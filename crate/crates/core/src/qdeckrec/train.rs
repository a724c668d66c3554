use serde::{Deserialize, Serialize};

use super::agent::{select_action, td_error};
use super::features::state_features;
use super::mlp::MlpParams;
use super::replay::{PrioritizedReplay, ReplayConfig};
use crate::deck::random_deck_with;
use crate::game::WinRateEvaluator;
use crate::mdp::{apply_search_action, initial_state, reward_from_win_rate, RewardConfig, SearchAction, Transition};
use crate::seed::{self, tag};
use crate::timing::Stopwatch;
use crate::{Error, Result};

/// Linearly decaying exploration rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decrement_per_episode: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            decrement_per_episode: 0.0005,
            floor: 0.2,
        }
    }
}

impl EpsilonSchedule {
    /// ε after `episodes` completed episodes.
    pub fn value_after(&self, episodes: u64) -> f64 {
        (self.start - self.decrement_per_episode * episodes as f64).max(self.floor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Deck size `D`.
    pub d: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Batches sampled and applied after each episode.
    pub updates_per_episode: usize,
    /// Multiplier applied to rewards before they enter the replay buffer.
    /// `None` means `exp(−b)`, which maps the largest possible reward to 1.
    pub reward_scale: Option<f64>,
    /// Wall-clock training budget in seconds.
    pub budget_secs: Option<f64>,
    pub max_episodes: Option<u64>,
    pub seed: u64,
    pub reward: RewardConfig,
    pub epsilon: EpsilonSchedule,
    pub replay: ReplayConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d: 15,
            hidden: 128,
            learning_rate: 1e-3,
            batch_size: 64,
            updates_per_episode: 1,
            reward_scale: None,
            budget_secs: None,
            max_episodes: None,
            seed: 0,
            reward: RewardConfig::default(),
            epsilon: EpsilonSchedule::default(),
            replay: ReplayConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.d == 0 || self.d >= n {
            return Err(Error::invalid(format!("deck size {} must lie in 1..{n}", self.d)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("learning_rate must lie in (0, 1]"));
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::invalid("batch_size and hidden must be positive"));
        }
        if self.budget_secs.is_none() && self.max_episodes.is_none() {
            return Err(Error::invalid("set budget_secs or max_episodes"));
        }
        if let Some(s) = self.reward_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("reward_scale must be positive"));
            }
        }
        self.reward.validate()
    }

    pub fn effective_reward_scale(&self) -> f64 {
        self.reward_scale.unwrap_or_else(|| (-self.reward.b).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    MaxEpisodes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub episodes: u64,
    pub f_calls: u64,
    /// `Keep` steps whose reward reused the previous evaluation.
    pub keep_cache_hits: u64,
    pub updates: u64,
    /// ε used in each episode.
    pub epsilon: Vec<f64>,
    /// Mean squared TD error of each applied batch.
    pub loss: Vec<f64>,
    /// Estimated win rate of the deck each episode ended on.
    pub final_win_rate: Vec<f64>,
    pub replay_beta: f64,
    pub wall_s: f64,
    pub cpu_s: f64,
    pub stop: Option<StopReason>,
}

/// Snapshot handed to the observer after every episode.
pub struct TrainProgress<'a> {
    pub episodes: u64,
    pub theta: &'a MlpParams,
    pub log: &'a TrainLog,
}

pub fn train<E: WinRateEvaluator + ?Sized>(evaluator: &E, n: usize, cfg: &TrainConfig) -> Result<(MlpParams, TrainLog)> {
    train_with_observer(evaluator, n, cfg, &mut |_| {})
}

/// Runs episodes until the wall-time budget or the episode cap is hit.
///
/// Each episode draws a random opponent and starting deck, rolls out `D`
/// ε-greedy steps (one win-rate evaluation per step, except that `Keep`
/// reuses the previous step's value), stores the transitions and then
/// applies `updates_per_episode` prioritized batches of the TD update.
/// With `max_episodes` as the only limit the result is bit-reproducible.
pub fn train_with_observer<E: WinRateEvaluator + ?Sized>(
    evaluator: &E,
    n: usize,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&TrainProgress<'_>),
) -> Result<(MlpParams, TrainLog)> {
    cfg.validate(n)?;
    let watch = Stopwatch::start();
    let d = cfg.d;
    let scale = cfg.effective_reward_scale();
    let mut theta = MlpParams::init(2 * n + 1, cfg.hidden, seed::mix(cfg.seed, tag::INIT));
    let mut replay = PrioritizedReplay::new(cfg.replay)?;
    let mut log = TrainLog {
        episodes: 0,
        f_calls: 0,
        keep_cache_hits: 0,
        updates: 0,
        epsilon: Vec::new(),
        loss: Vec::new(),
        final_win_rate: Vec::new(),
        replay_beta: replay.beta(),
        wall_s: 0.0,
        cpu_s: 0.0,
        stop: None,
    };

    loop {
        if cfg.max_episodes.is_some_and(|m| log.episodes >= m) {
            log.stop = Some(StopReason::MaxEpisodes);
            break;
        }
        if cfg.budget_secs.is_some_and(|b| watch.wall_elapsed().as_secs_f64() >= b) {
            log.stop = Some(StopReason::Budget);
            break;
        }

        let episode = log.episodes;
        let ep_seed = seed::mix_all(cfg.seed, &[tag::EPISODE, episode]);
        let mut rng = seed::rng(ep_seed);
        let x_o = random_deck_with(n, d, &mut rng)?;
        let x_p0 = random_deck_with(n, d, &mut rng)?;
        let mut s = initial_state(x_p0, x_o)?;
        let epsilon = cfg.epsilon.value_after(episode);

        let mut prev_f: Option<f64> = None;
        let mut transitions = Vec::with_capacity(d);
        for t in 0..d {
            let a = select_action(&theta, &s, epsilon, &mut rng)?;
            let s_next = apply_search_action(&s, &a)?;
            let f = match (a, prev_f) {
                (SearchAction::Keep, Some(f)) => {
                    log.keep_cache_hits += 1;
                    f
                }
                _ => {
                    log.f_calls += 1;
                    let root = cfg.reward.reward_seed(ep_seed, t);
                    evaluator.win_rate(&s_next.x_p, &s_next.x_o, cfg.reward.num_matches, root)?.value
                }
            };
            prev_f = Some(f);
            transitions.push(Transition {
                s: s.clone(),
                a,
                r: reward_from_win_rate(f, cfg.reward.b) * scale,
                s_next: s_next.clone(),
            });
            s = s_next;
        }
        for tr in transitions {
            replay.insert(tr);
        }

        if replay.len() >= cfg.batch_size {
            let mut batch_rng = seed::rng(seed::mix(ep_seed, tag::BATCH));
            for _ in 0..cfg.updates_per_episode {
                let (next, loss, updates) = batch_update(&theta, &mut replay, cfg, &mut batch_rng)?;
                if !next.is_finite() || !loss.is_finite() {
                    return Err(Error::TrainingDiverged {
                        episodes: log.episodes,
                        last_finite: Box::new(theta),
                    });
                }
                theta = next;
                replay.update_td_errors(&updates);
                log.loss.push(loss);
                log.updates += 1;
            }
        }

        log.epsilon.push(epsilon);
        log.final_win_rate.push(prev_f.unwrap_or(f64::NAN));
        log.episodes += 1;
        log.replay_beta = replay.beta();
        observer(&TrainProgress {
            episodes: log.episodes,
            theta: &theta,
            log: &log,
        });
    }

    let t = watch.elapsed();
    log.wall_s = t.wall_s;
    log.cpu_s = t.cpu_s;
    Ok((theta, log))
}

/// New parameters, mean squared TD error and the new |δ| per replay slot.
type BatchOutcome = (MlpParams, f64, Vec<(usize, f64)>);

/// One importance-weighted TD step on a prioritized batch.
fn batch_update(
    theta: &MlpParams,
    replay: &mut PrioritizedReplay,
    cfg: &TrainConfig,
    rng: &mut seed::Rng,
) -> Result<BatchOutcome> {
    let batch = replay.sample(cfg.batch_size, rng)?;
    let mut acc = MlpParams::zeros(theta.input_dim, theta.hidden);
    let mut sq = 0.0;
    let mut updates = Vec::with_capacity(batch.len());
    for item in &batch {
        let delta = td_error(theta, item.transition)?;
        let phi = state_features(&item.transition.s_next);
        theta.accumulate_gradient(phi.as_slice(), item.weight * delta, &mut acc);
        sq += delta * delta;
        updates.push((item.index, delta));
    }
    let m = batch.len() as f64;
    let mut next = theta.clone();
    next.add_scaled(&acc, cfg.learning_rate / m);
    Ok((next, sq / m, updates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::DeckVector;
    use crate::game::FnEvaluator;

    fn card_sum_evaluator() -> FnEvaluator<impl Fn(&DeckVector, &DeckVector, u64) -> f64 + Sync> {
        // higher card ids are better
        FnEvaluator(|x: &DeckVector, _: &DeckVector, _| {
            let n = x.len() as f64;
            x.indices().map(|i| i as f64).sum::<f64>() / (x.count_ones() as f64 * (n - 1.0))
        })
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            d: 3,
            hidden: 16,
            batch_size: 8,
            max_episodes: Some(30),
            seed: 9,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn epsilon_schedule_values() {
        let e = EpsilonSchedule::default();
        for k in [0u64, 1000, 1600, 5000] {
            assert_eq!(e.value_after(k), (1.0 - 0.0005 * k as f64).max(0.2));
        }
        assert_eq!(e.value_after(0), 1.0);
        assert_eq!(e.value_after(1000), 0.5);
        assert_eq!(e.value_after(1600), 0.2);
        assert_eq!(e.value_after(5000), 0.2);
    }

    #[test]
    fn zero_budget_returns_initial_parameters() {
        let ev = card_sum_evaluator();
        let cfg = TrainConfig {
            budget_secs: Some(0.0),
            max_episodes: None,
            ..small_cfg()
        };
        let (theta, log) = train(&ev, 10, &cfg).unwrap();
        assert_eq!(theta, MlpParams::init(21, 16, seed::mix(cfg.seed, tag::INIT)));
        assert_eq!(log.episodes, 0);
        assert_eq!(log.f_calls, 0);
        assert_eq!(log.stop, Some(StopReason::Budget));
    }

    #[test]
    fn call_accounting_identity() {
        let ev = crate::game::CountingEvaluator::new(card_sum_evaluator());
        let cfg = small_cfg();
        let (_, log) = train(&ev, 10, &cfg).unwrap();
        assert_eq!(log.episodes, 30);
        assert_eq!(log.f_calls, ev.calls());
        assert_eq!(log.f_calls + log.keep_cache_hits, 30 * 3);
        assert_eq!(log.epsilon.len(), 30);
        assert!(log.updates > 0);
    }

    #[test]
    fn training_is_reproducible() {
        let ev = card_sum_evaluator();
        let a = train(&ev, 10, &small_cfg()).unwrap();
        let b = train(&ev, 10, &small_cfg()).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.loss, b.1.loss);
    }

    #[test]
    fn divergence_is_reported() {
        let ev = FnEvaluator(|_: &DeckVector, _: &DeckVector, _| 1.0);
        let cfg = TrainConfig {
            learning_rate: 1.0,
            reward_scale: Some(1e300),
            ..small_cfg()
        };
        match train(&ev, 10, &cfg) {
            Err(Error::TrainingDiverged { last_finite, .. }) => assert!(last_finite.is_finite()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let ev = card_sum_evaluator();
        let unbounded = TrainConfig {
            max_episodes: None,
            budget_secs: None,
            ..small_cfg()
        };
        assert!(train(&ev, 10, &unbounded).is_err());
        let bad_lr = TrainConfig {
            learning_rate: 0.0,
            ..small_cfg()
        };
        assert!(train(&ev, 10, &bad_lr).is_err());
    }
}
