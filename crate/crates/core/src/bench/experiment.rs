use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::stats::{median, welch_test, WelchTest, SIGNIFICANCE_LEVEL};
use crate::baselines::{
    build_predictor_dataset, ga_search, mc_solve, train_predictor, GaConfig, McConfig, PredictorConfig,
    WinRatePredictor,
};
use crate::deck::{generate_instance_chain, random_deck, Candidate, DeckVector, InstanceSet, InstanceSetFile};
use crate::game::{generate_card_pool, CountingEvaluator, MatchEvaluator, ProxyConfig, WinRateEvaluator};
use crate::qdeckrec::{solve, train, Checkpoint, MlpParams, TrainConfig};
use crate::seed::{self, tag};
use crate::timing::Stopwatch;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub seed: u64,
    pub n: usize,
}

/// How the test instances are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSpec {
    /// Load instances from this file instead of generating a chain.
    pub instances_file: Option<PathBuf>,
    pub warmup: usize,
    /// Independent GA runs offering candidates each round.
    pub candidates_per_round: usize,
    /// Evaluation budget of each candidate-producing GA run.
    pub ga_f_calls: u64,
    pub num_matches: u32,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            instances_file: None,
            warmup: 0,
            candidates_per_round: 2,
            ga_f_calls: 50,
            num_matches: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Ga {
        name: String,
        #[serde(default)]
        max_f_calls: Option<u64>,
        #[serde(default)]
        budget_secs: Option<f64>,
        #[serde(default = "default_ga_matches")]
        num_matches: u32,
    },
    /// A trained policy, loaded from `checkpoint` or trained once with `train`.
    QDeckRec {
        name: String,
        #[serde(default)]
        checkpoint: Option<PathBuf>,
        #[serde(default)]
        train: Option<TrainConfig>,
    },
    /// Monte-Carlo search over a predictor, loaded from `predictor` or
    /// fitted once on a fresh dataset.
    Mc {
        name: String,
        x: usize,
        #[serde(default)]
        predictor: Option<PathBuf>,
        #[serde(default)]
        dataset_size: Option<usize>,
        #[serde(default = "default_label_matches")]
        matches_per_label: u32,
        #[serde(default)]
        fit: PredictorConfig,
    },
}

fn default_ga_matches() -> u32 {
    crate::game::DEFAULT_NUM_MATCHES
}

fn default_label_matches() -> u32 {
    100
}

impl AlgorithmSpec {
    pub fn name(&self) -> &str {
        match self {
            Self::Ga { name, .. } | Self::QDeckRec { name, .. } | Self::Mc { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pool: PoolSpec,
    pub d: usize,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub chain: ChainSpec,
    pub roster: Vec<AlgorithmSpec>,
    /// Matches used to re-evaluate every output deck.
    #[serde(default = "default_ga_matches")]
    pub eval_matches: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_instances() -> usize {
    20
}

fn default_runs() -> usize {
    10
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Configuration("runs must be at least 1".into()));
        }
        if self.roster.is_empty() {
            return Err(Error::Configuration("the algorithm roster is empty".into()));
        }
        if self.instances == 0 && self.chain.instances_file.is_none() {
            return Err(Error::Configuration("instances must be at least 1".into()));
        }
        if self.d == 0 || self.d >= self.pool.n {
            return Err(Error::Configuration(format!("d = {} must lie in 1..{}", self.d, self.pool.n)));
        }
        let mut names: Vec<&str> = self.roster.iter().map(AlgorithmSpec::name).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Configuration("algorithm names must be unique".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: usize,
    pub x_o: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub algo: String,
    pub instance_id: usize,
    pub run: usize,
    pub deck: Vec<usize>,
    /// Re-evaluated with `eval_matches` matches under a seed unused by any search.
    pub win_rate: f64,
    pub f_calls: u64,
    pub wall_s: f64,
    pub cpu_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceAggregate {
    pub algo: String,
    pub instance_id: usize,
    pub median_win_rate: f64,
    pub median_f_calls: f64,
    pub median_wall_s: f64,
    pub median_cpu_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmAggregate {
    pub algo: String,
    pub mean_win_rate: f64,
    pub mean_f_calls: f64,
    pub mean_wall_s: f64,
    pub mean_cpu_s: f64,
    pub instances: usize,
}

/// One-off preparation cost (policy training, predictor fitting).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparationRecord {
    pub algo: String,
    pub description: String,
    pub f_calls: u64,
    pub wall_s: f64,
    pub cpu_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub algo_a: String,
    pub algo_b: String,
    #[serde(flatten)]
    pub test: WelchTest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatTestReport {
    pub method: String,
    pub alpha: f64,
    pub pairs: Vec<PairTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub instances: Vec<InstanceRecord>,
    pub preparation: Vec<PreparationRecord>,
    pub rows: Vec<RunRow>,
    pub per_instance: Vec<InstanceAggregate>,
    pub aggregates: Vec<AlgorithmAggregate>,
    pub partial: bool,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

enum Prepared {
    Ga(GaConfig),
    Policy(MlpParams),
    Mc(WinRatePredictor, usize),
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn prepare<E: WinRateEvaluator + ?Sized>(
    spec: &AlgorithmSpec,
    index: usize,
    cfg: &ExperimentConfig,
    base: &Path,
    evaluator: &E,
    prep: &mut Vec<PreparationRecord>,
) -> Result<Prepared> {
    let n = cfg.pool.n;
    let algo_seed = seed::mix_all(cfg.seed, &[tag::INIT, index as u64]);
    match spec {
        AlgorithmSpec::Ga {
            max_f_calls,
            budget_secs,
            num_matches,
            ..
        } => {
            let ga = GaConfig {
                max_f_calls: *max_f_calls,
                budget_secs: *budget_secs,
                num_matches: *num_matches,
                ..GaConfig::default()
            };
            ga.validate()?;
            Ok(Prepared::Ga(ga))
        }
        AlgorithmSpec::QDeckRec {
            name,
            checkpoint,
            train: tc,
        } => match (checkpoint, tc) {
            (Some(path), _) => {
                let ck = Checkpoint::load(&resolve(base, path))
                    .map_err(|e| Error::Configuration(format!("{name}: cannot load checkpoint: {e}")))?;
                if ck.n != n || ck.d != cfg.d {
                    return Err(Error::Configuration(format!(
                        "{name}: checkpoint is for N = {}, D = {}",
                        ck.n, ck.d
                    )));
                }
                Ok(Prepared::Policy(ck.params()?))
            }
            (None, Some(tc)) => {
                let tc = TrainConfig { d: cfg.d, ..tc.clone() };
                let counter = CountingEvaluator::new(evaluator);
                let (theta, log) = train(&counter, n, &tc)?;
                prep.push(PreparationRecord {
                    algo: name.clone(),
                    description: format!("policy training, {} episodes", log.episodes),
                    f_calls: counter.calls(),
                    wall_s: log.wall_s,
                    cpu_s: log.cpu_s,
                });
                Ok(Prepared::Policy(theta))
            }
            (None, None) => Err(Error::Configuration(format!("{name}: needs a checkpoint or a train config"))),
        },
        AlgorithmSpec::Mc {
            name,
            x,
            predictor,
            dataset_size,
            matches_per_label,
            fit,
        } => {
            if *x == 0 {
                return Err(Error::Configuration(format!("{name}: X must be at least 1")));
            }
            match (predictor, dataset_size) {
                (Some(path), _) => {
                    let ck = Checkpoint::load(&resolve(base, path))
                        .map_err(|e| Error::Configuration(format!("{name}: cannot load predictor: {e}")))?;
                    let p = WinRatePredictor::from_checkpoint(&ck)?;
                    if p.n != n {
                        return Err(Error::Configuration(format!("{name}: predictor is for N = {}", p.n)));
                    }
                    Ok(Prepared::Mc(p, *x))
                }
                (None, Some(size)) => {
                    let watch = Stopwatch::start();
                    let counter = CountingEvaluator::new(evaluator);
                    let data = build_predictor_dataset(&counter, n, cfg.d, *size, *matches_per_label, algo_seed)?;
                    let fit = PredictorConfig {
                        seed: algo_seed,
                        ..fit.clone()
                    };
                    let (p, metrics) = train_predictor(&data, &fit)?;
                    let t = watch.elapsed();
                    prep.push(PreparationRecord {
                        algo: name.clone(),
                        description: format!(
                            "predictor fit on {size} pairs, cv mse {:.4}, cv r2 {:.3}",
                            metrics.cv_mse, metrics.cv_r2
                        ),
                        f_calls: counter.calls(),
                        wall_s: t.wall_s,
                        cpu_s: t.cpu_s,
                    });
                    Ok(Prepared::Mc(p, *x))
                }
                (None, None) => Err(Error::Configuration(format!(
                    "{name}: needs a predictor checkpoint or a dataset_size"
                ))),
            }
        }
    }
}

fn build_instances<E: WinRateEvaluator + ?Sized>(
    cfg: &ExperimentConfig,
    base: &Path,
    pool: &crate::game::CardPool,
    evaluator: &E,
) -> Result<InstanceSet> {
    let proxies = (ProxyConfig::default(), ProxyConfig::default());
    if let Some(path) = &cfg.chain.instances_file {
        let path = resolve(base, path);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let parsed: InstanceSetFile = serde_json::from_reader(BufReader::new(file))?;
        let set = InstanceSet::from_file(parsed, proxies)?;
        if set.n != cfg.pool.n || set.d != cfg.d {
            return Err(Error::Configuration("instance file does not match the pool and deck size".into()));
        }
        return Ok(set);
    }
    let chain_seed = seed::mix(cfg.seed, tag::CHAIN);
    let provider = |round: usize, x_o: &DeckVector| -> Result<Vec<Candidate>> {
        (0..cfg.chain.candidates_per_round.max(1))
            .map(|c| {
                let ga = GaConfig {
                    max_f_calls: Some(cfg.chain.ga_f_calls),
                    num_matches: cfg.chain.num_matches,
                    seed: seed::mix_all(chain_seed, &[round as u64, c as u64]),
                    ..GaConfig::default()
                };
                let (deck, log) = ga_search(evaluator, x_o, cfg.d, &ga)?;
                Ok(Candidate {
                    source: format!("ga#{c}"),
                    deck,
                    win_rate: log.best_fitness,
                })
            })
            .collect()
    };
    generate_instance_chain(pool, cfg.d, proxies, provider, cfg.instances, cfg.chain.warmup, chain_seed)
}

/// Runs every roster algorithm `runs` times on every instance.
///
/// An algorithm that cannot be prepared (missing checkpoint, bad config)
/// or that fails mid-run is recorded in `failures` and the result is
/// marked partial; the other algorithms still run. `observer` sees the
/// result after every row so callers can persist progress.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    base_dir: &Path,
    observer: &mut dyn FnMut(&ExperimentResult),
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let pool = Arc::new(generate_card_pool(cfg.pool.seed, cfg.pool.n)?);
    let evaluator = MatchEvaluator::new(pool.clone(), (ProxyConfig::default(), ProxyConfig::default()));
    let set = build_instances(cfg, base_dir, &pool, &evaluator)?;

    let mut result = ExperimentResult {
        config: cfg.clone(),
        instances: set
            .instances
            .iter()
            .map(|i| InstanceRecord {
                id: i.id,
                x_o: i.x_o.to_indices(),
            })
            .collect(),
        preparation: Vec::new(),
        rows: Vec::new(),
        per_instance: Vec::new(),
        aggregates: Vec::new(),
        partial: false,
        failures: Vec::new(),
        notes: vec![
            "win_rate is re-evaluated under a seed disjoint from every search seed; that evaluation is excluded from f_calls and timings".into(),
            "f_calls, wall_s and cpu_s cover the search only; one-off training and predictor fitting are listed under preparation".into(),
            "cpu_s is process CPU time summed over all worker threads".into(),
            format!(
                "pairwise tests: Welch's unequal-variance t test on per-instance median win rates, paired by instance, two-tailed, alpha = {SIGNIFICANCE_LEVEL}"
            ),
        ],
    };

    for (ai, spec) in cfg.roster.iter().enumerate() {
        let prepared = match prepare(spec, ai, cfg, base_dir, &evaluator, &mut result.preparation) {
            Ok(p) => p,
            Err(e) => {
                result.partial = true;
                result.failures.push(format!("{}: {e}", spec.name()));
                observer(&result);
                continue;
            }
        };
        'instances: for inst in &set.instances {
            for run in 0..cfg.runs {
                let run_seed = seed::mix_all(cfg.seed, &[tag::RUN, ai as u64, inst.id as u64, run as u64]);
                match run_once(&prepared, &evaluator, &inst.x_o, cfg, run_seed) {
                    Ok((deck, f_calls, wall_s, cpu_s)) => {
                        let eval_seed = seed::mix_all(cfg.seed, &[tag::EVAL, inst.id as u64]);
                        let win_rate = evaluator.win_rate(&deck, &inst.x_o, cfg.eval_matches, eval_seed)?.value;
                        result.rows.push(RunRow {
                            algo: spec.name().to_string(),
                            instance_id: inst.id,
                            run,
                            deck: deck.to_indices(),
                            win_rate,
                            f_calls,
                            wall_s,
                            cpu_s,
                        });
                        observer(&result);
                    }
                    Err(e) => {
                        result.partial = true;
                        result.failures.push(format!("{} on instance {}: {e}", spec.name(), inst.id));
                        result.rows.retain(|r| r.algo != spec.name());
                        observer(&result);
                        break 'instances;
                    }
                }
            }
        }
    }

    aggregate(&mut result);
    Ok(result)
}

fn run_once(
    prepared: &Prepared,
    evaluator: &MatchEvaluator,
    x_o: &DeckVector,
    cfg: &ExperimentConfig,
    run_seed: u64,
) -> Result<(DeckVector, u64, f64, f64)> {
    match prepared {
        Prepared::Ga(ga) => {
            let counter = CountingEvaluator::new(evaluator);
            let ga = GaConfig {
                seed: run_seed,
                ..ga.clone()
            };
            let (deck, log) = ga_search(&counter, x_o, cfg.d, &ga)?;
            Ok((deck, counter.calls(), log.wall_s, log.cpu_s))
        }
        Prepared::Policy(theta) => {
            let x_p0 = random_deck(cfg.pool.n, cfg.d, run_seed)?;
            let (deck, log) = solve(theta, x_o, &x_p0)?;
            Ok((deck, log.f_calls, log.wall_s, log.cpu_s))
        }
        Prepared::Mc(p, x) => {
            let (deck, log) = mc_solve(p, x_o, cfg.d, &McConfig { x: *x, seed: run_seed })?;
            Ok((deck, log.f_calls, log.wall_s, log.cpu_s))
        }
    }
}

/// Fills per-instance medians and per-algorithm means from the rows.
pub fn aggregate(result: &mut ExperimentResult) {
    result.per_instance.clear();
    result.aggregates.clear();
    for spec in &result.config.roster {
        let name = spec.name();
        let mut per = Vec::new();
        for inst in &result.instances {
            let rows: Vec<&RunRow> = result
                .rows
                .iter()
                .filter(|r| r.algo == name && r.instance_id == inst.id)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let col = |f: fn(&RunRow) -> f64| median(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            per.push(InstanceAggregate {
                algo: name.to_string(),
                instance_id: inst.id,
                median_win_rate: col(|r| r.win_rate),
                median_f_calls: col(|r| r.f_calls as f64),
                median_wall_s: col(|r| r.wall_s),
                median_cpu_s: col(|r| r.cpu_s),
            });
        }
        if per.is_empty() {
            continue;
        }
        let k = per.len() as f64;
        let mean = |f: fn(&InstanceAggregate) -> f64| per.iter().map(f).sum::<f64>() / k;
        result.aggregates.push(AlgorithmAggregate {
            algo: name.to_string(),
            mean_win_rate: mean(|a| a.median_win_rate),
            mean_f_calls: mean(|a| a.median_f_calls),
            mean_wall_s: mean(|a| a.median_wall_s),
            mean_cpu_s: mean(|a| a.median_cpu_s),
            instances: per.len(),
        });
        result.per_instance.extend(per);
    }
}

/// Welch tests between every pair of algorithms with complete results.
pub fn stat_tests(result: &ExperimentResult) -> StatTestReport {
    let medians = |algo: &str| -> Vec<f64> {
        result
            .per_instance
            .iter()
            .filter(|a| a.algo == algo)
            .map(|a| a.median_win_rate)
            .collect()
    };
    let complete: Vec<&str> = result
        .aggregates
        .iter()
        .filter(|a| a.instances == result.instances.len())
        .map(|a| a.algo.as_str())
        .collect();
    let mut pairs = Vec::new();
    for (i, a) in complete.iter().enumerate() {
        for b in &complete[i + 1..] {
            if let Ok(test) = welch_test(&medians(a), &medians(b)) {
                pairs.push(PairTest {
                    algo_a: a.to_string(),
                    algo_b: b.to_string(),
                    test,
                });
            }
        }
    }
    StatTestReport {
        method: "welch_unequal_variance_on_instance_medians".into(),
        alpha: SIGNIFICANCE_LEVEL,
        pairs,
    }
}
