use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use deckrec::baselines::{
    brute_force_solve, build_predictor_dataset, ga_search, mc_solve, train_predictor, GaConfig, McConfig,
    PredictorConfig, WinRatePredictor,
};
use deckrec::bench::{emit_report, run_experiment, stat_tests, ExperimentConfig};
use deckrec::deck::{random_deck, DeckVector};
use deckrec::game::{generate_card_pool, CardPool, MatchEvaluator, ProxyConfig};
use deckrec::qdeckrec::{solve, train_with_observer, Checkpoint, TrainConfig, TrainLog};
use deckrec::qdeckrec::RngState;
use deckrec::Error;

#[derive(Parser)]
#[command(name = "deckrec", version, about = "Deck recommendation by learned search and baselines")]
struct Cli {
    /// Master seed; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Size of the match worker pool (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a card pool.
    Genpool {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a search policy and write a checkpoint.
    Train(TrainArgs),
    /// Build a deck with a trained policy, without simulating matches.
    Solve {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Opponent deck as comma-separated card ids.
        #[arg(long)]
        opponent: String,
        /// Starting deck; random from --seed when omitted.
        #[arg(long)]
        init: Option<String>,
        /// Pool file, used to list card details.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Genetic-algorithm search against one opponent.
    Ga {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        opponent: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_f_calls: Option<u64>,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        matches: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo search over a win-rate predictor.
    Mc {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        opponent: String,
        /// Number of sampled decks.
        #[arg(long)]
        x: usize,
        /// Predictor checkpoint; when omitted one is fitted on a fresh dataset.
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        dataset_size: usize,
        #[arg(long, default_value_t = 100)]
        matches_per_label: u32,
        /// Where to save a freshly fitted predictor.
        #[arg(long)]
        save_predictor: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank every deck against one opponent.
    Brute {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        opponent: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 300)]
        matches: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark described by a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    pool: PathBuf,
    /// TrainConfig JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    updates_per_episode: Option<usize>,
    #[arg(long)]
    reward_scale: Option<f64>,
    #[arg(long)]
    matches: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    Partial(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::TrainingDiverged { .. }) => 3,
            CliError::Core(Error::InstanceTooLarge { .. }) => 4,
            CliError::Partial(_) => 5,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Partial(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Genpool { n, out } => {
            let pool = generate_card_pool(seed.unwrap_or(0), n)?;
            write_text(&out, &pool.to_json()?)?;
            println!("wrote {n}-card pool to {}", out.display());
            Ok(())
        }
        Command::Train(args) => cmd_train(args, seed),
        Command::Solve {
            checkpoint,
            opponent,
            init,
            pool,
            out,
        } => cmd_solve(&checkpoint, &opponent, init.as_deref(), pool.as_deref(), out.as_deref(), seed),
        Command::Ga {
            pool,
            opponent,
            config,
            max_f_calls,
            budget,
            matches,
            out,
        } => {
            let pool = load_pool(&pool)?;
            let x_o = parse_deck(&opponent, pool.n_cards)?;
            let mut cfg: GaConfig = match config {
                Some(p) => read_json(&p)?,
                None => GaConfig::default(),
            };
            if max_f_calls.is_some() {
                cfg.max_f_calls = max_f_calls;
            }
            if budget.is_some() {
                cfg.budget_secs = budget;
            }
            if let Some(m) = matches {
                cfg.num_matches = m;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let ev = evaluator(pool.clone());
            let (deck, log) = ga_search(&ev, &x_o, x_o.count_ones(), &cfg)?;
            print_deck(&deck, Some(&pool));
            println!("best fitness {:.4} after {} f calls", log.best_fitness, log.f_calls);
            emit(out.as_deref(), &Output {
                command: "ga",
                config: serde_json::json!({ "ga": cfg, "opponent": x_o.to_indices(), "pool_seed": pool.seed }),
                deck: deck.to_indices(),
                log: serde_json::to_value(&log).map_err(Error::from)?,
            })
        }
        Command::Mc {
            pool,
            opponent,
            x,
            predictor,
            dataset_size,
            matches_per_label,
            save_predictor,
            out,
        } => {
            let pool = load_pool(&pool)?;
            let x_o = parse_deck(&opponent, pool.n_cards)?;
            let d = x_o.count_ones();
            let seed = seed.unwrap_or(0);
            let (model, fitted) = match &predictor {
                Some(p) => (WinRatePredictor::from_checkpoint(&Checkpoint::load(p)?)?, None),
                None => {
                    let ev = evaluator(pool.clone());
                    let data = build_predictor_dataset(&ev, pool.n_cards, d, dataset_size, matches_per_label, seed)?;
                    let (model, metrics) = train_predictor(&data, &PredictorConfig { seed, ..PredictorConfig::default() })?;
                    println!("predictor cv mse {:.4}, cv r2 {:.3}", metrics.cv_mse, metrics.cv_r2);
                    if let Some(path) = &save_predictor {
                        let mut ck = model.to_checkpoint();
                        ck.pool_seed = Some(pool.seed);
                        ck.save(path)?;
                    }
                    (model, Some(metrics))
                }
            };
            if model.n != pool.n_cards {
                return Err(CliError::Usage(format!("predictor is for N = {}, pool has {}", model.n, pool.n_cards)));
            }
            let (deck, log) = mc_solve(&model, &x_o, d, &McConfig { x, seed })?;
            print_deck(&deck, Some(&pool));
            println!("predicted win rate {:.4}, 0 f calls", log.predicted_win_rate);
            emit(out.as_deref(), &Output {
                command: "mc",
                config: serde_json::json!({
                    "x": x, "seed": seed, "opponent": x_o.to_indices(), "pool_seed": pool.seed,
                    "predictor": predictor, "dataset_size": dataset_size, "matches_per_label": matches_per_label,
                    "predictor_metrics": fitted,
                }),
                deck: deck.to_indices(),
                log: serde_json::to_value(&log).map_err(Error::from)?,
            })
        }
        Command::Brute {
            pool,
            opponent,
            d,
            matches,
            out,
        } => {
            let pool = load_pool(&pool)?;
            let x_o = parse_deck(&opponent, pool.n_cards)?;
            let d = d.unwrap_or(x_o.count_ones());
            let seed = seed.unwrap_or(0);
            let ranked = brute_force_solve(&evaluator(pool.clone()), &x_o, d, matches, seed)?;
            print_deck(&ranked[0].deck, Some(&pool));
            println!("ranked {} decks; best win rate {:.4}", ranked.len(), ranked[0].win_rate);
            let rows: Vec<_> = ranked
                .iter()
                .map(|r| serde_json::json!({ "deck": r.deck.to_indices(), "win_rate": r.win_rate }))
                .collect();
            emit(out.as_deref(), &Output {
                command: "brute",
                config: serde_json::json!({ "d": d, "matches": matches, "seed": seed, "opponent": x_o.to_indices(), "pool_seed": pool.seed }),
                deck: ranked[0].deck.to_indices(),
                log: serde_json::json!({ "ranking": rows }),
            })
        }
        Command::Bench { config, out } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let partial_dir = out.clone();
            let mut observer = |r: &deckrec::bench::ExperimentResult| {
                // keep progress on disk in case the run is interrupted
                let mut snapshot = r.clone();
                deckrec::bench::aggregate(&mut snapshot);
                let _ = emit_report(&snapshot, &stat_tests(&snapshot), &partial_dir);
            };
            let result = run_experiment(&cfg, &base, &mut observer)?;
            let stats = stat_tests(&result);
            let (json, table) = emit_report(&result, &stats, &out)?;
            print!("{}", fs::read_to_string(&table).unwrap_or_default());
            println!("wrote {} and {}", json.display(), table.display());
            if result.partial {
                return Err(CliError::Partial(format!("{} algorithm failure(s)", result.failures.len())));
            }
            Ok(())
        }
    }
}

fn cmd_train(args: TrainArgs, seed: Option<u64>) -> CliResult<()> {
    let pool = load_pool(&args.pool)?;
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if args.budget.is_some() {
        cfg.budget_secs = args.budget;
    }
    if args.episodes.is_some() {
        cfg.max_episodes = args.episodes;
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { cfg.$field = v; } )* };
    }
    set!(d, hidden, learning_rate, batch_size, updates_per_episode);
    if args.reward_scale.is_some() {
        cfg.reward_scale = args.reward_scale;
    }
    if let Some(m) = args.matches {
        cfg.reward.num_matches = m;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let n = pool.n_cards;
    let ev = evaluator(pool.clone());
    let config_json = serde_json::to_value(&cfg).map_err(Error::from)?;
    let make = |theta: &deckrec::qdeckrec::MlpParams, log: &TrainLog| {
        let mut ck = Checkpoint::new("qdeckrec", n, cfg.d, theta);
        ck.pool_seed = Some(pool.seed);
        ck.train_config = config_json.clone();
        ck.episode_count = log.episodes;
        ck.rng_state = RngState {
            seed: cfg.seed,
            next_episode: log.episodes,
            replay_beta: log.replay_beta,
        };
        ck
    };
    let mut save_error = None;
    let mut observer = |p: &deckrec::qdeckrec::TrainProgress<'_>| {
        if p.episodes.is_multiple_of(50) {
            if let Err(e) = make(p.theta, p.log).save(&args.out) {
                save_error.get_or_insert(e);
            }
        }
    };
    match train_with_observer(&ev, n, &cfg, &mut observer) {
        Ok((theta, log)) => {
            if let Some(e) = save_error {
                return Err(e.into());
            }
            make(&theta, &log).save(&args.out)?;
            let log_path = sibling(&args.out, "log.json");
            write_text(
                &log_path,
                &serde_json::to_string_pretty(&serde_json::json!({ "config": cfg, "log": log })).map_err(Error::from)?,
            )?;
            println!(
                "trained {} episodes ({} f calls) in {:.1} s; checkpoint {}",
                log.episodes,
                log.f_calls,
                log.wall_s,
                args.out.display()
            );
            Ok(())
        }
        Err(Error::TrainingDiverged { episodes, last_finite }) => {
            let mut ck = Checkpoint::new("qdeckrec", n, cfg.d, &last_finite);
            ck.pool_seed = Some(pool.seed);
            ck.train_config = config_json;
            ck.episode_count = episodes;
            ck.save(&args.out)?;
            Err(Error::TrainingDiverged { episodes, last_finite }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_solve(
    checkpoint: &Path,
    opponent: &str,
    init: Option<&str>,
    pool: Option<&Path>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let theta = ck.params()?;
    let x_o = parse_deck(opponent, ck.n)?;
    if x_o.count_ones() != ck.d {
        return Err(CliError::Usage(format!(
            "opponent has {} cards, the policy was trained for D = {}",
            x_o.count_ones(),
            ck.d
        )));
    }
    let seed = seed.unwrap_or(0);
    let x_p0 = match init {
        Some(s) => parse_deck(s, ck.n)?,
        None => random_deck(ck.n, ck.d, seed)?,
    };
    let pool = pool.map(load_pool).transpose()?;
    let (deck, log) = solve(&theta, &x_o, &x_p0)?;
    print_deck(&deck, pool.as_deref());
    println!("{} Q evaluations, {} f calls, {:.4} s", log.q_evaluations, log.f_calls, log.wall_s);
    emit(out, &Output {
        command: "solve",
        config: serde_json::json!({
            "checkpoint": checkpoint, "opponent": x_o.to_indices(), "init": x_p0.to_indices(), "seed": seed,
        }),
        deck: deck.to_indices(),
        log: serde_json::to_value(&log).map_err(Error::from)?,
    })
}

#[derive(Serialize)]
struct Output {
    command: &'static str,
    config: serde_json::Value,
    deck: Vec<usize>,
    log: serde_json::Value,
}

fn emit(path: Option<&Path>, output: &Output) -> CliResult<()> {
    if let Some(path) = path {
        write_text(path, &serde_json::to_string_pretty(output).map_err(Error::from)?)?;
    }
    Ok(())
}

fn evaluator(pool: Arc<CardPool>) -> MatchEvaluator {
    MatchEvaluator::new(pool, (ProxyConfig::default(), ProxyConfig::default()))
}

fn load_pool(path: &Path) -> CliResult<Arc<CardPool>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Arc::new(CardPool::from_json(&text)?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

/// Comma-separated card ids.
fn parse_deck(text: &str, n: usize) -> CliResult<DeckVector> {
    let ids = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad deck {text:?}: {e}")))?;
    Ok(DeckVector::from_indices(n, &ids)?)
}

fn print_deck(deck: &DeckVector, pool: Option<&CardPool>) {
    println!("deck: {}", deck.to_indices().iter().map(usize::to_string).collect::<Vec<_>>().join(","));
    if let Some(pool) = pool {
        for i in deck.indices() {
            let c = pool.card(i as u16);
            match c.kind {
                deckrec::game::CardKind::Minion => {
                    println!("  {:>3}  minion  cost {:>2}  {}/{}", c.id, c.cost, c.attack, c.health)
                }
                deckrec::game::CardKind::Spell => println!("  {:>3}  spell   cost {:>2}", c.id, c.cost),
            }
        }
    }
}
