//! Comparison methods: a genetic algorithm on the true win rate, Monte
//! Carlo search over a learned win-rate predictor, and an exhaustive
//! oracle for small pools.

mod brute;
mod ga;
mod mc;
mod predictor;

pub use brute::{brute_force_solve, combinations, RankedDeck, BRUTE_FORCE_LIMIT};
pub use ga::{ga_crossover, ga_mutate, ga_search, tournament_select, GaConfig, GaLog, GenerationStats, STALL_GENERATIONS};
pub use mc::{mc_sample, mc_solve, mc_solve_nested, McConfig, McLog};
pub use predictor::{
    build_predictor_dataset, pair_features, train_predictor, LabeledPair, PredictorConfig, PredictorDataset,
    PredictorMetrics, WinRatePredictor, MIRROR_EVERY,
};
