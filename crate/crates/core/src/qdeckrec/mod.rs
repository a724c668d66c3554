//! Q-learning deck search: a small MLP scores `(state, action)` pairs by
//! the successor state, is trained with ε-greedy rollouts and prioritized
//! replay, and at solve time walks `D` greedy steps without simulating a
//! single match.

mod agent;
mod checkpoint;
mod features;
mod mlp;
mod replay;
mod sweep;
mod tabular;
mod train;

pub use agent::{q_value, select_action, solve, td_error, SolveLog};
pub use checkpoint::{Checkpoint, CheckpointBiases, CheckpointWeights, RngState, CHECKPOINT_FORMAT_VERSION};
pub use features::{feature_dim, featurize, state_features, FeatureVector};
pub use mlp::{apply_update, q_forward, q_gradient, MlpParams};
pub use replay::{per_insert, per_sample, PrioritizedReplay, ReplayConfig, SampledTransition};
pub use sweep::{greedy_action, max_q, sweep_q_values};
pub use tabular::{tabular_q_update, TabularQ};
pub use train::{train, train_with_observer, EpsilonSchedule, StopReason, TrainConfig, TrainLog, TrainProgress};
