//! Deck-building as sequential decision making.
//!
//! The crate is organised bottom-up:
//!
//! * [`game`]: a small, deterministic Hearthstone-like card game with a
//!   greedy one-ply AI. It provides the black-box win-rate function that every
//!   search method optimises.
//! * [`deck`]: deck vectors, constraint checks and problem-instance chains.
//! * [`mdp`]: the deck-search MDP: states, card-replacement actions and the
//!   exponentially amplified reward.
//! * [`qdeckrec`]: the learned search policy: an MLP Q-function trained with
//!   ε-greedy exploration and prioritized replay, and the evaluation-free
//!   solver built on it.
//! * [`baselines`]: genetic algorithm, Monte-Carlo search over a learned
//!   win-rate predictor and a brute-force oracle for tiny pools.
//! * [`bench`]: the experiment harness: timing, function-call accounting,
//!   Welch tests and report generation.

pub mod baselines;
pub mod bench;
pub mod deck;
mod error;
pub mod game;
pub mod mdp;
pub mod qdeckrec;
pub mod seed;
pub mod timing;

pub use error::{Error, Result};
