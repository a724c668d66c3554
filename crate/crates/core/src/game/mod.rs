//! A small deterministic Hearthstone-like card game.
//!
//! Rules: heroes start at 30 health, mana ramps from 1 to 10, boards hold at
//! most seven minions, minions may carry Taunt or Charge, drawing from an
//! empty library deals escalating fatigue damage, and a match is a draw after
//! 60 full turns. All randomness is consumed when the libraries are shuffled,
//! so every transition after setup is a pure function of the state.

mod cards;
mod policy;
mod sim;
mod state;

pub use cards::{
    generate_card_pool, CardKind, CardPool, CardSpec, Effect, Keyword, Tribe, MAX_COST, MIN_COST,
    MIN_POOL_SIZE,
};
pub use policy::{greedy_policy_move, heuristic_score, ProxyConfig, ProxyKind};
pub use sim::{
    evaluate_win_rate, initial_game_state, match_seed, simulate_match, simulate_match_transcript,
    write_transcript, CountingEvaluator, FnEvaluator, MatchEvaluator, TranscriptEntry, WinRate,
    WinRateEvaluator, DEFAULT_NUM_MATCHES,
};
pub use state::{
    apply_game_action, legal_game_actions, AttackTarget, GameAction, GameState, MatchOutcome,
    MinionInstance, MinionRef, Player, PlayerState, Side, Winner, BOARD_LIMIT, HAND_LIMIT,
    MAX_MANA, STARTING_HEALTH, TURN_LIMIT,
};

#[cfg(test)]
mod tests;
