use serde::{Deserialize, Serialize};

use super::state::{GameAction, GameState, Player, PlayerState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProxyKind {
    #[default]
    GreedyOptimizeMove,
}

/// A scripted AI player: one-ply greedy search over a material heuristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyConfig {
    #[serde(default)]
    pub kind: ProxyKind,
    pub w_hp: f64,
    pub w_board: f64,
    pub w_hand: f64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self {
            kind: ProxyKind::GreedyOptimizeMove,
            w_hp: 1.0,
            w_board: 1.0,
            w_hand: 0.5,
        }
    }
}

impl ProxyConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.w_hp, self.w_board, self.w_hand].iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("proxy weights must be finite"))
        }
    }
}

fn board_material(p: &PlayerState) -> i32 {
    p.board.iter().map(|m| m.attack + m.health).sum()
}

/// Material balance from `perspective`'s point of view; ±∞ once a hero is
/// dead.
pub fn heuristic_score(state: &GameState<'_>, perspective: Player, proxy: &ProxyConfig) -> f64 {
    let me = state.player(perspective);
    let foe = state.player(perspective.other());
    if me.hero_health <= 0 {
        return f64::NEG_INFINITY;
    }
    if foe.hero_health <= 0 {
        return f64::INFINITY;
    }
    proxy.w_hp * f64::from(me.hero_health - foe.hero_health)
        + proxy.w_board * f64::from(board_material(me) - board_material(foe))
        + proxy.w_hand * (me.hand.len() as f64 - foe.hand.len() as f64)
}

/// Picks the legal action whose successor scores highest for the active
/// player. Ties go to the lower action index; `EndTurn` (index 0) is kept
/// unless some action strictly improves on the current score.
pub fn greedy_policy_move(state: &GameState<'_>, proxy: &ProxyConfig) -> Result<GameAction> {
    if state.is_terminal() {
        return Err(Error::InvalidState("no move in a finished match".into()));
    }
    let me = state.active;
    let actions = state.legal_actions();
    let mut best = (heuristic_score(state, me, proxy), GameAction::EndTurn);
    let mut scratch = state.clone();
    for action in &actions[1..] {
        scratch.clone_from(state);
        scratch.apply_in_place(action);
        let score = heuristic_score(&scratch, me, proxy);
        if score > best.0 {
            best = (score, *action);
        }
    }
    Ok(best.1)
}
