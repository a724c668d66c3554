//! Look-up table Q-learning, kept as a reference for cross-checking the
//! network path on state spaces small enough to enumerate.

use std::collections::HashMap;
use std::hash::Hash;

#[derive(Clone, Debug, Default)]
pub struct TabularQ<S, A> {
    table: HashMap<(S, A), f64>,
}

impl<S: Eq + Hash + Clone, A: Eq + Hash + Clone> TabularQ<S, A> {
    pub fn new() -> Self {
        Self { table: HashMap::new() }
    }

    /// Unvisited pairs read as 0.
    pub fn get(&self, s: &S, a: &A) -> f64 {
        self.table.get(&(s.clone(), a.clone())).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Max over `next_actions`; an empty slice (terminal successor) gives 0.
    pub fn max_over(&self, s: &S, next_actions: &[A]) -> f64 {
        next_actions.iter().map(|a| self.get(s, a)).fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.max(q)))).unwrap_or(0.0)
    }

    /// `Q(s,a) ← (1−α)·Q(s,a) + α·(r + max_a′ Q(s′,a′))`.
    pub fn update(&mut self, s: &S, a: &A, r: f64, s_next: &S, next_actions: &[A], learning_rate: f64) {
        if learning_rate == 0.0 {
            return;
        }
        let target = r + self.max_over(s_next, next_actions);
        let old = self.get(s, a);
        self.table.insert((s.clone(), a.clone()), (1.0 - learning_rate) * old + learning_rate * target);
    }
}

pub fn tabular_q_update<S, A>(
    table: &mut TabularQ<S, A>,
    s: &S,
    a: &A,
    r: f64,
    s_next: &S,
    next_actions: &[A],
    learning_rate: f64,
) where
    S: Eq + Hash + Clone,
    A: Eq + Hash + Clone,
{
    table.update(s, a, r, s_next, next_actions, learning_rate);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_step_on_empty_table() {
        let mut q = TabularQ::<u8, u8>::new();
        q.update(&0, &0, 4.5, &1, &[0, 1], 1.0);
        assert_eq!(q.get(&0, &0), 4.5);
    }

    #[test]
    fn zero_rate_leaves_table() {
        let mut q = TabularQ::<u8, u8>::new();
        q.update(&0, &0, 2.0, &1, &[], 1.0);
        q.update(&0, &0, 100.0, &1, &[], 0.0);
        assert_eq!(q.get(&0, &0), 2.0);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn two_state_chain_converges() {
        // 0 --go(r=1)--> 1 --go(r=2)--> end; 0 --stay(r=0.5)--> 1
        // Q(1,go) = 2, Q(0,go) = 3, Q(0,stay) = 2.5
        let mut q = TabularQ::<u8, &str>::new();
        for _ in 0..200 {
            q.update(&0, &"go", 1.0, &1, &["go"], 0.3);
            q.update(&0, &"stay", 0.5, &1, &["go"], 0.3);
            q.update(&1, &"go", 2.0, &2, &[], 0.3);
        }
        assert!((q.get(&1, &"go") - 2.0).abs() < 1e-6);
        assert!((q.get(&0, &"go") - 3.0).abs() < 1e-6);
        assert!((q.get(&0, &"stay") - 2.5).abs() < 1e-6);
    }
}
