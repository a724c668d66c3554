//! Proportional prioritized experience replay.
//!
//! Entry `i` is sampled with probability `p_i^α / Σ_j p_j^α`. Importance
//! weights are `(len · P(i))^(−β)`, normalised by the largest weight any
//! entry in the buffer could receive. New entries get the current maximum
//! priority so they are seen at least once before their TD error is known.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::Transition;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayConfig {
    pub capacity: usize,
    /// Priority exponent.
    pub alpha: f64,
    /// Initial importance-sampling exponent.
    pub beta0: f64,
    /// Added to β after every sampled batch, up to 1.
    pub beta_step: f64,
    /// Added to `|δ|` so no entry has zero priority.
    pub eps_priority: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 100_000,
            alpha: 0.6,
            beta0: 0.0,
            beta_step: 1e-5,
            eps_priority: 1e-6,
        }
    }
}

/// Array-backed binary tree with a fixed associative operation.
#[derive(Clone, Debug)]
struct SegmentTree {
    leaves: usize,
    nodes: Vec<f64>,
    neutral: f64,
    op: fn(f64, f64) -> f64,
}

impl SegmentTree {
    fn new(capacity: usize, neutral: f64, op: fn(f64, f64) -> f64) -> Self {
        let leaves = capacity.next_power_of_two();
        Self {
            leaves,
            nodes: vec![neutral; 2 * leaves],
            neutral,
            op,
        }
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut k = i + self.leaves;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = (self.op)(self.nodes[2 * k], self.nodes[2 * k + 1]);
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[i + self.leaves]
    }

    fn root(&self) -> f64 {
        if self.leaves == 0 {
            self.neutral
        } else {
            self.nodes[1]
        }
    }

    /// Smallest leaf index whose inclusive prefix sum exceeds `mass`
    /// (sum trees only).
    fn find_prefix(&self, mut mass: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if mass < left {
                k *= 2;
            } else {
                mass -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

/// A sampled entry with its importance weight.
#[derive(Clone, Debug)]
pub struct SampledTransition<'a> {
    pub index: usize,
    pub probability: f64,
    pub weight: f64,
    pub transition: &'a Transition,
}

#[derive(Clone, Debug)]
pub struct PrioritizedReplay {
    cfg: ReplayConfig,
    data: Vec<Transition>,
    next: usize,
    /// `p_i^α`
    sum: SegmentTree,
    min: SegmentTree,
    /// raw `p_i`
    max: SegmentTree,
    beta: f64,
}

impl PrioritizedReplay {
    pub fn new(cfg: ReplayConfig) -> Result<Self> {
        if cfg.capacity == 0 {
            return Err(Error::invalid("replay capacity must be positive"));
        }
        if !(cfg.alpha >= 0.0 && cfg.eps_priority > 0.0 && (0.0..=1.0).contains(&cfg.beta0)) {
            return Err(Error::invalid("replay exponents out of range"));
        }
        Ok(Self {
            cfg,
            data: Vec::with_capacity(cfg.capacity.min(1 << 16)),
            next: 0,
            sum: SegmentTree::new(cfg.capacity, 0.0, |a, b| a + b),
            min: SegmentTree::new(cfg.capacity, f64::INFINITY, f64::min),
            max: SegmentTree::new(cfg.capacity, 0.0, f64::max),
            beta: cfg.beta0,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.cfg.capacity
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta.clamp(0.0, 1.0);
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.data.get(index)
    }

    /// Raw priority `p_i`.
    pub fn priority(&self, index: usize) -> f64 {
        self.max.get(index)
    }

    /// Current sampling probability of entry `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.sum.get(index) / self.sum.root()
    }

    pub fn max_priority(&self) -> f64 {
        if self.is_empty() {
            1.0
        } else {
            self.max.root()
        }
    }

    /// Inserts at the current maximum priority, evicting the oldest entry
    /// when full. Returns the slot written.
    pub fn insert(&mut self, tr: Transition) -> usize {
        let p = self.max_priority();
        let slot = self.next;
        if self.data.len() < self.cfg.capacity {
            self.data.push(tr);
        } else {
            self.data[slot] = tr;
        }
        self.next = (self.next + 1) % self.cfg.capacity;
        self.set_priority(slot, p);
        slot
    }

    pub fn set_priority(&mut self, index: usize, priority: f64) {
        assert!(index < self.data.len(), "replay index {index} out of range");
        assert!(priority > 0.0 && priority.is_finite(), "priority must be positive and finite");
        let scaled = priority.powf(self.cfg.alpha);
        self.sum.set(index, scaled);
        self.min.set(index, scaled);
        self.max.set(index, priority);
    }

    /// Sets priorities to `|δ| + ε` after a learning step.
    pub fn update_td_errors(&mut self, updates: &[(usize, f64)]) {
        for &(index, delta) in updates {
            self.set_priority(index, delta.abs() + self.cfg.eps_priority);
        }
    }

    /// Draws `m` entries (with replacement) and then advances β.
    pub fn sample(&mut self, m: usize, rng: &mut impl Rng) -> Result<Vec<SampledTransition<'_>>> {
        if self.data.len() < m || m == 0 {
            return Err(Error::InsufficientData {
                needed: m.max(1),
                available: self.data.len(),
            });
        }
        let total = self.sum.root();
        let len = self.data.len() as f64;
        let beta = self.beta;
        let p_min = self.min.root() / total;
        let max_weight = (len * p_min).powf(-beta);
        let mut picks = Vec::with_capacity(m);
        for _ in 0..m {
            let mass = rng.gen::<f64>() * total;
            let index = self.sum.find_prefix(mass).min(self.data.len() - 1);
            let probability = self.sum.get(index) / total;
            let weight = (len * probability).powf(-beta) / max_weight;
            picks.push((index, probability, weight));
        }
        self.beta = (self.beta + self.cfg.beta_step).min(1.0);
        Ok(picks
            .into_iter()
            .map(|(index, probability, weight)| SampledTransition {
                index,
                probability,
                weight,
                transition: &self.data[index],
            })
            .collect())
    }
}

pub fn per_insert(buffer: &mut PrioritizedReplay, tr: Transition) {
    buffer.insert(tr);
}

pub fn per_sample<'a>(
    buffer: &'a mut PrioritizedReplay,
    m: usize,
    rng: &mut impl Rng,
) -> Result<Vec<SampledTransition<'a>>> {
    buffer.sample(m, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::random_deck;
    use crate::mdp::{apply_search_action, initial_state, SearchAction};
    use crate::seed;

    fn tr(r: f64) -> Transition {
        let s = initial_state(random_deck(10, 3, 1).unwrap(), random_deck(10, 3, 2).unwrap()).unwrap();
        Transition {
            s_next: apply_search_action(&s, &SearchAction::Keep).unwrap(),
            s,
            a: SearchAction::Keep,
            r,
        }
    }

    fn cfg(capacity: usize, alpha: f64) -> ReplayConfig {
        ReplayConfig {
            capacity,
            alpha,
            beta0: 0.0,
            beta_step: 0.0,
            eps_priority: 1e-9,
        }
    }

    #[test]
    fn first_insert_gets_unit_priority() {
        let mut buf = PrioritizedReplay::new(cfg(4, 0.6)).unwrap();
        buf.insert(tr(1.0));
        assert_eq!(buf.priority(0), 1.0);
        buf.set_priority(0, 5.0);
        buf.insert(tr(2.0));
        assert_eq!(buf.priority(1), 5.0);
    }

    #[test]
    fn fifo_eviction_at_capacity() {
        let mut buf = PrioritizedReplay::new(cfg(3, 0.6)).unwrap();
        for i in 0..5 {
            buf.insert(tr(i as f64));
            assert!(buf.len() <= 3);
        }
        let rewards: Vec<f64> = (0..3).map(|i| buf.get(i).unwrap().r).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_needs_enough_entries() {
        let mut buf = PrioritizedReplay::new(cfg(8, 0.6)).unwrap();
        buf.insert(tr(0.0));
        assert!(matches!(
            buf.sample(2, &mut seed::rng(1)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn proportional_sampling_two_entries() {
        let mut buf = PrioritizedReplay::new(cfg(2, 1.0)).unwrap();
        buf.insert(tr(0.0));
        buf.insert(tr(1.0));
        buf.set_priority(0, 3.0);
        buf.set_priority(1, 1.0);
        let mut rng = seed::rng(7);
        let draws = 10_000;
        let mut zero = 0;
        for _ in 0..draws / 2 {
            zero += buf.sample(2, &mut rng).unwrap().iter().filter(|s| s.index == 0).count();
        }
        let freq = zero as f64 / draws as f64;
        assert!((freq - 0.75).abs() < 0.02, "{freq}");
    }

    #[test]
    fn beta_zero_means_unit_weights() {
        let mut buf = PrioritizedReplay::new(cfg(4, 0.6)).unwrap();
        for i in 0..4 {
            buf.insert(tr(i as f64));
            buf.set_priority(i, 1.0 + i as f64);
        }
        let batch = buf.sample(4, &mut seed::rng(3)).unwrap();
        assert!(batch.iter().all(|s| s.weight == 1.0));
    }

    #[test]
    fn weights_are_max_normalised() {
        let mut buf = PrioritizedReplay::new(cfg(4, 1.0)).unwrap();
        for i in 0..4 {
            buf.insert(tr(i as f64));
            buf.set_priority(i, 1.0 + i as f64);
        }
        buf.set_beta(1.0);
        let mut rng = seed::rng(3);
        let mut seen = Vec::new();
        for _ in 0..16 {
            buf.set_beta(1.0);
            seen.extend(buf.sample(4, &mut rng).unwrap().iter().map(|s| (s.index, s.weight)));
        }
        for (index, weight) in seen {
            // P(i) = (1 + i) / 10; the rarest entry has weight 1
            let expected = (4.0 * (1.0 + index as f64) / 10.0).powi(-1) / (4.0 * 0.1f64).powi(-1);
            assert!((weight - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_priorities_sample_uniformly() {
        let mut buf = PrioritizedReplay::new(cfg(4, 0.6)).unwrap();
        for i in 0..4 {
            buf.insert(tr(i as f64));
        }
        let mut counts = [0usize; 4];
        let mut rng = seed::rng(11);
        for _ in 0..2500 {
            for s in buf.sample(4, &mut rng).unwrap() {
                counts[s.index] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn beta_anneals_to_one() {
        let mut buf = PrioritizedReplay::new(ReplayConfig {
            beta_step: 0.4,
            ..cfg(4, 0.6)
        })
        .unwrap();
        buf.insert(tr(0.0));
        for _ in 0..5 {
            buf.sample(1, &mut seed::rng(1)).unwrap();
        }
        assert_eq!(buf.beta(), 1.0);
    }
}
