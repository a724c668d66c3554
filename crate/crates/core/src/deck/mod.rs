//! Deck vectors and problem instances.
//!
//! A deck is a binary vector over the card pool with exactly `D` bits set.
//! [`DeckVector`] itself does not enforce a popcount; [`validate_deck`] is the
//! single place where the size constraint is checked.

mod instances;

use std::cmp::Ordering;
use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::game::{CardPool, CardSpec};
use crate::seed;
use crate::{Error, Result};

pub use instances::{
    generate_instance_chain, Candidate, ChainRound, InstanceSet, InstanceSetFile, ProblemInstance,
    RoundSource,
};

const WORD: usize = 64;

/// Binary vector of length `N`; bit `i` set means card `i` is in the deck.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DeckVector {
    n: usize,
    words: Vec<u64>,
}

impl DeckVector {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(WORD)],
        }
    }

    /// Builds a deck from card indices. Duplicates and out-of-range indices
    /// are rejected.
    pub fn from_indices(n: usize, cards: &[usize]) -> Result<Self> {
        let mut deck = Self::empty(n);
        for &c in cards {
            if c >= n {
                return Err(Error::invalid(format!("card index {c} out of range for N = {n}")));
            }
            if deck.contains(c) {
                return Err(Error::invalid(format!("card index {c} listed twice")));
            }
            deck.insert(c);
        }
        Ok(deck)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut deck = Self::empty(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            deck.insert(i);
        }
        deck
    }

    /// Vector length `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Sets bit `i`. Panics if `i >= N`.
    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.n, "card index {i} out of range");
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    /// Clears bit `i`. Panics if `i >= N`.
    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.n, "card index {i} out of range");
        self.words[i / WORD] &= !(1 << (i % WORD));
    }

    /// Set bits in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + bit)
            })
        })
    }

    /// Cleared bits in ascending order.
    pub fn complement_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| !self.contains(i))
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.contains(i)).collect()
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming(&self, other: &DeckVector) -> usize {
        assert_eq!(self.n, other.n, "length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Number of cards present in both decks.
    pub fn overlap(&self, other: &DeckVector) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Lexicographic order of the ascending index lists.
    pub fn lex_cmp(&self, other: &DeckVector) -> Ordering {
        self.indices().cmp(other.indices())
    }
}

impl fmt::Debug for DeckVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Deck(n={}, {:?})", self.n, self.to_indices())
    }
}

/// Wire form: `{"n": N, "cards": [ascending indices]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeckRepr {
    n: usize,
    cards: Vec<usize>,
}

impl Serialize for DeckVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DeckRepr {
            n: self.n,
            cards: self.to_indices(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DeckVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = DeckRepr::deserialize(d)?;
        DeckVector::from_indices(repr.n, &repr.cards).map_err(serde::de::Error::custom)
    }
}

/// A broken deck constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DeckViolation {
    #[error("deck length {actual} != N = {expected}")]
    Length { expected: usize, actual: usize },
    #[error("deck holds {actual} cards, expected D = {expected}")]
    Popcount { expected: usize, actual: usize },
}

/// Checks the deck-size constraints: length `n` and exactly `d` cards.
pub fn validate_deck(x: &DeckVector, n: usize, d: usize) -> std::result::Result<(), DeckViolation> {
    if x.len() != n {
        return Err(DeckViolation::Length {
            expected: n,
            actual: x.len(),
        });
    }
    let ones = x.count_ones();
    if ones != d {
        return Err(DeckViolation::Popcount {
            expected: d,
            actual: ones,
        });
    }
    Ok(())
}

/// Uniformly samples `d` distinct cards out of `n`.
pub fn random_deck(n: usize, d: usize, seed: u64) -> Result<DeckVector> {
    random_deck_with(n, d, &mut seed::rng(seed))
}

pub fn random_deck_with(n: usize, d: usize, rng: &mut impl rand::Rng) -> Result<DeckVector> {
    if d == 0 || d >= n {
        return Err(Error::invalid(format!("need 0 < d < n, got n = {n}, d = {d}")));
    }
    let mut deck = DeckVector::empty(n);
    for i in index::sample(rng, n, d) {
        deck.insert(i);
    }
    Ok(deck)
}

/// The card specs selected by `x`, in ascending id order.
pub fn deck_to_cards<'p>(x: &DeckVector, pool: &'p CardPool) -> Result<Vec<&'p CardSpec>> {
    if x.len() != pool.n_cards || x.count_ones() == 0 {
        return Err(Error::invalid(format!(
            "deck of length {} with {} cards is not valid for a pool of {}",
            x.len(),
            x.count_ones(),
            pool.n_cards
        )));
    }
    Ok(x.indices().map(|i| &pool.cards[i]).collect())
}

pub fn cards_to_deck(cards: &[&CardSpec], n: usize) -> Result<DeckVector> {
    let ids: Vec<usize> = cards.iter().map(|c| c.id as usize).collect();
    DeckVector::from_indices(n, &ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::generate_card_pool;
    use proptest::prelude::*;

    #[test]
    fn random_deck_has_requested_size() {
        let x = random_deck(10, 3, 1).unwrap();
        assert_eq!(x.count_ones(), 3);
        assert_eq!(x.len(), 10);
    }

    #[test]
    fn random_deck_rejects_bad_sizes() {
        assert!(matches!(random_deck(10, 10, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(random_deck(10, 0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn random_deck_is_deterministic() {
        assert_eq!(random_deck(312, 15, 5).unwrap(), random_deck(312, 15, 5).unwrap());
    }

    #[test]
    fn random_deck_is_uniform_over_supports() {
        let mut counts = std::collections::HashMap::new();
        let mut rng = seed::rng(99);
        let draws = 50_000;
        for _ in 0..draws {
            let x = random_deck_with(6, 2, &mut rng).unwrap();
            *counts.entry(x.to_indices()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 15);
        for (support, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 15.0).abs() < 0.01, "{support:?}: {freq}");
        }
    }

    #[test]
    fn validate_accepts_full_scale_deck() {
        let x = random_deck(312, 15, 3).unwrap();
        assert_eq!(validate_deck(&x, 312, 15), Ok(()));
    }

    #[test]
    fn validate_names_the_broken_constraint() {
        let x = random_deck(312, 14, 3).unwrap();
        assert_eq!(
            validate_deck(&x, 312, 15),
            Err(DeckViolation::Popcount {
                expected: 15,
                actual: 14
            })
        );
        let y = random_deck(311, 15, 3).unwrap();
        assert_eq!(
            validate_deck(&y, 312, 15),
            Err(DeckViolation::Length {
                expected: 312,
                actual: 311
            })
        );
    }

    #[test]
    fn deck_to_cards_in_id_order() {
        let pool = generate_card_pool(7, 10).unwrap();
        let x = DeckVector::from_indices(10, &[5, 0, 3]).unwrap();
        let cards = deck_to_cards(&x, &pool).unwrap();
        let ids: Vec<u16> = cards.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![0, 3, 5]);
        assert_eq!(cards_to_deck(&cards, 10).unwrap(), x);

        let wrong_len = DeckVector::from_indices(11, &[1]).unwrap();
        assert!(deck_to_cards(&wrong_len, &pool).is_err());
    }

    #[test]
    fn from_indices_rejects_duplicates() {
        assert!(DeckVector::from_indices(5, &[1, 1]).is_err());
        assert!(DeckVector::from_indices(5, &[5]).is_err());
    }

    proptest! {
        #[test]
        fn bit_ops_agree_with_index_lists(n in 1usize..200, seed in any::<u64>()) {
            let d = (seed as usize % n).max(1).min(n.saturating_sub(1));
            prop_assume!(d >= 1 && d < n);
            let x = random_deck(n, d, seed).unwrap();
            let idx = x.to_indices();
            prop_assert_eq!(idx.len(), d);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(DeckVector::from_indices(n, &idx).unwrap(), x.clone());
            let json = serde_json::to_string(&x).unwrap();
            prop_assert_eq!(serde_json::from_str::<DeckVector>(&json).unwrap(), x.clone());
            prop_assert_eq!(x.complement_indices().count(), n - d);
        }
    }
}
