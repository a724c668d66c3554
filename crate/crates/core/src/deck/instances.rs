use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{random_deck, validate_deck, DeckVector};
use crate::game::{CardPool, ProxyConfig};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// One opponent deck to optimise against, with the AI proxies for both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: usize,
    pub x_o: DeckVector,
    pub proxies: (ProxyConfig, ProxyConfig),
}

/// A search output offered to the chain as a possible next opponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub source: String,
    pub deck: DeckVector,
    pub win_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoundSource {
    Random {
        seed: u64,
    },
    Sampled {
        from_round: usize,
        candidates: Vec<Candidate>,
        probabilities: Vec<f64>,
        chosen: usize,
        uniform_fallback: bool,
    },
}

/// Provenance of one opponent deck in the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRound {
    pub round: usize,
    pub warmup: bool,
    pub x_o: DeckVector,
    pub source: RoundSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSet {
    pub pool_seed: u64,
    pub n: usize,
    pub d: usize,
    pub instances: Vec<ProblemInstance>,
    pub provenance: Vec<ChainRound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFileEntry {
    pub id: usize,
    pub x_o: Vec<usize>,
}

/// On-disk form of an [`InstanceSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSetFile {
    pub pool_seed: u64,
    pub n: usize,
    pub d: usize,
    pub instances: Vec<InstanceFileEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<ChainRound>,
}

impl InstanceSet {
    pub fn to_file(&self) -> InstanceSetFile {
        InstanceSetFile {
            pool_seed: self.pool_seed,
            n: self.n,
            d: self.d,
            instances: self
                .instances
                .iter()
                .map(|i| InstanceFileEntry {
                    id: i.id,
                    x_o: i.x_o.to_indices(),
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_file(file: InstanceSetFile, proxies: (ProxyConfig, ProxyConfig)) -> Result<Self> {
        let mut instances = Vec::with_capacity(file.instances.len());
        for (expected, entry) in file.instances.into_iter().enumerate() {
            if entry.id != expected {
                return Err(Error::invalid(format!(
                    "instance ids must be sequential from 0, found {} at position {expected}",
                    entry.id
                )));
            }
            let x_o = DeckVector::from_indices(file.n, &entry.x_o)?;
            validate_deck(&x_o, file.n, file.d).map_err(|v| Error::invalid(v.to_string()))?;
            instances.push(ProblemInstance {
                id: entry.id,
                x_o,
                proxies,
            });
        }
        Ok(Self {
            pool_seed: file.pool_seed,
            n: file.n,
            d: file.d,
            instances,
            provenance: file.provenance,
        })
    }
}

/// Builds a chain of `k` test instances in the sequential competitive manner.
///
/// Round 0 uses a random opponent deck. Every later round's opponent deck is
/// drawn from the previous round's candidates with probability proportional
/// to their win rates (uniform if all win rates are zero). The first
/// `warmup` rounds are discarded; the next `k` become the instance set.
/// `provider(round, x_o)` returns the candidates produced on a round.
pub fn generate_instance_chain<P>(
    pool: &CardPool,
    d: usize,
    proxies: (ProxyConfig, ProxyConfig),
    mut provider: P,
    k: usize,
    warmup: usize,
    seed: u64,
) -> Result<InstanceSet>
where
    P: FnMut(usize, &DeckVector) -> Result<Vec<Candidate>>,
{
    if k == 0 {
        return Err(Error::invalid("instance count k must be at least 1"));
    }
    let n = pool.n_cards;
    let first_seed = seed::mix(seed, tag::INIT);
    let mut rng = seed::rng(seed::mix(seed, tag::CHAIN));

    let total = warmup + k;
    let mut provenance = Vec::with_capacity(total);
    provenance.push(ChainRound {
        round: 0,
        warmup: warmup > 0,
        x_o: random_deck(n, d, first_seed)?,
        source: RoundSource::Random { seed: first_seed },
    });

    for round in 1..total {
        let prev = &provenance[round - 1].x_o;
        let candidates = provider(round - 1, prev)?;
        if candidates.is_empty() {
            return Err(Error::GenerationFailure(format!(
                "provider returned no candidates for round {}",
                round - 1
            )));
        }
        for c in &candidates {
            validate_deck(&c.deck, n, d)
                .map_err(|v| Error::GenerationFailure(format!("candidate from {}: {v}", c.source)))?;
        }
        let (chosen, probabilities, uniform_fallback) = weighted_pick(&candidates, &mut rng)?;
        provenance.push(ChainRound {
            round,
            warmup: round < warmup,
            x_o: candidates[chosen].deck.clone(),
            source: RoundSource::Sampled {
                from_round: round - 1,
                candidates,
                probabilities,
                chosen,
                uniform_fallback,
            },
        });
    }

    let instances = provenance[warmup..]
        .iter()
        .enumerate()
        .map(|(id, r)| ProblemInstance {
            id,
            x_o: r.x_o.clone(),
            proxies,
        })
        .collect();

    Ok(InstanceSet {
        pool_seed: pool.seed,
        n,
        d,
        instances,
        provenance,
    })
}

/// Picks a candidate with probability proportional to its win rate.
pub(crate) fn weighted_pick(
    candidates: &[Candidate],
    rng: &mut impl Rng,
) -> Result<(usize, Vec<f64>, bool)> {
    let weights: Vec<f64> = candidates.iter().map(|c| c.win_rate.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if !total.is_finite() {
        return Err(Error::GenerationFailure("non-finite candidate win rate".into()));
    }
    if total <= 0.0 {
        let p = 1.0 / candidates.len() as f64;
        return Ok((rng.gen_range(0..candidates.len()), vec![p; candidates.len()], true));
    }
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::GenerationFailure(format!("bad sampling weights: {e}")))?;
    let probabilities = weights.iter().map(|w| w / total).collect();
    Ok((dist.sample(rng), probabilities, false))
}
