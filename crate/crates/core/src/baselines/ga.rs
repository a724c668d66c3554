use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::brute::combinations;
use crate::deck::{random_deck_with, DeckVector};
use crate::game::{WinRateEvaluator, DEFAULT_NUM_MATCHES};
use crate::seed::{self, tag};
use crate::timing::Stopwatch;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub p_mutation: f64,
    pub p_crossover: f64,
    pub tournament_size: usize,
    /// Stop before a generation would push the call count past this.
    pub max_f_calls: Option<u64>,
    pub budget_secs: Option<f64>,
    /// Matches simulated per fitness evaluation.
    pub num_matches: u32,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            p_mutation: 0.2,
            p_crossover: 0.2,
            tournament_size: 3,
            max_f_calls: None,
            budget_secs: None,
            num_matches: DEFAULT_NUM_MATCHES,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.p_mutation) || !unit.contains(&self.p_crossover) {
            return Err(Error::invalid("GA probabilities must lie in [0, 1]"));
        }
        if self.population_size < 2 {
            return Err(Error::invalid("GA population must have at least 2 members"));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::invalid("tournament size must lie in 1..=population_size"));
        }
        if self.max_f_calls.is_none() && self.budget_secs.is_none() {
            return Err(Error::invalid("set max_f_calls or budget_secs"));
        }
        if self.num_matches < 2 || !self.num_matches.is_multiple_of(2) {
            return Err(Error::invalid("num_matches must be even and at least 2"));
        }
        Ok(())
    }
}

/// Swaps one random card in the deck for one random card outside it.
pub fn ga_mutate(x: &DeckVector, rng: &mut impl Rng) -> DeckVector {
    let inside = x.to_indices();
    let outside: Vec<usize> = x.complement_indices().collect();
    let mut child = x.clone();
    if let (Some(&out), Some(&inc)) = (inside.choose(rng), outside.choose(rng)) {
        child.remove(out);
        child.insert(inc);
    }
    child
}

/// Shared cards go to both children; the cards held by exactly one parent
/// are shuffled and split evenly, so both children keep the parents' size.
pub fn ga_crossover(x1: &DeckVector, x2: &DeckVector, rng: &mut impl Rng) -> (DeckVector, DeckVector) {
    let n = x1.len();
    let mut c1 = DeckVector::empty(n);
    let mut c2 = DeckVector::empty(n);
    let mut free = Vec::new();
    for i in 0..n {
        match (x1.contains(i), x2.contains(i)) {
            (true, true) => {
                c1.insert(i);
                c2.insert(i);
            }
            (true, false) | (false, true) => free.push(i),
            (false, false) => {}
        }
    }
    free.shuffle(rng);
    let half = x1.count_ones() - x1.overlap(x2);
    for (k, &i) in free.iter().enumerate() {
        if k < half {
            c1.insert(i);
        } else {
            c2.insert(i);
        }
    }
    (c1, c2)
}

/// Best of `k` members drawn uniformly with replacement; the earliest draw
/// wins ties.
pub fn tournament_select(fitness: &[f64], k: usize, rng: &mut impl Rng) -> Result<usize> {
    if k == 0 || fitness.len() < k {
        return Err(Error::invalid(format!(
            "tournament of size {k} over a population of {}",
            fitness.len()
        )));
    }
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..k {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u64,
    pub best: f64,
    pub mean: f64,
    pub best_ever: f64,
    /// Cumulative evaluator calls after this generation was scored.
    pub f_calls: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaLog {
    pub generations: Vec<GenerationStats>,
    pub f_calls: u64,
    pub cache_hits: u64,
    pub initial_population: Vec<DeckVector>,
    pub best_fitness: f64,
    pub wall_s: f64,
    pub cpu_s: f64,
}

struct Fitness<'e, E: ?Sized> {
    evaluator: &'e E,
    x_o: &'e DeckVector,
    num_matches: u32,
    root: u64,
    cache: HashMap<DeckVector, f64>,
    calls: u64,
    hits: u64,
}

impl<E: WinRateEvaluator + ?Sized> Fitness<'_, E> {
    fn uncached(&self, pop: &[DeckVector]) -> u64 {
        let mut fresh: Vec<&DeckVector> = pop.iter().filter(|x| !self.cache.contains_key(*x)).collect();
        fresh.sort_by(|a, b| a.lex_cmp(b));
        fresh.dedup();
        fresh.len() as u64
    }

    fn score(&mut self, pop: &[DeckVector]) -> Result<Vec<f64>> {
        pop.iter()
            .map(|x| {
                if let Some(&f) = self.cache.get(x) {
                    self.hits += 1;
                    return Ok(f);
                }
                self.calls += 1;
                let f = self.evaluator.win_rate(x, self.x_o, self.num_matches, self.root)?.value;
                self.cache.insert(x.clone(), f);
                Ok(f)
            })
            .collect()
    }
}

/// Consecutive generations without a single new evaluation after which the
/// search stops even if budget remains.
pub const STALL_GENERATIONS: u64 = 1000;

/// Generational GA: score, tournament-select a full population, cross
/// adjacent pairs, mutate, repeat until the budget runs out. Fitness is
/// the win rate against `x_o` under one fixed root seed per run, cached by
/// deck. Returns the best deck ever scored.
///
/// The random initial population is always scored, even with a zero
/// budget.
pub fn ga_search<E: WinRateEvaluator + ?Sized>(
    evaluator: &E,
    x_o: &DeckVector,
    d: usize,
    cfg: &GaConfig,
) -> Result<(DeckVector, GaLog)> {
    cfg.validate()?;
    let n = x_o.len();
    let watch = Stopwatch::start();
    let mut rng = seed::rng(seed::mix(cfg.seed, tag::INIT));
    let mut fitness = Fitness {
        evaluator,
        x_o,
        num_matches: cfg.num_matches,
        root: seed::mix(cfg.seed, tag::FITNESS),
        cache: HashMap::new(),
        calls: 0,
        hits: 0,
    };

    let mut pop = (0..cfg.population_size)
        .map(|_| random_deck_with(n, d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let initial_population = pop.clone();
    let mut scores = fitness.score(&pop)?;
    let mut best = (pop[0].clone(), scores[0]);
    let mut generations = Vec::new();
    let mut record = |gen: u64, pop: &[DeckVector], scores: &[f64], best: &mut (DeckVector, f64), calls: u64| {
        for (x, &f) in pop.iter().zip(scores) {
            if f > best.1 {
                *best = (x.clone(), f);
            }
        }
        generations.push(GenerationStats {
            generation: gen,
            best: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: scores.iter().sum::<f64>() / scores.len() as f64,
            best_ever: best.1,
            f_calls: calls,
        });
    };
    record(0, &pop, &scores, &mut best, fitness.calls);

    let space = combinations(n, d);
    let mut gen = 0u64;
    let mut stalled = 0u64;
    loop {
        if cfg.budget_secs.is_some_and(|b| watch.wall_elapsed().as_secs_f64() >= b) {
            break;
        }
        if fitness.cache.len() as f64 >= space || stalled >= STALL_GENERATIONS {
            break;
        }
        let mut next = Vec::with_capacity(pop.len());
        for _ in 0..pop.len() {
            next.push(pop[tournament_select(&scores, cfg.tournament_size, &mut rng)?].clone());
        }
        for pair in next.chunks_mut(2) {
            if let [a, b] = pair {
                if rng.gen::<f64>() < cfg.p_crossover {
                    let (c1, c2) = ga_crossover(a, b, &mut rng);
                    *a = c1;
                    *b = c2;
                }
            }
        }
        for x in next.iter_mut() {
            if rng.gen::<f64>() < cfg.p_mutation {
                *x = ga_mutate(x, &mut rng);
            }
        }
        let fresh = fitness.uncached(&next);
        if cfg.max_f_calls.is_some_and(|m| fitness.calls + fresh > m) {
            break;
        }
        stalled = if fresh == 0 { stalled + 1 } else { 0 };
        gen += 1;
        pop = next;
        scores = fitness.score(&pop)?;
        record(gen, &pop, &scores, &mut best, fitness.calls);
    }

    let t = watch.elapsed();
    let log = GaLog {
        generations,
        f_calls: fitness.calls,
        cache_hits: fitness.hits,
        initial_population,
        best_fitness: best.1,
        wall_s: t.wall_s,
        cpu_s: t.cpu_s,
    };
    Ok((best.0, log))
}
