//! Simulated FDC-guided test generation. Individuals are coverage vectors;
//! a metric scores each one as if it were a new candidate test for the suite
//! holding only the failing test.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::{ScopePolicy, SuiteContext};
use crate::dataset::{Coverage, Dataset, Outcome, TestDoc};
use crate::error::{Error, Result};
use crate::metrics::Scorer;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-bit flip probability; `None` means `1 / n`.
    pub mutation_rate: Option<f64>,
    /// Per-bit probability of taking the second parent's bit.
    pub crossover_prob: f64,
    pub elitism: usize,
    pub seed: u64,
    pub output_count: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            population: 50,
            generations: 60,
            mutation_rate: None,
            crossover_prob: 0.5,
            elitism: 1,
            seed: 0,
            output_count: 10,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config("population must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if self.elitism > self.population {
            return Err(Error::Config("elitism exceeds population".into()));
        }
        let probs = [self.mutation_rate.unwrap_or(0.0), self.crossover_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenResult {
    /// Distinct individuals of the final population, best first.
    pub individuals: Vec<(Coverage, f64)>,
    /// One entry per evaluated population: the initial one, then one per
    /// generation.
    pub history: Vec<GenerationStats>,
    pub final_population: Vec<Coverage>,
}

/// Half mutated copies of the failing test's coverage, half uniform random.
pub fn initial_population(
    dataset: &Dataset,
    failing_test: usize,
    config: &GenConfig,
) -> Vec<Coverage> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let base = dataset.coverage(failing_test);
    let n = base.len();
    let rate = mutation_rate(config, n);
    let seeded = config.population / 2;
    let mut pop = Vec::with_capacity(config.population);
    for _ in 0..seeded {
        let mut c = base.clone();
        mutate(&mut c, rate, &mut rng);
        pop.push(c);
    }
    while pop.len() < config.population {
        pop.push(Coverage::new((0..n).map(|_| rng.gen_bool(0.5)).collect()));
    }
    pop
}

fn mutation_rate(config: &GenConfig, n: usize) -> f64 {
    config.mutation_rate.unwrap_or(1.0 / n.max(1) as f64)
}

fn mutate<R: Rng>(c: &mut Coverage, rate: f64, rng: &mut R) {
    if rate <= 0.0 {
        return;
    }
    for i in 0..c.len() {
        if rng.gen_bool(rate) {
            c.flip(i);
        }
    }
}

fn crossover<R: Rng>(a: &Coverage, b: &Coverage, prob: f64, rng: &mut R) -> Coverage {
    if prob <= 0.0 {
        return a.clone();
    }
    Coverage::new(
        a.bits()
            .iter()
            .zip(b.bits())
            .map(|(&x, &y)| if rng.gen_bool(prob) { y } else { x })
            .collect(),
    )
}

fn stats(generation: usize, fitness: &[f64]) -> GenerationStats {
    GenerationStats {
        generation,
        best: fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: fitness.iter().sum::<f64>() / fitness.len() as f64,
    }
}

/// Population indices by fitness, best first; ties keep population order.
fn ranked(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order
}

pub fn ga_generate(
    dataset: &Dataset,
    failing_test: usize,
    config: &GenConfig,
    scorer: &mut dyn Scorer,
    policy: ScopePolicy,
) -> Result<GenResult> {
    config.validate()?;
    let ctx = SuiteContext::new(dataset, failing_test, policy)?;
    let pop = initial_population(dataset, failing_test, config);
    evolve(pop, config, scorer, &ctx)
}

/// The generational loop from a given starting population.
pub fn evolve(
    mut pop: Vec<Coverage>,
    config: &GenConfig,
    scorer: &mut dyn Scorer,
    ctx: &SuiteContext<'_>,
) -> Result<GenResult> {
    config.validate()?;
    if pop.len() != config.population {
        return Err(Error::Config(format!(
            "population has {} individuals, expected {}",
            pop.len(),
            config.population
        )));
    }
    let n = ctx.dataset().num_elements();
    if let Some(c) = pop.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch(c.len(), n));
    }
    let rate = mutation_rate(config, n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let score = |pop: &[Coverage], scorer: &mut dyn Scorer| -> Vec<f64> {
        pop.iter().map(|c| scorer.score(ctx, c)).collect()
    };
    let mut fitness = score(&pop, scorer);
    let mut history = vec![stats(0, &fitness)];
    for g in 1..=config.generations {
        let order = ranked(&fitness);
        let parents = &order[..config.population.div_ceil(2)];
        let mut next: Vec<Coverage> = order[..config.elitism]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < config.population {
            let a = &pop[parents[rng.gen_range(0..parents.len())]];
            let b = &pop[parents[rng.gen_range(0..parents.len())]];
            let mut child = crossover(a, b, config.crossover_prob, &mut rng);
            mutate(&mut child, rate, &mut rng);
            next.push(child);
        }
        pop = next;
        fitness = score(&pop, scorer);
        history.push(stats(g, &fitness));
    }
    let mut seen = HashSet::new();
    let individuals = ranked(&fitness)
        .into_iter()
        .filter(|&i| seen.insert(pop[i].clone()))
        .take(config.output_count)
        .map(|i| (pop[i].clone(), fitness[i]))
        .collect();
    Ok(GenResult {
        individuals,
        history,
        final_population: pop,
    })
}

/// Stable 64-bit mix of a seed and a coverage vector.
fn coin_seed(seed: u64, c: &Coverage) -> u64 {
    // splitmix64 finalizer folded over the packed bits
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let mut h = mix(seed ^ c.len() as u64);
    for chunk in c.bits().chunks(64) {
        let word = chunk
            .iter()
            .enumerate()
            .fold(0u64, |w, (i, &b)| w | ((b as u64) << i));
        h = mix(h ^ word);
    }
    h
}

/// Simulated oracle: a generated test fails iff it covers a buggy element
/// and a coin seeded by `(seed, vector)` lands below `trigger_probability`.
pub fn label_generated(
    dataset: &Dataset,
    vectors: &[Coverage],
    trigger_probability: f64,
    seed: u64,
) -> Result<Vec<(String, Coverage, Outcome)>> {
    if dataset.faults().is_empty() {
        return Err(Error::InvalidDataset("missing fault labels".into()));
    }
    if !(0.0..=1.0).contains(&trigger_probability) {
        return Err(Error::Config("trigger probability outside [0, 1]".into()));
    }
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.len() != dataset.num_elements() {
                return Err(Error::LengthMismatch(v.len(), dataset.num_elements()));
            }
            let covers_fault = dataset.faults().iter().any(|&e| v.get(e));
            let coin: f64 = ChaCha8Rng::seed_from_u64(coin_seed(seed, v)).gen();
            let outcome = if covers_fault && coin < trigger_probability {
                Outcome::Fail
            } else {
                Outcome::Pass
            };
            Ok((format!("gen{i}"), v.clone(), outcome))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFragment {
    pub tests: Vec<TestDoc>,
}

/// Generated tests as a dataset `tests` fragment, numbered after the
/// dataset's own tests.
pub fn generated_fragment(
    dataset: &Dataset,
    tests: &[(String, Coverage, Outcome)],
) -> GeneratedFragment {
    let docs: Vec<TestDoc> = tests
        .iter()
        .enumerate()
        .map(|(i, (name, c, o))| TestDoc {
            id: dataset.num_tests() + i,
            name: name.clone(),
            coverage: c.to_string(),
            outcome: o.as_str().to_string(),
        })
        .collect();
    GeneratedFragment { tests: docs }
}
