//! Genetic algorithm over fixed-length binary genomes: generational engine
//! with elitism, fitness-proportional (or tournament) selection, single-point
//! (or uniform) crossover, and independent per-bit mutation.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sequence::PulseSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Roulette,
    Tournament,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverKind {
    SinglePoint,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TargetReached,
    MaxIterations,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::TargetReached => "target_reached",
            Termination::MaxIterations => "max_iterations",
        }
    }
}

/// Engine hyperparameters. The defaults are the production settings used
/// throughout: population 70, mutation 0.001, crossover 0.9, mating pool 64,
/// at most 200 000 iterations, target fitness 0.9999, elitism 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub mutation_prob: f64,
    pub crossover_prob: f64,
    pub mating_pool: usize,
    pub max_iterations: usize,
    pub target_fitness: f64,
    pub elitism: usize,
    pub seed: u64,
    pub selection: Selection,
    pub crossover: CrossoverKind,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 70,
            mutation_prob: 0.001,
            crossover_prob: 0.9,
            mating_pool: 64,
            max_iterations: 200_000,
            target_fitness: 0.9999,
            elitism: 1,
            seed: 1,
            selection: Selection::Roulette,
            crossover: CrossoverKind::SinglePoint,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::InvalidConfig("population_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::InvalidConfig(format!(
                "mutation_prob must lie in [0, 1], got {}",
                self.mutation_prob
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(Error::InvalidConfig(format!(
                "crossover_prob must lie in [0, 1], got {}",
                self.crossover_prob
            )));
        }
        if self.elitism >= self.population_size {
            return Err(Error::InvalidConfig(format!(
                "elitism ({}) must be smaller than population_size ({})",
                self.elitism, self.population_size
            )));
        }
        if self.mating_pool == 0 || self.mating_pool > self.population_size {
            return Err(Error::InvalidConfig(format!(
                "mating_pool ({}) must lie in 1..=population_size ({})",
                self.mating_pool, self.population_size
            )));
        }
        if !self.target_fitness.is_finite() {
            return Err(Error::InvalidConfig("target_fitness must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

/// Result of one optimization run.
#[derive(Debug, Clone)]
pub struct GaRun {
    pub best_genome: PulseSequence,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub generations_used: usize,
    pub terminated_by: Termination,
}

/// Draws a mating pool of genome indices, with replacement.
///
/// Roulette weighs each index by its (nonnegative) fitness; if every fitness
/// is zero it falls back to uniform draws. Tournament picks the better of two
/// uniform draws.
pub fn select(
    fitnesses: &[f64],
    pool_size: usize,
    method: Selection,
    rng: &mut impl Rng,
) -> Vec<usize> {
    assert!(!fitnesses.is_empty(), "cannot select from empty population");
    assert!(
        fitnesses.iter().all(|f| *f >= 0.0),
        "selection requires nonnegative fitness"
    );
    match method {
        Selection::Roulette => {
            let total: f64 = fitnesses.iter().sum();
            if total <= 0.0 {
                return (0..pool_size)
                    .map(|_| rng.random_range(0..fitnesses.len()))
                    .collect();
            }
            let last_positive = fitnesses
                .iter()
                .rposition(|f| *f > 0.0)
                .expect("total > 0 implies a positive fitness");
            (0..pool_size)
                .map(|_| {
                    // x in (0, total]: a zero-fitness genome can never trip
                    // the threshold, so only positive weights are selectable
                    let mut x = (1.0 - rng.random::<f64>()) * total;
                    for (i, f) in fitnesses.iter().enumerate() {
                        x -= f;
                        if x <= 0.0 {
                            return i;
                        }
                    }
                    last_positive
                })
                .collect()
        }
        Selection::Tournament => (0..pool_size)
            .map(|_| {
                let a = rng.random_range(0..fitnesses.len());
                let b = rng.random_range(0..fitnesses.len());
                if fitnesses[b] > fitnesses[a] {
                    b
                } else {
                    a
                }
            })
            .collect(),
    }
}

/// Recombines two equal-length genomes with the given probability; otherwise
/// returns the parents unchanged. Both kinds conserve the multiset of bits at
/// every position across the pair.
pub fn crossover(
    a: &[bool],
    b: &[bool],
    prob: f64,
    kind: CrossoverKind,
    rng: &mut impl Rng,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let n = a.len();
    if n < 2 || rng.random::<f64>() >= prob {
        return Ok((a.to_vec(), b.to_vec()));
    }
    match kind {
        CrossoverKind::SinglePoint => {
            let cut = rng.random_range(1..n);
            let mut c1 = Vec::with_capacity(n);
            let mut c2 = Vec::with_capacity(n);
            c1.extend_from_slice(&a[..cut]);
            c1.extend_from_slice(&b[cut..]);
            c2.extend_from_slice(&b[..cut]);
            c2.extend_from_slice(&a[cut..]);
            Ok((c1, c2))
        }
        CrossoverKind::Uniform => {
            let mut c1 = a.to_vec();
            let mut c2 = b.to_vec();
            for i in 0..n {
                if rng.random_bool(0.5) {
                    c1[i] = b[i];
                    c2[i] = a[i];
                }
            }
            Ok((c1, c2))
        }
    }
}

/// Flips each bit independently with probability `prob`.
///
/// Implemented with geometric gap sampling so a sparse mutation of a long
/// genome costs one RNG draw per flip rather than one per bit; the flip
/// pattern is still exactly per-bit Bernoulli.
pub fn mutate(genome: &mut [bool], prob: f64, rng: &mut impl Rng) {
    if prob <= 0.0 {
        return;
    }
    if prob >= 1.0 {
        for bit in genome.iter_mut() {
            *bit = !*bit;
        }
        return;
    }
    let ln_q = (1.0 - prob).ln();
    let mut i = geometric_gap(rng, ln_q);
    while i < genome.len() {
        genome[i] = !genome[i];
        i = i.saturating_add(1).saturating_add(geometric_gap(rng, ln_q));
    }
}

fn geometric_gap(rng: &mut impl Rng, ln_q: f64) -> usize {
    let r = 1.0 - rng.random::<f64>(); // (0, 1]
    let g = (r.ln() / ln_q).floor();
    if g >= usize::MAX as f64 {
        usize::MAX
    } else {
        g as usize
    }
}

/// Runs the generational GA from `initial`, maximizing `fitness_fn`, until
/// the target fitness is reached or the iteration budget is spent.
///
/// Deterministic for a fixed seed: the engine owns a single sequential RNG
/// stream, and parallel fitness evaluation is reduced in genome index order.
pub fn optimize<F>(initial: &PulseSequence, fitness_fn: F, config: &GaConfig) -> Result<GaRun>
where
    F: Fn(&[bool]) -> f64 + Sync,
{
    config.validate()?;
    if initial.is_empty() {
        return Err(Error::EmptySequence);
    }

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let pop_size = config.population_size;

    let mut population: Vec<Vec<bool>> = Vec::with_capacity(pop_size);
    population.push(initial.bits().to_vec());
    for _ in 1..pop_size {
        let mut genome = initial.bits().to_vec();
        mutate(&mut genome, config.mutation_prob, &mut rng);
        population.push(genome);
    }
    let mut fitnesses = eval_parallel(&population, &fitness_fn);

    let mut history = Vec::new();
    let mut best_genome = population[0].clone();
    let mut best_fitness = f64::NEG_INFINITY;

    let record =
        |generation: usize,
         population: &[Vec<bool>],
         fitnesses: &[f64],
         best_genome: &mut Vec<bool>,
         best_fitness: &mut f64,
         history: &mut Vec<GenerationStats>| {
            let (gen_best_idx, gen_best) = fitnesses
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bf), (i, &f)| {
                    if f > bf {
                        (i, f)
                    } else {
                        (bi, bf)
                    }
                });
            if gen_best > *best_fitness {
                *best_fitness = gen_best;
                *best_genome = population[gen_best_idx].clone();
            }
            let mean = fitnesses.iter().sum::<f64>() / fitnesses.len() as f64;
            history.push(GenerationStats {
                generation,
                best_fitness: gen_best,
                mean_fitness: mean,
            });
            gen_best
        };

    let mut generation = 0;
    let mut gen_best = record(
        generation,
        &population,
        &fitnesses,
        &mut best_genome,
        &mut best_fitness,
        &mut history,
    );

    while gen_best < config.target_fitness && generation < config.max_iterations {
        generation += 1;

        let pool = select(&fitnesses, config.mating_pool, config.selection, &mut rng);

        // elites carry over unchanged, fitness memoized
        let mut elite_order: Vec<usize> = (0..pop_size).collect();
        elite_order.sort_by(|&i, &j| fitnesses[j].total_cmp(&fitnesses[i]).then(i.cmp(&j)));
        let elites: Vec<(Vec<bool>, f64)> = elite_order[..config.elitism]
            .iter()
            .map(|&i| (population[i].clone(), fitnesses[i]))
            .collect();

        let offspring_count = pop_size - config.elitism;
        let mut offspring: Vec<Vec<bool>> = Vec::with_capacity(offspring_count);
        while offspring.len() < offspring_count {
            let pa = pool[rng.random_range(0..pool.len())];
            let pb = pool[rng.random_range(0..pool.len())];
            let (mut c1, mut c2) = crossover(
                &population[pa],
                &population[pb],
                config.crossover_prob,
                config.crossover,
                &mut rng,
            )?;
            mutate(&mut c1, config.mutation_prob, &mut rng);
            mutate(&mut c2, config.mutation_prob, &mut rng);
            offspring.push(c1);
            if offspring.len() < offspring_count {
                offspring.push(c2);
            }
        }
        let offspring_fitness = eval_parallel(&offspring, &fitness_fn);

        population.clear();
        fitnesses.clear();
        for (genome, fit) in elites {
            population.push(genome);
            fitnesses.push(fit);
        }
        population.extend(offspring);
        fitnesses.extend(offspring_fitness);

        gen_best = record(
            generation,
            &population,
            &fitnesses,
            &mut best_genome,
            &mut best_fitness,
            &mut history,
        );
    }

    let terminated_by = if gen_best >= config.target_fitness {
        Termination::TargetReached
    } else {
        Termination::MaxIterations
    };

    Ok(GaRun {
        best_genome: initial.with_bits(best_genome),
        best_fitness,
        history,
        generations_used: generation,
        terminated_by,
    })
}

fn eval_parallel<F>(genomes: &[Vec<bool>], fitness_fn: &F) -> Vec<f64>
where
    F: Fn(&[bool]) -> f64 + Sync,
{
    genomes.par_iter().map(|g| fitness_fn(g)).collect()
}
