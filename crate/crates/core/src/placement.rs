//! Sensor placement: the closed-form heuristic and a small evolutionary
//! search over the offset of a mirrored sensor pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::check_alpha;

/// Offset `s = (L/2)(1/2 - alpha)` of the heuristic pair `{s, L - s}`.
pub fn uniform_heuristic_placement(length: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(length.is_finite() && length >= 0.0) {
        return Err(Error::domain("length", length, "[0, inf)"));
    }
    Ok(0.5 * length * (0.5 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EAConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Probability that an individual is mutated at all.
    pub mutation_prob: f64,
    pub mutation_sigma: f64,
    /// Probability that each gene of a mutated individual is perturbed.
    pub mutation_per_gene_prob: f64,
    pub crossover_prob: f64,
    pub blend_alpha: f64,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for EAConfig {
    fn default() -> Self {
        EAConfig {
            population_size: 50,
            generations: 50,
            mutation_prob: 0.2,
            mutation_sigma: 10.0,
            mutation_per_gene_prob: 0.2,
            crossover_prob: 0.5,
            blend_alpha: 0.5,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl EAConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("mutation_prob", self.mutation_prob),
            ("mutation_per_gene_prob", self.mutation_per_gene_prob),
            ("crossover_prob", self.crossover_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(name, p, "[0, 1]"));
            }
        }
        for (name, n) in [
            ("population_size", self.population_size),
            ("generations", self.generations),
            ("tournament_size", self.tournament_size),
        ] {
            if n < 1 {
                return Err(Error::domain(name, n as f64, "[1, inf)"));
            }
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return Err(Error::domain(
                "mutation_sigma",
                self.mutation_sigma,
                "[0, inf)",
            ));
        }
        if !(self.blend_alpha.is_finite() && self.blend_alpha >= 0.0) {
            return Err(Error::domain("blend_alpha", self.blend_alpha, "[0, inf)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best objective among the individuals of this generation.
    pub population_best: f64,
    /// Best objective seen so far.
    pub incumbent: f64,
    pub incumbent_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EAResult {
    pub best_s: f64,
    pub best_value: f64,
    /// Generation 0 is the initial population.
    pub history: Vec<GenerationRecord>,
}

/// Minimizes `objective` over `bounds` with tournament selection, blend
/// crossover and Gaussian mutation. The best individual so far is carried
/// into every generation, and genes are clamped to `bounds`.
pub fn optimize_placement_ea<F>(
    objective: F,
    bounds: (f64, f64),
    config: &EAConfig,
) -> Result<EAResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    config.validate()?;
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::domain(
            "bounds upper",
            hi,
            "finite and >= lower bound",
        ));
    }
    let evaluate =
        |genes: &[f64]| -> Result<Vec<f64>> { genes.par_iter().map(|&s| objective(s)).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mutation = Normal::new(0.0, config.mutation_sigma)
        .map_err(|_| Error::domain("mutation_sigma", config.mutation_sigma, "[0, inf)"))?;

    let mut population: Vec<f64> = (0..config.population_size)
        .map(|_| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    let mut fitness = evaluate(&population)?;
    let (mut best_s, mut best_value) = argmin(&population, &fitness);
    let mut history = vec![GenerationRecord {
        generation: 0,
        population_best: best_value,
        incumbent: best_value,
        incumbent_s: best_s,
    }];

    for generation in 1..=config.generations {
        let mut offspring: Vec<f64> = (0..config.population_size)
            .map(|_| {
                let mut winner = rng.random_range(0..population.len());
                for _ in 1..config.tournament_size {
                    let rival = rng.random_range(0..population.len());
                    if fitness[rival] < fitness[winner] {
                        winner = rival;
                    }
                }
                population[winner]
            })
            .collect();

        for pair in offspring.chunks_exact_mut(2) {
            if rng.random::<f64>() < config.crossover_prob {
                let gamma =
                    (1.0 + 2.0 * config.blend_alpha) * rng.random::<f64>() - config.blend_alpha;
                let (a, b) = (pair[0], pair[1]);
                pair[0] = (1.0 - gamma) * a + gamma * b;
                pair[1] = gamma * a + (1.0 - gamma) * b;
            }
        }
        for gene in offspring.iter_mut() {
            if rng.random::<f64>() < config.mutation_prob
                && rng.random::<f64>() < config.mutation_per_gene_prob
            {
                *gene += mutation.sample(&mut rng);
            }
            *gene = gene.clamp(lo, hi);
        }

        let mut offspring_fitness = evaluate(&offspring)?;
        let (gen_s, gen_value) = argmin(&offspring, &offspring_fitness);
        if gen_value < best_value {
            (best_s, best_value) = (gen_s, gen_value);
        } else {
            // Elitism: the incumbent replaces the worst offspring.
            let (worst, _) = offspring_fitness
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("population is non-empty");
            offspring[worst] = best_s;
            offspring_fitness[worst] = best_value;
        }
        population = offspring;
        fitness = offspring_fitness;
        history.push(GenerationRecord {
            generation,
            population_best: gen_value,
            incumbent: best_value,
            incumbent_s: best_s,
        });
    }
    Ok(EAResult {
        best_s,
        best_value,
        history,
    })
}

// NaN objectives never win.
fn argmin(genes: &[f64], values: &[f64]) -> (f64, f64) {
    let mut best = (genes[0], values[0]);
    for (&s, &v) in genes.iter().zip(values) {
        if v < best.1 || best.1.is_nan() {
            best = (s, v);
        }
    }
    best
}
