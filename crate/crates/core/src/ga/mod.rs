//! Genetic algorithm over fixed-length label genomes.
//!
//! Each drone owns a segment of `n_C * n_F` genes with values in
//! `[0, n_F - 1]`. Segments are decoded into trips by [`Decoder`], plans are
//! scored by [`penalized_fitness`], and the population evolves by binary
//! tournament, crossover, mutation and elitist survival of the best
//! `population_size` among parents and offspring.
//!
//! Random draws come from one ChaCha8 stream seeded by `seed`, in this order:
//! initial population (gene by gene), then per generation for each mating
//! the two tournaments (two index draws each), crossover, and the mutation
//! of each child. Fitness evaluation runs in parallel and draws nothing.

mod decode;
mod operators;

pub use decode::{decode, genome_len, recover, Decoder};
pub use operators::{one_point, polynomial_delta, polynomial_mutation, sample_genes, sbx, SbxParams};

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcs::MetricMatrix;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::{check_feasibility, EvalResult, ObjectiveKind, Plan, ViolationClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverKind {
    #[default]
    Sbx,
    OnePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    /// `None` means ten times the number of customers.
    pub max_generations: Option<usize>,
    pub time_limit_s: f64,
    /// `None` means ten times the region diagonal in metres.
    pub penalty_factor: Option<f64>,
    pub crossover: CrossoverKind,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// `None` means one over the genome length.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    pub objective: ObjectiveKind,
    /// Discard offspring whose genome already exists in the population.
    pub eliminate_duplicates: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            max_generations: None,
            time_limit_s: 3600.0,
            penalty_factor: None,
            crossover: CrossoverKind::Sbx,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
            objective: ObjectiveKind::TotalDistance,
            eliminate_duplicates: true,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            )));
        }
        let probs = [
            ("crossover_prob", Some(self.crossover_prob)),
            ("mutation_prob", self.mutation_prob),
        ];
        for (name, p) in probs {
            if let Some(p) = p {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
                }
            }
        }
        if !(self.crossover_eta >= 0.0) || !(self.mutation_eta >= 0.0) {
            return Err(Error::Config("distribution indices must be non-negative".into()));
        }
        if !(self.time_limit_s >= 0.0) {
            return Err(Error::Config(format!("time_limit_s must be non-negative, got {}", self.time_limit_s)));
        }
        if let Some(pf) = self.penalty_factor {
            if !(pf >= 0.0) || !pf.is_finite() {
                return Err(Error::Config(format!("penalty_factor must be finite and non-negative, got {pf}")));
            }
        }
        Ok(())
    }

    pub fn generation_cap(&self, n_customers: usize) -> usize {
        self.max_generations.unwrap_or(10 * n_customers)
    }

    pub fn penalty_for(&self, instance: &Instance) -> f64 {
        self.penalty_factor.unwrap_or(10.0 * instance.region.diagonal())
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Genome of one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<usize>,
}

/// `population_size` genomes with i.i.d. uniform genes.
pub fn sample_population(config: &GaConfig, instance: &Instance) -> Result<Vec<Individual>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_with(config.population_size, instance, &mut rng)
}

fn sample_with<R: Rng + ?Sized>(n: usize, instance: &Instance, rng: &mut R) -> Result<Vec<Individual>> {
    let n_f = instance.n_flyable();
    if n_f < 2 {
        return Err(Error::Argument(format!("need at least 2 flyable nodes, got {n_f}")));
    }
    let len = genome_len(instance);
    Ok((0..n)
        .map(|_| Individual {
            genes: sample_genes(len, n_f - 1, rng),
        })
        .collect())
}

/// Crossover with the configured operator.
pub fn crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    upper: usize,
    config: &GaConfig,
    rng: &mut R,
) -> Result<(Individual, Individual)> {
    let (c1, c2) = match config.crossover {
        CrossoverKind::Sbx => sbx(
            &a.genes,
            &b.genes,
            upper,
            &SbxParams {
                prob: config.crossover_prob,
                eta: config.crossover_eta,
                ..SbxParams::default()
            },
            rng,
        )?,
        CrossoverKind::OnePoint => one_point(&a.genes, &b.genes, config.crossover_prob, rng)?,
    };
    Ok((Individual { genes: c1 }, Individual { genes: c2 }))
}

pub fn mutate<R: Rng + ?Sized>(ind: &Individual, upper: usize, config: &GaConfig, rng: &mut R) -> Individual {
    let mut genes = ind.genes.clone();
    let prob = config
        .mutation_prob
        .unwrap_or(if genes.is_empty() { 0.0 } else { 1.0 / genes.len() as f64 });
    polynomial_mutation(&mut genes, upper, prob, config.mutation_eta, rng);
    Individual { genes }
}

/// Scale dividing each violation class before summation.
pub fn violation_normalizer(class: ViolationClass, instance: &Instance) -> f64 {
    match class {
        ViolationClass::CustomerCoverage => instance.n_customers().max(1) as f64,
        ViolationClass::TimeWindow | ViolationClass::Horizon => instance.horizon_s.max(1.0),
        ViolationClass::Handover => instance.thresholds.h_max.max(1.0),
        ViolationClass::Outage => instance.thresholds.o_max.max(1.0),
        ViolationClass::Battery | ViolationClass::TripStructure | ViolationClass::DepotChaining => 1.0,
    }
}

/// Sum over classes of magnitude divided by the class normalizer.
pub fn total_violation(result: &EvalResult, instance: &Instance) -> f64 {
    ViolationClass::ALL
        .iter()
        .map(|&c| {
            let m = result.magnitude(c);
            if m == 0.0 {
                0.0
            } else {
                m / violation_normalizer(c, instance)
            }
        })
        .sum()
}

/// Total distance plus `penalty_factor` times the normalized violation.
pub fn penalized_fitness(plan: &Plan, instance: &Instance, matrix: &MetricMatrix, penalty_factor: f64) -> f64 {
    let result = check_feasibility(plan, instance, matrix);
    penalized_value(ObjectiveKind::TotalDistance, &result, instance, penalty_factor)
}

pub fn penalized_value(kind: ObjectiveKind, result: &EvalResult, instance: &Instance, penalty_factor: f64) -> f64 {
    let v = total_violation(result, instance);
    let obj = kind.value(result);
    if v == 0.0 {
        obj
    } else {
        obj + penalty_factor * v
    }
}

#[derive(Debug, Clone)]
struct Scored {
    ind: Individual,
    fitness: f64,
    objective: f64,
    violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub evaluations: usize,
    pub best_fitness: f64,
    /// Best feasible objective seen so far, if any.
    pub best_feasible: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaStats {
    pub generations: usize,
    pub generation_cap: usize,
    pub evaluations: usize,
    pub wall_time_s: f64,
    pub stopped_by_time: bool,
    pub trace: Vec<GenerationRecord>,
}

impl GaStats {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,evaluations,best_fitness,best_feasible\n");
        for r in &self.trace {
            let feas = r.best_feasible.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.generation, r.evaluations, r.best_fitness, feas);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    pub plan: Plan,
    pub result: EvalResult,
    pub feasible: bool,
    pub objective_value: f64,
    pub fitness: f64,
    pub genes: Vec<usize>,
    pub stats: GaStats,
}

struct Evaluator<'a> {
    instance: &'a Instance,
    matrix: &'a MetricMatrix,
    decoder: Decoder<'a>,
    kind: ObjectiveKind,
    penalty: f64,
}

impl Evaluator<'_> {
    fn score(&self, inds: Vec<Individual>) -> Vec<Scored> {
        inds.into_par_iter()
            .map(|ind| {
                let plan = self.decoder.decode(&ind.genes);
                let result = check_feasibility(&plan, self.instance, self.matrix);
                let violation = total_violation(&result, self.instance);
                let objective = self.kind.value(&result);
                let fitness = if violation == 0.0 {
                    objective
                } else {
                    objective + self.penalty * violation
                };
                Scored {
                    ind,
                    fitness,
                    objective,
                    violation,
                }
            })
            .collect()
    }
}

/// Tracks the best feasible candidate and the least violating one.
#[derive(Default)]
struct Incumbents {
    feasible: Option<Scored>,
    least_violating: Option<Scored>,
}

impl Incumbents {
    fn offer(&mut self, s: &Scored) {
        if s.violation == 0.0 {
            let better = self
                .feasible
                .as_ref()
                .is_none_or(|b| s.objective < b.objective);
            if better {
                self.feasible = Some(s.clone());
            }
        }
        let better = self
            .least_violating
            .as_ref()
            .is_none_or(|b| (s.violation, s.fitness) < (b.violation, b.fitness));
        if better {
            self.least_violating = Some(s.clone());
        }
    }
}

fn tournament<R: Rng + ?Sized>(pop: &[Scored], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    match pop[a].fitness.total_cmp(&pop[b].fitness) {
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Equal => a.min(b),
    }
}

/// Runs the GA to its generation cap or time limit.
pub fn run(instance: &Instance, matrix: &MetricMatrix, config: &GaConfig) -> Result<GaOutcome> {
    config.validate()?;
    if matrix.len() != instance.n_flyable() {
        return Err(Error::Argument(format!(
            "metric matrix has {} nodes, instance has {}",
            matrix.len(),
            instance.n_flyable()
        )));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let upper = instance.n_flyable().saturating_sub(1);
    let eval = Evaluator {
        instance,
        matrix,
        decoder: Decoder::new(instance),
        kind: config.objective,
        penalty: config.penalty_for(instance),
    };
    let cap = config.generation_cap(instance.n_customers());
    let n = config.population_size;

    let mut pop = eval.score(sample_with(n, instance, &mut rng)?);
    let mut evaluations = pop.len();
    let mut best = Incumbents::default();
    pop.iter().for_each(|s| best.offer(s));
    sort_population(&mut pop);

    let mut trace = vec![GenerationRecord {
        generation: 0,
        evaluations,
        best_fitness: pop[0].fitness,
        best_feasible: best.feasible.as_ref().map(|s| s.objective),
    }];
    let mut generations = 0;
    let mut stopped_by_time = false;
    while generations < cap {
        if started.elapsed().as_secs_f64() >= config.time_limit_s {
            stopped_by_time = true;
            break;
        }
        let mut seen: HashSet<Vec<usize>> = if config.eliminate_duplicates {
            pop.iter().map(|s| s.ind.genes.clone()).collect()
        } else {
            HashSet::new()
        };
        let mut offspring: Vec<Individual> = Vec::with_capacity(n);
        let mut attempts = 0;
        while offspring.len() < n && attempts < 100 * n {
            attempts += 1;
            let a = tournament(&pop, &mut rng);
            let b = tournament(&pop, &mut rng);
            let (c1, c2) = crossover(&pop[a].ind, &pop[b].ind, upper, config, &mut rng)?;
            for child in [c1, c2] {
                let child = mutate(&child, upper, config, &mut rng);
                if offspring.len() >= n {
                    break;
                }
                if config.eliminate_duplicates && !seen.insert(child.genes.clone()) {
                    continue;
                }
                offspring.push(child);
            }
        }
        let scored = eval.score(offspring);
        evaluations += scored.len();
        scored.iter().for_each(|s| best.offer(s));
        pop.extend(scored);
        sort_population(&mut pop);
        pop.truncate(n);
        generations += 1;
        trace.push(GenerationRecord {
            generation: generations,
            evaluations,
            best_fitness: pop[0].fitness,
            best_feasible: best.feasible.as_ref().map(|s| s.objective),
        });
    }

    let chosen = best
        .feasible
        .clone()
        .or(best.least_violating.clone())
        .expect("population is non-empty");
    let plan = eval.decoder.decode(&chosen.ind.genes);
    let result = check_feasibility(&plan, instance, matrix);
    Ok(GaOutcome {
        feasible: result.is_feasible(),
        objective_value: chosen.objective,
        fitness: chosen.fitness,
        genes: chosen.ind.genes,
        plan,
        result,
        stats: GaStats {
            generations,
            generation_cap: cap,
            evaluations,
            wall_time_s: started.elapsed().as_secs_f64(),
            stopped_by_time,
            trace,
        },
    })
}

/// Stable sort by fitness; equal fitness keeps the earlier entry first.
fn sort_population(pop: &mut [Scored]) {
    pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
}
