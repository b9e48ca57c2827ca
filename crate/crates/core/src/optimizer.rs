//! Population-based dimension optimization: an estimation-of-distribution
//! algorithm (univariate normal model, truncation selection) and a genetic
//! algorithm baseline, both driving the same objective interface.
//!
//! Fitness is the raw objective plus a penalty proportional to how far the
//! reachable fraction falls below the requirement:
//! `fitness = f(x) + σ · max(0, α − θ(x))`.
//!
//! Runs are deterministic for a fixed seed: initialization, per-evaluation
//! seeds, and per-generation sampling each use their own derived random
//! stream, and parallel evaluation preserves index order.

use crate::error::{Error, Result};
use crate::rng::{self, stream};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::TAU;

/// What the optimizer needs from a design problem.
pub trait DesignObjective: Sync {
    /// Number of free variables.
    fn dim(&self) -> usize;
    /// Per-variable lower and upper bounds (strictly ordered).
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    /// Required reachable fraction α used in the fitness penalty.
    fn required_fraction(&self) -> f64;
    /// Full evaluation: objective value and reached fraction θ.  `seed`
    /// scopes any randomness inside the evaluation (reachability sampling),
    /// so equal `(x, seed)` pairs give equal results.
    fn evaluate(&self, x: &[f64], seed: u64) -> Result<Evaluation>;
    /// Cheap objective probe without the reachability part, when the
    /// objective is computable from `x` alone (total length is; per-point
    /// torque is not).  Must equal `evaluate(...).objective` where defined.
    fn quick_objective(&self, x: &[f64]) -> Option<f64>;
}

/// Result of one objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub theta: f64,
}

/// Penalized fitness: `objective + sigma_penalty · max(0, alpha − theta)`.
pub fn fitness(objective: f64, theta: f64, alpha: f64, sigma_penalty: f64) -> f64 {
    objective + sigma_penalty * (alpha - theta).max(0.0)
}

/// One evaluated candidate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub theta: f64,
    pub fitness: f64,
}

/// Univariate normal sampling model (one independent normal per variable).
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateNormalModel {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
}

/// Genetic-algorithm operators' probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaSettings {
    /// Probability that a parent pair is recombined (uniform crossover).
    pub crossover_prob: f64,
    /// Per-variable probability of a uniform reset within bounds.
    pub mutation_prob: f64,
}

impl Default for GaSettings {
    fn default() -> Self {
        GaSettings {
            crossover_prob: 0.9,
            mutation_prob: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Eda,
    Ga,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Eda => "eda",
            Algorithm::Ga => "ga",
        })
    }
}

/// Optimizer run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerParams {
    pub algorithm: Algorithm,
    pub population: usize,
    pub iterations: usize,
    /// Fraction of the population kept by truncation selection.
    pub truncation_rate: f64,
    /// Weight of the infeasibility penalty in the fitness.
    pub sigma_penalty: f64,
    pub seed: u64,
    /// When set (EDA only), each generation draws candidates from the model
    /// but pre-screens them with the quick objective, keeping only samples
    /// that would beat the best feasible objective so far; the remainder of
    /// the population is filled unconditionally once `trial_cap` draws have
    /// been spent.
    pub selective: bool,
    /// Maximum screened draws per generation in selective mode.
    pub trial_cap: usize,
    pub ga: GaSettings,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            algorithm: Algorithm::Eda,
            population: 100,
            iterations: 20,
            truncation_rate: 0.5,
            sigma_penalty: 0.33,
            seed: 0,
            selective: false,
            trial_cap: 10_000,
            ga: GaSettings::default(),
        }
    }
}

impl OptimizerParams {
    /// Number of individuals truncation selection keeps.
    pub fn selection_count(&self) -> usize {
        (self.truncation_rate * self.population as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::InvalidParameter("population must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be positive".into()));
        }
        if !(self.truncation_rate > 0.0 && self.truncation_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation rate must lie in (0, 1], got {}",
                self.truncation_rate
            )));
        }
        let kept = self.selection_count();
        if kept == 0 {
            return Err(Error::InvalidParameter(format!(
                "truncation keeps no individuals (rate {} of population {})",
                self.truncation_rate, self.population
            )));
        }
        if self.algorithm == Algorithm::Eda && kept < 2 {
            return Err(Error::InvalidParameter(
                "the distribution model needs at least two selected individuals".into(),
            ));
        }
        if !(self.sigma_penalty >= 0.0) || !self.sigma_penalty.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "penalty weight must be non-negative, got {}",
                self.sigma_penalty
            )));
        }
        if self.selective {
            if self.algorithm != Algorithm::Eda {
                return Err(Error::InvalidParameter(
                    "selective generation is only defined for the EDA".into(),
                ));
            }
            if self.trial_cap == 0 {
                return Err(Error::InvalidParameter("trial cap must be positive".into()));
            }
        }
        let GaSettings {
            crossover_prob,
            mutation_prob,
        } = self.ga;
        for (name, p) in [("crossover", crossover_prob), ("mutation", mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} probability must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Audit of one selective generation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionAudit {
    /// Screened draws spent (capped by `trial_cap`).
    pub trials: usize,
    /// Draws accepted through the quick-objective threshold.
    pub accepted: usize,
    /// The threshold used: best feasible objective so far (+∞ if none).
    pub threshold: f64,
    /// Largest quick objective among accepted draws (NaN if none accepted).
    pub max_accepted_objective: f64,
}

/// Per-iteration log entry.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Best feasible objective seen so far (+∞ until a feasible design
    /// appears); non-increasing over iterations.
    pub best_feasible_objective: f64,
    /// Best fitness seen so far.
    pub best_fitness: f64,
    /// Mean reached fraction of this iteration's population.
    pub mean_theta: f64,
    /// The model fitted from this iteration's selection (EDA only).
    pub model: Option<UnivariateNormalModel>,
    /// Audit of the selective generation that produced the *next*
    /// population (selective EDA only; absent on the final iteration).
    pub selection: Option<SelectionAudit>,
}

/// Outcome of an optimization run.
#[derive(Clone, Debug)]
pub struct RunResult {
    /// Best design meeting the required fraction, if any was found.
    pub best_feasible: Option<Solution>,
    /// Best design by penalized fitness (always present).
    pub best_by_fitness: Solution,
    pub history: Vec<IterationRecord>,
    /// Objective evaluations actually performed (cache misses).
    pub evaluations: usize,
}

/// Initial population: uniform in the box, drawn from the dedicated
/// initialization stream — identical for every algorithm using this seed.
pub fn init_population(lb: &[f64], ub: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream_rng(seed, stream::OPT_INIT, 0);
    (0..n)
        .map(|_| {
            lb.iter()
                .zip(ub)
                .map(|(&lo, &hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect()
        })
        .collect()
}

/// Indices of the best `⌊rate·n⌋` solutions, ranked by fitness with ties
/// broken by objective, then by index (so ranking is reproducible).
pub fn truncation_select(solutions: &[Solution], rate: f64) -> Result<Vec<usize>> {
    let keep = (rate * solutions.len() as f64).floor() as usize;
    if keep == 0 {
        return Err(Error::InvalidParameter(format!(
            "truncation keeps no individuals (rate {rate} of {})",
            solutions.len()
        )));
    }
    let mut order: Vec<usize> = (0..solutions.len()).collect();
    order.sort_by(|&a, &b| {
        solutions[a]
            .fitness
            .total_cmp(&solutions[b].fitness)
            .then(solutions[a].objective.total_cmp(&solutions[b].objective))
            .then(a.cmp(&b))
    });
    order.truncate(keep);
    Ok(order)
}

/// Maximum-likelihood univariate normal fit over the selected points, with
/// the standard deviation floored at `1e-3 · (ub − lb)` per variable so the
/// model never collapses to a point.
pub fn fit_model(
    points: &[&[f64]],
    lb: &[f64],
    ub: &[f64],
) -> Result<UnivariateNormalModel> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "the distribution model needs at least two points".into(),
        ));
    }
    let dim = lb.len();
    let m = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (s, v) in mean.iter_mut().zip(*p) {
            *s += v;
        }
    }
    for s in mean.iter_mut() {
        *s /= m;
    }
    let mut std_dev = vec![0.0; dim];
    for p in points {
        for (j, v) in p.iter().enumerate() {
            let d = v - mean[j];
            std_dev[j] += d * d;
        }
    }
    for (j, s) in std_dev.iter_mut().enumerate() {
        let floor = 1e-3 * (ub[j] - lb[j]);
        *s = (*s / m).sqrt().max(floor);
    }
    Ok(UnivariateNormalModel { mean, std_dev })
}

/// One standard normal via the Box–Muller cosine branch.  `1 − u` maps the
/// generator's `[0, 1)` range onto `(0, 1]`, keeping the logarithm finite.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn sample_one<R: Rng>(
    model: &UnivariateNormalModel,
    lb: &[f64],
    ub: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    model
        .mean
        .iter()
        .zip(&model.std_dev)
        .zip(lb.iter().zip(ub))
        .map(|((&mu, &sd), (&lo, &hi))| (mu + sd * standard_normal(rng)).clamp(lo, hi))
        .collect()
}

/// Samples a full population from the model, clipping to bounds.
pub fn sample_model<R: Rng>(
    model: &UnivariateNormalModel,
    lb: &[f64],
    ub: &[f64],
    n: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..n).map(|_| sample_one(model, lb, ub, rng)).collect()
}

/// Model sampling with quick-objective screening: a draw is kept only if
/// its quick objective beats `threshold`, until the population is full or
/// `trial_cap` draws are spent; any remainder is filled unconditionally.
/// With `threshold = +∞` every draw is accepted, so the generated
/// population — and the random stream consumed — is identical to
/// [`sample_model`].
fn select_generation<R: Rng>(
    problem: &dyn DesignObjective,
    model: &UnivariateNormalModel,
    lb: &[f64],
    ub: &[f64],
    n: usize,
    threshold: f64,
    trial_cap: usize,
    rng: &mut R,
) -> (Vec<Vec<f64>>, SelectionAudit) {
    let mut next = Vec::with_capacity(n);
    let mut trials = 0_usize;
    let mut accepted = 0_usize;
    let mut max_accepted = f64::NAN;
    while next.len() < n && trials < trial_cap {
        let x = sample_one(model, lb, ub, rng);
        trials += 1;
        let quick = problem
            .quick_objective(&x)
            .expect("selective mode requires a quick objective (validated)");
        if quick < threshold {
            accepted += 1;
            max_accepted = if max_accepted.is_nan() {
                quick
            } else {
                max_accepted.max(quick)
            };
            next.push(x);
        }
    }
    while next.len() < n {
        next.push(sample_one(model, lb, ub, rng));
    }
    (
        next,
        SelectionAudit {
            trials,
            accepted,
            threshold,
            max_accepted_objective: max_accepted,
        },
    )
}

/// One genetic-algorithm generation: parents by truncation selection, then
/// pairwise uniform crossover and per-variable uniform-reset mutation.
fn ga_generation<R: Rng>(
    population: &[Vec<f64>],
    parents: &[usize],
    settings: &GaSettings,
    lb: &[f64],
    ub: &[f64],
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let n = population.len();
    let mut next = Vec::with_capacity(n);
    while next.len() < n {
        let pa = parents[rng.gen_range(0..parents.len())];
        let pb = parents[rng.gen_range(0..parents.len())];
        let mut a = population[pa].clone();
        let mut b = population[pb].clone();
        if rng.gen::<f64>() < settings.crossover_prob {
            for j in 0..a.len() {
                if rng.gen::<f64>() < 0.5 {
                    std::mem::swap(&mut a[j], &mut b[j]);
                }
            }
        }
        for child in [&mut a, &mut b] {
            for j in 0..child.len() {
                if rng.gen::<f64>() < settings.mutation_prob {
                    child[j] = lb[j] + rng.gen::<f64>() * (ub[j] - lb[j]);
                }
            }
        }
        next.push(a);
        if next.len() < n {
            next.push(b);
        }
    }
    next
}

fn bits_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Runs the configured optimizer.  Identical inputs produce identical
/// results and histories regardless of thread count.
pub fn run(problem: &dyn DesignObjective, params: &OptimizerParams) -> Result<RunResult> {
    params.validate()?;
    let (lb, ub) = problem.bounds();
    let dim = problem.dim();
    if lb.len() != dim || ub.len() != dim || dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "bounds must match dimension {dim} and be non-empty"
        )));
    }
    for j in 0..dim {
        if !lb[j].is_finite() || !ub[j].is_finite() || !(lb[j] < ub[j]) {
            return Err(Error::InvalidParameter(format!(
                "variable {j} has invalid bounds [{}, {}]",
                lb[j], ub[j]
            )));
        }
    }
    let alpha = problem.required_fraction();
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "required fraction must lie in (0, 1], got {alpha}"
        )));
    }
    if params.selective && problem.quick_objective(&lb).is_none() {
        return Err(Error::InvalidParameter(
            "selective generation needs a quick objective, which this problem lacks".into(),
        ));
    }

    let n = params.population;
    let mut population = init_population(&lb, &ub, n, params.seed);
    let mut cache: HashMap<Vec<u64>, Evaluation> = HashMap::new();
    let mut history = Vec::with_capacity(params.iterations);
    let mut best_feasible: Option<Solution> = None;
    let mut best_by_fitness: Option<Solution> = None;
    let mut evaluations = 0_usize;

    for iter in 0..params.iterations {
        // Evaluate (cache by exact bit pattern; misses in parallel, merged
        // back in index order).
        let mut evals: Vec<Option<Evaluation>> = population
            .iter()
            .map(|x| cache.get(&bits_key(x)).copied())
            .collect();
        let misses: Vec<usize> = (0..n).filter(|&i| evals[i].is_none()).collect();
        let fresh: Vec<(usize, Evaluation)> = misses
            .par_iter()
            .map(|&i| {
                let eval_seed =
                    rng::derive_seed(params.seed, stream::OPT_EVAL, (iter * n + i) as u64);
                problem.evaluate(&population[i], eval_seed).map(|e| (i, e))
            })
            .collect::<Result<_>>()?;
        for (i, e) in fresh {
            cache.insert(bits_key(&population[i]), e);
            evals[i] = Some(e);
            evaluations += 1;
        }

        let solutions: Vec<Solution> = population
            .iter()
            .zip(&evals)
            .map(|(x, e)| {
                let e = e.expect("all evaluated");
                Solution {
                    x: x.clone(),
                    objective: e.objective,
                    theta: e.theta,
                    fitness: fitness(e.objective, e.theta, alpha, params.sigma_penalty),
                }
            })
            .collect();

        for s in &solutions {
            if s.theta >= alpha
                && best_feasible
                    .as_ref()
                    .map_or(true, |b| s.objective < b.objective)
            {
                best_feasible = Some(s.clone());
            }
            if best_by_fitness.as_ref().map_or(true, |b| {
                s.fitness < b.fitness
                    || (s.fitness == b.fitness && s.objective < b.objective)
            }) {
                best_by_fitness = Some(s.clone());
            }
        }
        let mean_theta = solutions.iter().map(|s| s.theta).sum::<f64>() / n as f64;
        let threshold = best_feasible
            .as_ref()
            .map_or(f64::INFINITY, |b| b.objective);

        let selected = truncation_select(&solutions, params.truncation_rate)?;
        let model = if params.algorithm == Algorithm::Eda {
            let points: Vec<&[f64]> = selected.iter().map(|&i| solutions[i].x.as_slice()).collect();
            Some(fit_model(&points, &lb, &ub)?)
        } else {
            None
        };

        let mut selection = None;
        if iter + 1 < params.iterations {
            let mut gen_rng = rng::stream_rng(params.seed, stream::OPT_GEN, iter as u64);
            population = match params.algorithm {
                Algorithm::Eda => {
                    let model = model.as_ref().expect("EDA model fitted");
                    if params.selective {
                        let (next, audit) = select_generation(
                            problem,
                            model,
                            &lb,
                            &ub,
                            n,
                            threshold,
                            params.trial_cap,
                            &mut gen_rng,
                        );
                        selection = Some(audit);
                        next
                    } else {
                        sample_model(model, &lb, &ub, n, &mut gen_rng)
                    }
                }
                Algorithm::Ga => {
                    ga_generation(&population, &selected, &params.ga, &lb, &ub, &mut gen_rng)
                }
            };
        }

        history.push(IterationRecord {
            iteration: iter,
            best_feasible_objective: threshold,
            best_fitness: best_by_fitness.as_ref().expect("set above").fitness,
            mean_theta,
            model,
            selection,
        });
    }

    Ok(RunResult {
        best_feasible,
        best_by_fitness: best_by_fitness.expect("at least one iteration"),
        history,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Quadratic bowl with every design fully feasible.
    struct Sphere {
        center: Vec<f64>,
        lb: Vec<f64>,
        ub: Vec<f64>,
        calls: AtomicUsize,
    }

    impl Sphere {
        fn new(center: Vec<f64>) -> Self {
            let d = center.len();
            Sphere {
                center,
                lb: vec![-5.0; d],
                ub: vec![5.0; d],
                calls: AtomicUsize::new(0),
            }
        }

        fn value(&self, x: &[f64]) -> f64 {
            x.iter()
                .zip(&self.center)
                .map(|(v, c)| (v - c) * (v - c))
                .sum()
        }
    }

    impl DesignObjective for Sphere {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (self.lb.clone(), self.ub.clone())
        }
        fn required_fraction(&self) -> f64 {
            0.95
        }
        fn evaluate(&self, x: &[f64], _seed: u64) -> Result<Evaluation> {
            self.calls.fetch_add(1, Ordering::Relaxed);
            Ok(Evaluation {
                objective: self.value(x),
                theta: 1.0,
            })
        }
        fn quick_objective(&self, x: &[f64]) -> Option<f64> {
            Some(self.value(x))
        }
    }

    /// Linear objective, feasible only when the first variable clears 10.
    struct Threshold1d;

    impl DesignObjective for Threshold1d {
        fn dim(&self) -> usize {
            4
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![0.0; 4], vec![20.0; 4])
        }
        fn required_fraction(&self) -> f64 {
            0.95
        }
        fn evaluate(&self, x: &[f64], _seed: u64) -> Result<Evaluation> {
            Ok(Evaluation {
                objective: x.iter().sum(),
                theta: if x[0] >= 10.0 { 1.0 } else { 0.0 },
            })
        }
        fn quick_objective(&self, x: &[f64]) -> Option<f64> {
            Some(x.iter().sum())
        }
    }

    /// Nothing is ever feasible (θ = 0 everywhere).
    struct NeverFeasible;

    impl DesignObjective for NeverFeasible {
        fn dim(&self) -> usize {
            3
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![0.0; 3], vec![1.0; 3])
        }
        fn required_fraction(&self) -> f64 {
            0.95
        }
        fn evaluate(&self, x: &[f64], _seed: u64) -> Result<Evaluation> {
            Ok(Evaluation {
                objective: x.iter().sum(),
                theta: 0.0,
            })
        }
        fn quick_objective(&self, x: &[f64]) -> Option<f64> {
            Some(x.iter().sum())
        }
    }

    #[test]
    fn fitness_penalizes_missing_fraction() {
        let f = fitness(100.0, 0.8, 0.95, 0.33);
        assert!((f - 100.0495).abs() < 1e-9, "fitness {f}");
        // Meeting or beating the requirement leaves the objective alone.
        assert_eq!(fitness(42.0, 0.95, 0.95, 0.33), 42.0);
        assert_eq!(fitness(42.0, 1.0, 0.95, 0.33), 42.0);
    }

    #[test]
    fn eda_minimizes_a_quadratic_bowl() {
        for seed in [1_u64, 2] {
            let problem = Sphere::new(vec![1.0, -2.0, 3.0, 0.5]);
            let params = OptimizerParams {
                seed,
                ..OptimizerParams::default()
            };
            let result = run(&problem, &params).unwrap();
            let best = result.best_feasible.expect("always feasible");
            assert!(
                best.objective < 1e-3,
                "seed {seed}: best {}",
                best.objective
            );
        }
    }

    #[test]
    fn penalty_drives_population_into_the_feasible_region() {
        let problem = Threshold1d;
        let params = OptimizerParams {
            iterations: 30,
            sigma_penalty: 1e3,
            seed: 5,
            ..OptimizerParams::default()
        };
        let result = run(&problem, &params).unwrap();
        let best = result.best_feasible.expect("feasible designs exist");
        assert_eq!(best.theta, 1.0);
        assert!(best.x[0] >= 10.0);
        assert!(
            best.objective >= 10.0 && best.objective < 10.5,
            "best {}",
            best.objective
        );
    }

    #[test]
    fn runs_are_deterministic_and_thread_count_independent() {
        let params = OptimizerParams {
            iterations: 8,
            seed: 42,
            ..OptimizerParams::default()
        };
        let run_once = || {
            let problem = Sphere::new(vec![0.5, -0.5, 1.5]);
            run(&problem, &params).unwrap()
        };
        let a = run_once();
        let b = run_once();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_by_fitness, b.best_by_fitness);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run_once);
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run_once);
        assert_eq!(single.history, multi.history);
        assert_eq!(single.best_by_fitness, multi.best_by_fitness);
    }

    #[test]
    fn ga_also_descends_and_differs_from_eda_only_after_init() {
        let problem = Sphere::new(vec![1.0, 1.0]);
        let eda = run(
            &problem,
            &OptimizerParams {
                seed: 7,
                ..OptimizerParams::default()
            },
        )
        .unwrap();
        let problem = Sphere::new(vec![1.0, 1.0]);
        let ga = run(
            &problem,
            &OptimizerParams {
                algorithm: Algorithm::Ga,
                seed: 7,
                ..OptimizerParams::default()
            },
        )
        .unwrap();
        // Same seed ⇒ identical initial population ⇒ identical first row.
        assert_eq!(
            eda.history[0].best_fitness,
            ga.history[0].best_fitness
        );
        assert_eq!(eda.history[0].mean_theta, ga.history[0].mean_theta);
        assert!(ga.best_feasible.unwrap().objective < 0.5);
    }

    #[test]
    fn selection_keeps_the_best_and_breaks_ties_reproducibly() {
        let mk = |fitness: f64, objective: f64| Solution {
            x: vec![0.0],
            objective,
            theta: 1.0,
            fitness,
        };
        let solutions = vec![
            mk(3.0, 1.0), // tied fitness, larger objective
            mk(3.0, 0.5),
            mk(1.0, 9.0),
            mk(2.0, 2.0),
            mk(1.0, 9.0), // exact duplicate of index 2: index breaks the tie
        ];
        let selected = truncation_select(&solutions, 0.6).unwrap();
        assert_eq!(selected, vec![2, 4, 3]);
        assert!(truncation_select(&solutions, 0.1).is_err());
    }

    #[test]
    fn model_fit_floors_standard_deviation() {
        let p = [1.0, 2.0];
        let points: Vec<&[f64]> = vec![&p, &p, &p];
        let model = fit_model(&points, &[0.0, 0.0], &[10.0, 100.0]).unwrap();
        assert_eq!(model.mean, vec![1.0, 2.0]);
        assert_eq!(model.std_dev, vec![0.01, 0.1]);
        let one: Vec<&[f64]> = vec![&p];
        assert!(fit_model(&one, &[0.0, 0.0], &[10.0, 100.0]).is_err());
    }

    #[test]
    fn model_fit_uses_maximum_likelihood_variance() {
        let a = [0.0];
        let b = [2.0];
        let points: Vec<&[f64]> = vec![&a, &b];
        let model = fit_model(&points, &[0.0], &[1000.0]).unwrap();
        assert_eq!(model.mean, vec![1.0]);
        // ML (divide by N): variance = ((1)² + (1)²) / 2 = 1.
        assert!((model.std_dev[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_population_is_uniform_in_bounds() {
        let lb = vec![-1.0, 5.0];
        let ub = vec![1.0, 15.0];
        let pop = init_population(&lb, &ub, 4000, 9);
        let mut mean = [0.0; 2];
        for x in &pop {
            for j in 0..2 {
                assert!(x[j] >= lb[j] && x[j] <= ub[j]);
                mean[j] += x[j];
            }
        }
        for j in 0..2 {
            mean[j] /= pop.len() as f64;
            let center = 0.5 * (lb[j] + ub[j]);
            let span = ub[j] - lb[j];
            assert!((mean[j] - center).abs() < 0.05 * span, "var {j}: {}", mean[j]);
        }
        // Same seed, same population.
        assert_eq!(pop, init_population(&lb, &ub, 4000, 9));
    }

    #[test]
    fn sampling_respects_bounds_and_model() {
        let model = UnivariateNormalModel {
            mean: vec![0.0, 100.0],
            std_dev: vec![1.0, 1.0],
        };
        let lb = vec![-2.0, 0.0];
        let ub = vec![2.0, 50.0]; // second mean far above: clips to 50
        let mut rng = rng::stream_rng(0, stream::OPT_GEN, 0);
        let pop = sample_model(&model, &lb, &ub, 500, &mut rng);
        for x in &pop {
            assert!(x[0] >= -2.0 && x[0] <= 2.0);
            assert_eq!(x[1], 50.0);
        }
        let mean0 = pop.iter().map(|x| x[0]).sum::<f64>() / 500.0;
        assert!(mean0.abs() < 0.2, "mean {mean0}");
    }

    #[test]
    fn best_feasible_objective_never_increases() {
        let problem = Threshold1d;
        let params = OptimizerParams {
            iterations: 15,
            sigma_penalty: 1e3,
            seed: 3,
            ..OptimizerParams::default()
        };
        let result = run(&problem, &params).unwrap();
        for w in result.history.windows(2) {
            assert!(w[1].best_feasible_objective <= w[0].best_feasible_objective);
        }
        // And the final history row agrees with the returned best.
        let last = result.history.last().unwrap();
        assert_eq!(
            last.best_feasible_objective,
            result.best_feasible.unwrap().objective
        );
    }

    #[test]
    fn selective_generation_screens_by_quick_objective() {
        let problem = Sphere::new(vec![0.0, 0.0, 0.0]);
        let params = OptimizerParams {
            iterations: 6,
            selective: true,
            seed: 11,
            ..OptimizerParams::default()
        };
        let result = run(&problem, &params).unwrap();
        let mut saw_screening = false;
        for rec in &result.history {
            let Some(audit) = rec.selection else { continue };
            assert_eq!(audit.threshold, rec.best_feasible_objective);
            assert!(audit.accepted <= params.population);
            assert!(audit.trials >= audit.accepted);
            assert!(audit.trials <= params.trial_cap);
            if audit.threshold.is_finite() && audit.accepted > 0 {
                assert!(
                    audit.max_accepted_objective < audit.threshold,
                    "accepted {} ≥ threshold {}",
                    audit.max_accepted_objective,
                    audit.threshold
                );
                saw_screening = true;
            }
        }
        assert!(saw_screening, "no finite-threshold generation audited");
        // The final iteration generates no next population.
        assert!(result.history.last().unwrap().selection.is_none());
    }

    #[test]
    fn selective_with_no_feasible_best_matches_standard_generation() {
        let params_std = OptimizerParams {
            iterations: 5,
            seed: 21,
            ..OptimizerParams::default()
        };
        let params_sel = OptimizerParams {
            selective: true,
            ..params_std.clone()
        };
        let std_run = run(&NeverFeasible, &params_std).unwrap();
        let sel_run = run(&NeverFeasible, &params_sel).unwrap();
        assert!(std_run.best_feasible.is_none());
        assert!(sel_run.best_feasible.is_none());
        for (a, b) in std_run.history.iter().zip(&sel_run.history) {
            // The threshold stays +∞, every draw is accepted, and the
            // consumed random stream is identical: same populations, same
            // statistics.
            assert_eq!(a.best_fitness, b.best_fitness);
            assert_eq!(a.mean_theta, b.mean_theta);
            assert_eq!(a.model, b.model);
        }
        for rec in &sel_run.history[..sel_run.history.len() - 1] {
            let audit = rec.selection.unwrap();
            assert_eq!(audit.threshold, f64::INFINITY);
            assert_eq!(audit.accepted, params_std.population);
            assert_eq!(audit.trials, params_std.population);
        }
        assert_eq!(std_run.best_by_fitness.x, sel_run.best_by_fitness.x);
    }

    #[test]
    fn ga_without_variation_only_recombines_parent_coordinates() {
        let problem = Sphere::new(vec![0.0, 0.0]);
        let params = OptimizerParams {
            algorithm: Algorithm::Ga,
            population: 20,
            iterations: 2,
            seed: 13,
            ga: GaSettings {
                crossover_prob: 0.0,
                mutation_prob: 0.0,
            },
            ..OptimizerParams::default()
        };
        // With no crossover and no mutation every child is a verbatim clone
        // of a selected parent, so generation 2 re-hits the cache: the
        // number of distinct evaluations stays below two full populations.
        let result = run(&problem, &params).unwrap();
        assert!(result.evaluations <= 20 + 10);
        assert_eq!(
            problem.calls.load(Ordering::Relaxed),
            result.evaluations
        );
    }

    #[test]
    fn ga_mutation_stays_in_bounds() {
        let problem = Sphere::new(vec![0.0, 0.0, 0.0]);
        let params = OptimizerParams {
            algorithm: Algorithm::Ga,
            population: 30,
            iterations: 4,
            seed: 17,
            ga: GaSettings {
                crossover_prob: 1.0,
                mutation_prob: 1.0,
            },
            ..OptimizerParams::default()
        };
        let result = run(&problem, &params).unwrap();
        for s in [&result.best_by_fitness] {
            for &v in &s.x {
                assert!((-5.0..=5.0).contains(&v));
            }
        }
    }

    #[test]
    fn evaluation_count_matches_cache_misses() {
        let problem = Sphere::new(vec![1.0, 2.0]);
        let params = OptimizerParams {
            population: 30,
            iterations: 5,
            seed: 23,
            ..OptimizerParams::default()
        };
        let result = run(&problem, &params).unwrap();
        assert_eq!(problem.calls.load(Ordering::Relaxed), result.evaluations);
        assert!(result.evaluations <= 30 * 5);
        assert!(result.evaluations >= 30);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let problem = Sphere::new(vec![0.0]);
        let bad = |f: &dyn Fn(&mut OptimizerParams)| {
            let mut p = OptimizerParams::default();
            f(&mut p);
            run(&problem, &p).unwrap_err()
        };
        bad(&|p| p.population = 0);
        bad(&|p| p.iterations = 0);
        bad(&|p| p.truncation_rate = 0.0);
        bad(&|p| p.truncation_rate = 1.5);
        bad(&|p| {
            p.population = 3;
            p.truncation_rate = 0.3; // keeps ⌊0.9⌋ = 0
        });
        bad(&|p| {
            // EDA needs at least two selected individuals for the model.
            p.population = 3;
            p.truncation_rate = 0.5;
        });
        bad(&|p| p.sigma_penalty = -1.0);
        bad(&|p| {
            p.selective = true;
            p.algorithm = Algorithm::Ga;
        });
        bad(&|p| {
            p.selective = true;
            p.trial_cap = 0;
        });
        bad(&|p| p.ga.crossover_prob = 1.2);
        bad(&|p| p.ga.mutation_prob = -0.1);
    }

    /// A problem without a quick objective cannot run selectively.
    struct NoQuick;

    impl DesignObjective for NoQuick {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![0.0; 2], vec![1.0; 2])
        }
        fn required_fraction(&self) -> f64 {
            0.5
        }
        fn evaluate(&self, x: &[f64], _seed: u64) -> Result<Evaluation> {
            Ok(Evaluation {
                objective: x[0],
                theta: 1.0,
            })
        }
        fn quick_objective(&self, _x: &[f64]) -> Option<f64> {
            None
        }
    }

    #[test]
    fn selective_mode_requires_a_quick_objective() {
        let err = run(
            &NoQuick,
            &OptimizerParams {
                selective: true,
                ..OptimizerParams::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
