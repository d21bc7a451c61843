//! Bayesian optimization on the Boolean hypercube: a zero-mean Gaussian
//! process with the Hamming kernel
//! `K(b1, b2) = theta0 * exp(-theta1 * d_H(b1, b2)) + theta2 * [b1 == b2]`
//! and the Expected Improvement acquisition.

use std::collections::HashSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::objective::{AtomIndex, Evaluation, Objective, SubjectSet};
use crate::quotient::{detect_classes, EquivalenceConfig, NOISE};
use crate::rule::{BitRule, RuleUniverse};
use crate::run::{RunRecord, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HammingKernelParams {
    /// Signal variance.
    pub theta0: f64,
    /// Decay per differing bit.
    pub theta1: f64,
    /// Nugget added when both arguments are equal.
    pub theta2: f64,
}

impl HammingKernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta0 > 0.0 && self.theta1 > 0.0 && self.theta2 >= 0.0)
            || !(self.theta0.is_finite() && self.theta2.is_finite())
        {
            return Err(Error::Config(format!(
                "kernel needs theta0 > 0, theta1 > 0, theta2 >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    fn at(&self, distance: u32, same: bool) -> f64 {
        let base = self.theta0 * (-self.theta1 * f64::from(distance)).exp();
        if same {
            base + self.theta2
        } else {
            base
        }
    }
}

pub fn kernel(b1: &BitRule, b2: &BitRule, params: &HammingKernelParams) -> Result<f64> {
    let d = b1.hamming(b2)?;
    Ok(params.at(d, d == 0))
}

/// Covariance matrix of `inputs` under `params`.
pub fn kernel_matrix(inputs: &[BitRule], params: &HammingKernelParams) -> DMatrix<f64> {
    let m = inputs.len();
    DMatrix::from_fn(m, m, |i, j| {
        let d = inputs[i].hamming_unchecked(&inputs[j]);
        params.at(d, d == 0)
    })
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-2;

/// Cholesky factor of `k`, adding escalating diagonal jitter (relative to
/// `scale`) until the factorization succeeds.
fn factor_with_jitter(k: &DMatrix<f64>, scale: f64) -> Result<(DMatrix<f64>, f64)> {
    if let Some(ch) = k.clone().cholesky() {
        return Ok((ch.unpack(), 0.0));
    }
    let mut jitter = JITTER_START * scale;
    while jitter <= JITTER_MAX * scale {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(ch) = kj.cholesky() {
            return Ok((ch.unpack(), jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::IllConditioned { jitter })
}

/// A fitted zero-mean GP.
#[derive(Debug, Clone)]
pub struct GpState {
    inputs: Vec<BitRule>,
    values: Vec<f64>,
    params: HammingKernelParams,
    lower: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpState {
    pub fn fit(inputs: Vec<BitRule>, values: Vec<f64>, params: HammingKernelParams) -> Result<Self> {
        params.validate()?;
        if inputs.is_empty() || inputs.len() != values.len() {
            return Err(Error::Config(
                "GP needs one value per input and at least one input".into(),
            ));
        }
        let n = inputs[0].len();
        if let Some(bad) = inputs.iter().find(|b| b.len() != n) {
            return Err(Error::UniverseMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let k = kernel_matrix(&inputs, &params);
        let (lower, jitter) = factor_with_jitter(&k, params.theta0)?;
        let y = DVector::from_column_slice(&values);
        let z = lower
            .solve_lower_triangular(&y)
            .ok_or(Error::IllConditioned { jitter })?;
        let alpha = lower
            .tr_solve_lower_triangular(&z)
            .ok_or(Error::IllConditioned { jitter })?;
        Ok(GpState {
            inputs,
            values,
            params,
            lower,
            alpha,
            jitter,
        })
    }

    pub fn params(&self) -> &HammingKernelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `log p(y | X, params)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let m = self.values.len() as f64;
        let y = DVector::from_column_slice(&self.values);
        let log_det: f64 = (0..self.lower.nrows()).map(|i| self.lower[(i, i)].ln()).sum();
        -0.5 * y.dot(&self.alpha) - log_det - 0.5 * m * (2.0 * std::f64::consts::PI).ln()
    }

    fn cross_covariance(&self, query: &BitRule) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|x| {
                let d = x.hamming_unchecked(query);
                self.params.at(d, d == 0)
            }),
        )
    }

    /// Posterior mean and variance at `query`; variance is clamped at zero.
    pub fn posterior(&self, query: &BitRule) -> Result<(f64, f64)> {
        if query.len() != self.inputs[0].len() {
            return Err(Error::UniverseMismatch {
                expected: self.inputs[0].len(),
                found: query.len(),
            });
        }
        let ks = self.cross_covariance(query);
        let mean = ks.dot(&self.alpha);
        let v = self
            .lower
            .solve_lower_triangular(&ks)
            .ok_or(Error::IllConditioned { jitter: self.jitter })?;
        let prior = self.params.theta0 + self.params.theta2;
        Ok((mean, (prior - v.norm_squared()).max(0.0)))
    }

    /// Posterior at many queries at once.
    pub fn posterior_batch(&self, queries: &[BitRule]) -> Vec<(f64, f64)> {
        if queries.is_empty() {
            return Vec::new();
        }
        let m = self.inputs.len();
        let n = self.inputs[0].len() as u32;
        let table: Vec<f64> = (0..=n).map(|d| self.params.at(d, false)).collect();
        let mut ks = DMatrix::from_fn(m, queries.len(), |i, j| {
            let d = self.inputs[i].hamming_unchecked(&queries[j]);
            table[d as usize] + if d == 0 { self.params.theta2 } else { 0.0 }
        });
        let means = ks.tr_mul(&self.alpha);
        self.lower.solve_lower_triangular_mut(&mut ks);
        let prior = self.params.theta0 + self.params.theta2;
        (0..queries.len())
            .map(|j| (means[j], (prior - ks.column(j).norm_squared()).max(0.0)))
            .collect()
    }
}

pub fn gp_posterior(state: &GpState, query: &BitRule) -> Result<(f64, f64)> {
    state.posterior(query)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form Expected Improvement for maximization.
pub fn expected_improvement(mean: f64, variance: f64, best_so_far: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    let gap = mean - best_so_far;
    if sigma == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    (gap * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    /// Total objective evaluations, initial design included.
    pub budget: usize,
    pub initial_design: usize,
    pub quotient_aware: bool,
    pub equivalence: EquivalenceConfig,
    pub seed: u64,
    /// Log-spaced decay values searched at each refit; the signal variance
    /// is set to its closed-form maximizer for each decay.
    pub theta1_grid: Vec<f64>,
    /// Nugget as a fraction of the signal variance.
    pub nugget_ratio: f64,
    /// Score every vector of the hypercube when `n` is at most this.
    pub full_pool_max_atoms: usize,
    pub pool_size: usize,
    /// Upper bound on set bits of random designs and random pool members.
    pub max_random_bits: usize,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            budget: 80,
            initial_design: 10,
            quotient_aware: false,
            equivalence: EquivalenceConfig::default(),
            seed: 0,
            theta1_grid: (0..8).map(|k| 0.05 * 2f64.powi(k)).collect(),
            nugget_ratio: 1e-6,
            full_pool_max_atoms: 14,
            pool_size: 2048,
            max_random_bits: 4,
        }
    }
}

impl BoConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.initial_design == 0 {
            return Err(Error::Config("initial design needs at least one point".into()));
        }
        if self.budget < self.initial_design {
            return Err(Error::Config(format!(
                "budget {} is smaller than the initial design {}",
                self.budget, self.initial_design
            )));
        }
        if self.theta1_grid.is_empty() || self.theta1_grid.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("theta1 grid must be non-empty and positive".into()));
        }
        if !(self.nugget_ratio >= 0.0) {
            return Err(Error::Config("nugget ratio must be non-negative".into()));
        }
        self.equivalence.validate()
    }

    pub fn method_name(&self) -> &'static str {
        if self.quotient_aware {
            "bo-quotient"
        } else {
            "bo"
        }
    }
}

/// Surrogate target: fold change for feasible rules, zero otherwise.
fn target(e: &Evaluation) -> f64 {
    if e.feasible {
        e.fitness
    } else {
        0.0
    }
}

/// Fits the GP on standardized targets, choosing the decay by marginal likelihood.
fn fit_standardized(inputs: &[BitRule], raw: &[f64], config: &BoConfig) -> Result<(GpState, f64, f64)> {
    let m = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / m;
    let var = raw.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / m;
    let scale = if var > 1e-24 { var.sqrt() } else { 1.0 };
    let y: Vec<f64> = raw.iter().map(|v| (v - mean) / scale).collect();

    let mut best: Option<(f64, HammingKernelParams)> = None;
    for &theta1 in &config.theta1_grid {
        let unit = HammingKernelParams {
            theta0: 1.0,
            theta1,
            theta2: config.nugget_ratio,
        };
        let Ok(gp) = GpState::fit(inputs.to_vec(), y.clone(), unit) else {
            continue;
        };
        // profile out theta0: K = theta0 * R, so theta0_hat = y' R^-1 y / m
        let quad = DVector::from_column_slice(&y).dot(&gp.alpha);
        let theta0 = (quad / m).max(1e-12);
        let log_det_r: f64 = (0..gp.lower.nrows()).map(|i| gp.lower[(i, i)].ln()).sum::<f64>() * 2.0;
        let lml = -0.5 * m * theta0.ln() - 0.5 * log_det_r - 0.5 * m;
        if best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((
                lml,
                HammingKernelParams {
                    theta0,
                    theta1,
                    theta2: config.nugget_ratio * theta0,
                },
            ));
        }
    }
    let (_, params) = best.ok_or(Error::IllConditioned { jitter: JITTER_MAX })?;
    Ok((GpState::fit(inputs.to_vec(), y, params)?, mean, scale))
}

fn random_sparse<R: Rng>(n: usize, max_bits: usize, rng: &mut R) -> BitRule {
    let k = rng.random_range(1..=max_bits.clamp(1, n));
    let mut r = BitRule::zeros(n);
    for i in sample(rng, n, k) {
        r.set(i, true);
    }
    r
}

struct Observation {
    rule: BitRule,
    eval: Evaluation,
    subjects: SubjectSet,
}

/// Runs BO for `config.budget` evaluations (fewer if the hypercube is exhausted).
pub fn run_bo(objective: &Objective<'_>, universe: &RuleUniverse, config: &BoConfig) -> Result<RunRecord> {
    config.validate()?;
    let start = Instant::now();
    let n = universe.len();
    let index = AtomIndex::new(universe, objective.cohort())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let distinct_nonzero = if n >= 63 { u64::MAX } else { (1u64 << n) - 1 };

    let mut observed: Vec<Observation> = Vec::new();
    let mut seen: HashSet<BitRule> = HashSet::new();
    let mut trace = Vec::new();
    let mut best: Option<usize> = None;

    let observe = |rule: BitRule, observed: &mut Vec<Observation>, best: &mut Option<usize>| -> Result<()> {
        let subjects = index.subjects(&rule)?;
        let eval = objective.evaluate_set(&subjects);
        observed.push(Observation { rule, eval, subjects });
        let i = observed.len() - 1;
        if best.is_none_or(|b| eval.fitness > observed[b].eval.fitness) {
            *best = Some(i);
        }
        Ok(())
    };

    let initial = (config.initial_design as u64).min(distinct_nonzero) as usize;
    while observed.len() < initial {
        let r = random_sparse(n, config.max_random_bits, &mut rng);
        if seen.insert(r.clone()) {
            observe(r, &mut observed, &mut best)?;
            let b = best.expect("just observed");
            trace.push(TraceRow::Iteration {
                iteration: observed.len() - 1,
                incumbent: observed[b].eval.fitness,
                ei: None,
                training_size: 0,
            });
        }
        if config.max_random_bits < n && seen.len() as u64 >= distinct_nonzero {
            break;
        }
    }

    let full_pool: Option<Vec<BitRule>> =
        (n <= config.full_pool_max_atoms).then(|| (1..(1u64 << n)).map(|m| BitRule::from_mask(m, n)).collect());

    while observed.len() < config.budget {
        // training set, compressed to class representatives in quotient mode
        let mut training: Vec<usize> = (0..observed.len()).collect();
        if config.quotient_aware {
            let fitness: Vec<f64> = observed.iter().map(|o| o.eval.fitness).collect();
            let valid: Vec<bool> = observed.iter().map(|o| o.eval.feasible).collect();
            if let Some(classes) = detect_classes(&fitness, &valid, &config.equivalence) {
                let large: Vec<bool> = classes
                    .classes
                    .iter()
                    .map(|c| c.len() >= config.equivalence.min_pts)
                    .collect();
                training.retain(|&i| {
                    let l = classes.labels[i];
                    l == NOISE || !large[l - 1] || classes.elites.contains(&i)
                });
            }
        }
        let inputs: Vec<BitRule> = training.iter().map(|&i| observed[i].rule.clone()).collect();
        let raw: Vec<f64> = training.iter().map(|&i| target(&observed[i].eval)).collect();
        let (gp, y_mean, y_scale) = fit_standardized(&inputs, &raw, config)?;
        let incumbent_target = observed.iter().map(|o| target(&o.eval)).fold(f64::MIN, f64::max);
        let best_std = (incumbent_target - y_mean) / y_scale;

        let pool: Vec<BitRule> = match &full_pool {
            Some(all) => all.iter().filter(|r| !seen.contains(*r)).cloned().collect(),
            None => {
                let anchor = observed[best.expect("initial design is non-empty")].rule.clone();
                let mut uniq = HashSet::new();
                let mut pool = Vec::with_capacity(config.pool_size);
                for k in 0..config.pool_size {
                    let cand = if k % 2 == 0 {
                        let mut c = anchor.clone();
                        let flips = rng.random_range(1..=3.min(n));
                        for i in sample(&mut rng, n, flips) {
                            c.flip(i);
                        }
                        c
                    } else {
                        random_sparse(n, config.max_random_bits, &mut rng)
                    };
                    if !cand.is_identity() && !seen.contains(&cand) && uniq.insert(cand.clone()) {
                        pool.push(cand);
                    }
                }
                pool
            }
        };
        if pool.is_empty() {
            break;
        }
        let scores = gp.posterior_batch(&pool);
        let mut chosen = 0;
        let mut chosen_ei = f64::NEG_INFINITY;
        for (j, (mu, var)) in scores.iter().enumerate() {
            let ei = expected_improvement(*mu, *var, best_std);
            if ei > chosen_ei {
                chosen = j;
                chosen_ei = ei;
            }
        }
        let rule = pool[chosen].clone();
        seen.insert(rule.clone());
        observe(rule, &mut observed, &mut best)?;
        trace.push(TraceRow::Iteration {
            iteration: observed.len() - 1,
            incumbent: observed[best.expect("observed")].eval.fitness,
            ei: Some(chosen_ei * y_scale),
            training_size: training.len(),
        });
    }

    let b = &observed[best.expect("initial design is non-empty")];
    Ok(RunRecord {
        method: config.method_name().to_string(),
        seed: config.seed,
        config: serde_json::to_value(config).expect("config serializes"),
        best_fitness: b.eval.fitness,
        feasible: b.eval.feasible,
        subgroup_size: b.eval.subgroup_size,
        rule_text: universe.decode(&b.rule)?,
        rule_bits: b.rule.to_bit_string(),
        subgroup_digest: b.subjects.digest(),
        evaluations: observed.len() as u64,
        wall_s: start.elapsed().as_secs_f64(),
        trace,
        flags: Vec::new(),
    })
}
