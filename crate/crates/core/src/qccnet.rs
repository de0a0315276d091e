//! QCC-net: kernel-parameter training by ascent on the EasyMKL optimal value.
//!
//! Each outer iteration rebuilds the component Grams at the current θ, solves
//! the weight problem, records `(L, γ, θ)` and takes one Adam ascent step on
//! `L(θ)`. The gradient comes from the envelope theorem: the feasible set for
//! φ does not depend on θ, so
//!
//! ```text
//! ∂L/∂θ_j = (1 − λ) Σ_r d_r ∂d_r/∂θ_j / ‖d‖₂,   ∂d_r/∂θ_j = φᵀ Y (∂K^(r)/∂θ_j) Y φ
//! ```
//!
//! evaluated at the solver's minimiser. The classical parameters must stay
//! positive, so RBF and Polynomial parameters are optimised as logarithms.
//! The returned parameters are those of the best recorded iterate.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{
    combine_grams, gram_gradient, prepared_gram, GramMatrix, KernelKind, KernelSpec, QaoaTopology,
};
use crate::mkl::{
    distance_vector, l1_rescale, quadratic_form, solve_easymkl, solve_easymkl_with, MklProblem,
    MklSolution, SolverOptions,
};
use crate::seeds::derive_seed;

// consecutive small relative changes before stopping early
const PATIENCE: usize = 5;
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QccNetConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub max_outer_iters: usize,
    /// Relative loss change treated as stalled.
    pub loss_tolerance: f64,
    pub lambda: f64,
    /// Seed for random initial parameters, see [`initial_specs`].
    pub seed: u64,
}

impl Default for QccNetConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            max_outer_iters: 100,
            loss_tolerance: 1e-6,
            lambda: 0.2,
            seed: 0,
        }
    }
}

impl QccNetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::Argument(format!("lambda must be in [0, 1), got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Argument("Adam betas must be in [0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Argument("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam step in the ascent direction.
pub fn adam_step(
    theta: &[f64],
    gradient: &[f64],
    state: &AdamState,
    config: &QccNetConfig,
) -> Result<(Vec<f64>, AdamState)> {
    check_dim(theta.len(), gradient.len())?;
    check_dim(theta.len(), state.m.len())?;
    check_dim(theta.len(), state.v.len())?;
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let t = state.t + 1;
    let c1 = 1.0 - b1.powf(t as f64);
    let c2 = 1.0 - b2.powf(t as f64);
    let mut next = AdamState { m: state.m.clone(), v: state.v.clone(), t };
    let mut out = theta.to_vec();
    for i in 0..theta.len() {
        let g = gradient[i];
        next.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        next.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = next.m[i] / c1;
        let v_hat = next.v[i] / c2;
        out[i] += config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
    }
    Ok((out, next))
}

/// Envelope-theorem gradient of the optimal loss.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGradient {
    /// Concatenated over kernels, in kernel order.
    pub gradient: Vec<f64>,
    /// `‖d‖₂` vanished; the gradient is reported as zero.
    pub degenerate: bool,
}

/// `∂L/∂θ` at the minimiser `phi_min`. `gram_grads[r]` holds one matrix per
/// parameter of kernel `r` (empty for non-parametric kernels).
pub fn loss_gradient_theta(
    grams: &[GramMatrix],
    gram_grads: &[Vec<DMatrix<f64>>],
    labels: &[i8],
    phi_min: &[f64],
    lambda: f64,
) -> Result<LossGradient> {
    check_dim(grams.len(), gram_grads.len())?;
    let d = distance_vector(grams, labels, phi_min)?;
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n_params: usize = gram_grads.iter().map(Vec::len).sum();
    if norm <= DEGENERATE_NORM {
        return Ok(LossGradient { gradient: vec![0.0; n_params], degenerate: true });
    }
    let v = DVector::from_iterator(
        labels.len(),
        phi_min.iter().zip(labels).map(|(p, &y)| p * f64::from(y)),
    );
    let mut gradient = Vec::with_capacity(n_params);
    for (r, grads) in gram_grads.iter().enumerate() {
        for dk in grads {
            check_dim(labels.len(), dk.nrows())?;
            gradient.push((1.0 - lambda) * d[r] * quadratic_form(dk, &v) / norm);
        }
    }
    Ok(LossGradient { gradient, degenerate: false })
}

/// One outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub loss: f64,
    /// Unit-L2 weights.
    pub gamma: Vec<f64>,
    /// Parameters per kernel at this iterate.
    pub theta: Vec<Vec<f64>>,
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
    pub best_iteration: usize,
}

impl TrainingTrace {
    fn push(&mut self, record: TraceRecord) {
        let best = self.records.get(self.best_iteration).map(|r| r.loss);
        if best.is_none_or(|b| record.loss > b) {
            self.best_iteration = self.records.len();
        }
        self.records.push(record);
    }

    pub fn best(&self) -> &TraceRecord {
        &self.records[self.best_iteration]
    }

    /// One JSON object per iteration.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainingResult {
    /// Kernels carrying the best-iterate parameters.
    pub specs: Vec<KernelSpec>,
    /// Unit-L2 weights of the solve at the best iterate.
    pub gamma_star: Vec<f64>,
    pub solution: MklSolution,
    /// Combined Gram at the best parameters and L1-rescaled weights.
    pub final_gram: GramMatrix,
    pub trace: TrainingTrace,
}

impl TrainingResult {
    /// All parameters concatenated in kernel order.
    pub fn theta_star(&self) -> Vec<f64> {
        self.specs.iter().flat_map(|s| s.theta().iter().copied()).collect()
    }

    pub fn gamma_l1(&self) -> Vec<f64> {
        l1_rescale(&self.gamma_star)
    }
}

/// Initial kernels for one instance: defaults for classical kinds, uniform
/// `[0, 2π)` QAOA angles drawn from `seed`. Equal kinds get equal parameters.
pub fn initial_specs(
    kinds: &[KernelKind],
    n_features: usize,
    topology: QaoaTopology,
    seed: u64,
) -> Result<Vec<KernelSpec>> {
    kinds
        .iter()
        .map(|&kind| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, kind as u64]));
            KernelSpec::initial(kind, n_features, topology, &mut rng)
        })
        .collect()
}

fn log_space(kind: KernelKind) -> bool {
    matches!(kind, KernelKind::Rbf | KernelKind::Polynomial)
}

// Optimiser coordinates: log θ for the classical kinds, θ itself for QAOA.
fn to_coordinates(specs: &[KernelSpec]) -> Vec<f64> {
    specs
        .iter()
        .flat_map(|s| {
            let log = log_space(s.kind());
            s.theta().iter().map(move |&t| if log { t.ln() } else { t })
        })
        .collect()
}

fn from_coordinates(specs: &[KernelSpec], u: &[f64]) -> Result<Vec<KernelSpec>> {
    let mut offset = 0;
    specs
        .iter()
        .map(|s| {
            let n = s.n_params();
            let slice = &u[offset..offset + n];
            offset += n;
            if n == 0 {
                return Ok(s.clone());
            }
            let theta = if log_space(s.kind()) {
                slice.iter().map(|v| v.exp()).collect()
            } else {
                slice.to_vec()
            };
            s.with_theta(theta)
        })
        .collect()
}

fn check_inputs(specs: &[KernelSpec], train_x: &[Vec<f64>], labels: &[i8]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Size("no base kernels".into()));
    }
    check_dim(train_x.len(), labels.len())?;
    let d = specs[0].n_features();
    for s in specs {
        check_dim(d, s.n_features())?;
    }
    Ok(())
}

/// Runs the alternating loop and returns the best iterate.
pub fn train(
    specs: &[KernelSpec],
    train_x: &[Vec<f64>],
    labels: &[i8],
    config: &QccNetConfig,
) -> Result<TrainingResult> {
    config.validate()?;
    check_inputs(specs, train_x, labels)?;

    let grams_at = |specs: &[KernelSpec]| -> Result<Vec<GramMatrix>> {
        specs.iter().map(|s| prepared_gram(s, train_x)).collect()
    };
    let snapshot = |specs: &[KernelSpec]| specs.iter().map(|s| s.theta().to_vec()).collect();

    let trainable = specs.iter().any(|s| s.kind().is_parametric());
    let mut current = specs.to_vec();
    let mut trace = TrainingTrace::default();
    let mut best: Option<(Vec<KernelSpec>, Vec<GramMatrix>, MklSolution)> = None;
    let mut warm: Option<Vec<f64>> = None;
    let mut u = to_coordinates(&current);
    let mut adam = AdamState::new(u.len());
    let mut stalled = 0;
    let options = SolverOptions::default();

    let last = if trainable { config.max_outer_iters } else { 0 };
    for iteration in 0..=last {
        let grams = grams_at(&current)?;
        let problem = MklProblem::new(grams, labels.to_vec(), config.lambda)?;
        let solution = match &warm {
            None => solve_easymkl(&problem)?,
            Some(start) => solve_easymkl_with(&problem, Some(start), &options)?,
        };
        let previous = trace.records.last().map(|r| r.loss);
        trace.push(TraceRecord {
            iteration,
            loss: solution.loss,
            gamma: solution.gamma.clone(),
            theta: snapshot(&current),
            degenerate: solution.degenerate,
        });
        let grams = problem.grams().to_vec();
        if trace.best_iteration == iteration {
            best = Some((current.clone(), grams.clone(), solution.clone()));
        }
        if iteration == last {
            break;
        }
        if let Some(prev) = previous {
            let relative = (solution.loss - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            stalled = if relative < config.loss_tolerance { stalled + 1 } else { 0 };
            if stalled >= PATIENCE {
                break;
            }
        }

        let gram_grads = current
            .iter()
            .map(|s| if s.kind().is_parametric() { gram_gradient(s, train_x) } else { Ok(Vec::new()) })
            .collect::<Result<Vec<_>>>()?;
        let mut g = loss_gradient_theta(&grams, &gram_grads, labels, &solution.phi, config.lambda)?.gradient;
        // chain rule into log coordinates
        let mut offset = 0;
        for s in &current {
            if log_space(s.kind()) {
                for (k, t) in s.theta().iter().enumerate() {
                    g[offset + k] *= t;
                }
            }
            offset += s.n_params();
        }
        let (next_u, next_adam) = adam_step(&u, &g, &adam, config)?;
        u = next_u;
        adam = next_adam;
        current = from_coordinates(&current, &u)?;
        warm = Some(solution.phi);
    }

    let (best_specs, best_grams, solution) = best.expect("at least one iterate is recorded");
    let final_gram = combine_grams(&best_grams, &solution.gamma_l1())?;
    Ok(TrainingResult {
        specs: best_specs,
        gamma_star: solution.gamma.clone(),
        solution,
        final_gram,
        trace,
    })
}
