//! EasyMKL weight optimisation for fixed kernel parameters.
//!
//! For labels `Y = diag(y)` and component Grams `K^(r)` the distance vector is
//! `d_r(φ) = φᵀ Y K^(r) Y φ`, and the weights follow from
//!
//! ```text
//! L = min_φ (1 − λ) ‖d(φ)‖₂ + λ ‖φ‖₂²,   γ* = d(φ_min) / ‖d(φ_min)‖₂
//! ```
//!
//! over the bi-simplex: `φ ≥ 0` with each class slice summing to one. The
//! minimisation is solved by projected gradient descent with an Armijo
//! backtracking line search; the projection is exact and cheap.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::kernels::GramMatrix;
use crate::labels::class_counts;

/// Weight optimisation problem over one training set.
#[derive(Clone, Debug)]
pub struct MklProblem {
    grams: Vec<GramMatrix>,
    labels: Vec<i8>,
    lambda: f64,
}

impl MklProblem {
    pub fn new(grams: Vec<GramMatrix>, labels: Vec<i8>, lambda: f64) -> Result<Self> {
        if grams.is_empty() {
            return Err(Error::Size("no Gram matrices".into()));
        }
        class_counts(&labels)?;
        for g in &grams {
            check_dim(labels.len(), g.size())?;
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Argument(format!("lambda must be in [0, 1), got {lambda}")));
        }
        Ok(Self {
            grams,
            labels,
            lambda,
        })
    }

    pub fn grams(&self) -> &[GramMatrix] {
        &self.grams
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Objective `(1 − λ)‖d(φ)‖₂ + λ‖φ‖₂²` at an arbitrary `φ`.
    pub fn objective(&self, phi: &[f64]) -> Result<f64> {
        let d = distance_vector(&self.grams, &self.labels, phi)?;
        Ok(self.objective_from(&d, phi))
    }

    fn objective_from(&self, d: &[f64], phi: &[f64]) -> f64 {
        (1.0 - self.lambda) * l2(d) + self.lambda * phi.iter().map(|p| p * p).sum::<f64>()
    }

    /// Distances, objective and objective gradient at `phi`.
    fn evaluate(&self, phi: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        let v = signed(phi, &self.labels);
        let kvs: Vec<DVector<f64>> = self.grams.iter().map(|g| g.entries() * &v).collect();
        let d: Vec<f64> = kvs.iter().map(|kv| v.dot(kv)).collect();
        let norm = l2(&d);
        let f = self.objective_from(&d, phi);
        let mut grad: Vec<f64> = phi.iter().map(|p| 2.0 * self.lambda * p).collect();
        // at d = 0 the norm term contributes the zero subgradient
        if norm > 0.0 {
            for (kv, dr) in kvs.iter().zip(&d) {
                let coeff = (1.0 - self.lambda) * 2.0 * dr / norm;
                for (i, g) in grad.iter_mut().enumerate() {
                    *g += coeff * f64::from(self.labels[i]) * kv[i];
                }
            }
        }
        (d, f, grad)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn signed(phi: &[f64], labels: &[i8]) -> DVector<f64> {
    DVector::from_iterator(
        phi.len(),
        phi.iter().zip(labels).map(|(p, &y)| p * f64::from(y)),
    )
}

/// Termination and line-search settings for [`solve_easymkl_with`].
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub relative_tolerance: f64,
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            gradient_tolerance: 1e-6,
            relative_tolerance: 1e-10,
            armijo: 1e-4,
            shrink: 0.5,
        }
    }
}

/// Result of one EasyMKL solve.
#[derive(Clone, Debug, PartialEq)]
pub struct MklSolution {
    pub phi: Vec<f64>,
    /// Unit-L2 weights `d / ‖d‖₂`.
    pub gamma: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The distance vector vanished and `gamma` is the uniform fallback.
    pub degenerate: bool,
    /// Objective after every accepted step, starting at the initial point.
    pub objective_history: Vec<f64>,
}

impl MklSolution {
    /// Weights rescaled to sum to one.
    pub fn gamma_l1(&self) -> Vec<f64> {
        l1_rescale(&self.gamma)
    }
}

impl Serialize for MklSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("MklSolution", 6)?;
        s.serialize_field("phi", &self.phi)?;
        s.serialize_field("gamma_l2", &self.gamma)?;
        s.serialize_field("gamma_l1", &self.gamma_l1())?;
        s.serialize_field("loss", &self.loss)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("converged", &self.converged)?;
        s.end()
    }
}

/// `d_r = φᵀ Y K^(r) Y φ` for every component.
pub fn distance_vector(grams: &[GramMatrix], labels: &[i8], phi: &[f64]) -> Result<Vec<f64>> {
    check_dim(labels.len(), phi.len())?;
    let v = signed(phi, labels);
    grams
        .iter()
        .map(|g| {
            check_dim(phi.len(), g.size())?;
            Ok(quadratic_form(g.entries(), &v))
        })
        .collect()
}

pub(crate) fn quadratic_form(k: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(k * v))
}

/// Euclidean projection onto the unit simplex by sort-and-threshold.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Projects `v` onto `{φ ≥ 0, Σ_{y=+1} φ = 1, Σ_{y=−1} φ = 1}`, one simplex
/// per class.
pub fn project_bisimplex(v: &[f64], labels: &[i8]) -> Result<Vec<f64>> {
    check_dim(labels.len(), v.len())?;
    class_counts(labels)?;
    let mut out = vec![0.0; v.len()];
    for class in [1i8, -1] {
        let idx: Vec<usize> = (0..v.len()).filter(|&i| labels[i] == class).collect();
        let slice: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        for (&i, p) in idx.iter().zip(project_simplex(&slice)) {
            out[i] = p;
        }
    }
    Ok(out)
}

/// `γ* = d / ‖d‖₂`. A zero vector is a degenerate solution.
pub fn optimal_weights(d: &[f64]) -> Result<Vec<f64>> {
    let norm = l2(d);
    if !(norm > 0.0) {
        return Err(Error::Degenerate("distance vector is zero".into()));
    }
    Ok(d.iter().map(|x| x / norm).collect())
}

/// Rescales non-negative weights to unit L1 norm.
pub fn l1_rescale(gamma: &[f64]) -> Vec<f64> {
    let sum: f64 = gamma.iter().sum();
    gamma.iter().map(|g| g / sum).collect()
}

/// Uniform per-class starting point.
pub fn uniform_phi(labels: &[i8]) -> Result<Vec<f64>> {
    let (pos, neg) = class_counts(labels)?;
    Ok(labels
        .iter()
        .map(|&y| if y == 1 { 1.0 / pos as f64 } else { 1.0 / neg as f64 })
        .collect())
}

/// Solves from the uniform per-class start with default options.
pub fn solve_easymkl(problem: &MklProblem) -> Result<MklSolution> {
    solve_easymkl_with(problem, None, &SolverOptions::default())
}

// Below this the distance vector is treated as zero.
const DEGENERATE_NORM: f64 = 1e-12;

/// Solves from `start` (projected onto the feasible set) or the uniform start.
pub fn solve_easymkl_with(
    problem: &MklProblem,
    start: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<MklSolution> {
    let labels = &problem.labels;
    let mut phi = match start {
        Some(s) => project_bisimplex(s, labels)?,
        None => uniform_phi(labels)?,
    };
    let (mut d, mut f, mut grad) = problem.evaluate(&phi);
    let mut history = vec![f];
    let mut step: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let trial: Vec<f64> = phi.iter().zip(&grad).map(|(p, g)| p - g).collect();
        let projected = project_bisimplex(&trial, labels)?;
        let pg_norm = phi
            .iter()
            .zip(&projected)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if pg_norm < options.gradient_tolerance {
            converged = true;
            break;
        }

        step = (step * 2.0).min(1e8);
        let accepted = loop {
            let trial: Vec<f64> = phi.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let candidate = project_bisimplex(&trial, labels)?;
            let decrease: f64 = grad
                .iter()
                .zip(candidate.iter().zip(&phi))
                .map(|(g, (c, p))| g * (c - p))
                .sum();
            let (cd, cf, cg) = problem.evaluate(&candidate);
            if cf <= f + options.armijo * decrease {
                break Some((candidate, cd, cf, cg));
            }
            step *= options.shrink;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((candidate, cd, cf, cg)) = accepted else {
            // no representable decrease left along the projected path
            converged = true;
            break;
        };
        iterations += 1;
        let relative = (f - cf).abs() / f.abs().max(f64::MIN_POSITIVE);
        phi = candidate;
        d = cd;
        f = cf;
        grad = cg;
        history.push(f);
        if relative < options.relative_tolerance {
            converged = true;
            break;
        }
    }

    let (gamma, degenerate) = if l2(&d) > DEGENERATE_NORM {
        (optimal_weights(&d)?, false)
    } else {
        let r = problem.grams.len();
        (vec![1.0 / (r as f64).sqrt(); r], true)
    };
    Ok(MklSolution {
        phi,
        gamma,
        loss: f,
        iterations,
        converged,
        degenerate,
        objective_history: history,
    })
}
