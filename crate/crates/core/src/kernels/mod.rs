//! The six base kernels and their Gram matrices.
//!
//! Classical kernels:
//!
//! | kind       | k(x, x')                        | θ          | default      |
//! |------------|---------------------------------|------------|--------------|
//! | Linear     | ⟨x, x'⟩                          | –          |              |
//! | Polynomial | (θ0 ⟨x, x'⟩ + θ1)³               | (θ0, θ1)   | (1/d, 1)     |
//! | RBF        | exp(−θ2 ‖x − x'‖²)               | (θ2)       | 1            |
//!
//! Quantum kernels are fidelities `|⟨Φ(x')|Φ(x)⟩|²` of single-layer
//! embeddings with one qubit per feature:
//!
//! - RX: `RX(x_p)` on every qubit;
//! - IQP: `H` on every qubit, `RZ(x_p)`, then `ZZ(x_p x_q)` for `p < q`;
//! - QAOA: `RX(x_p)`, trainable `ZZ(θ_pq)` over a topology, then trainable
//!   `RY(θ_p)`. The ZZ angles come first in θ, the trailing `d` entries are
//!   the RY angles.

mod combined;
mod gradient;
mod gram;

pub use combined::CombinedKernel;
pub use gradient::{gram_gradient, raw_gram_gradient};
pub use gram::{
    combine_grams, gram_matrix, normalization_index, normalize_gram, prepared_gram,
    GramMatrix,
};

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::statevector::{Axis, Statevector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Rx,
    Iqp,
    Qaoa,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        KernelKind::Linear,
        KernelKind::Polynomial,
        KernelKind::Rbf,
        KernelKind::Rx,
        KernelKind::Iqp,
        KernelKind::Qaoa,
    ];

    pub fn is_quantum(self) -> bool {
        matches!(self, KernelKind::Rx | KernelKind::Iqp | KernelKind::Qaoa)
    }

    /// Bounded kernels evaluate to 1 on identical inputs.
    pub fn is_bounded(self) -> bool {
        !matches!(self, KernelKind::Linear | KernelKind::Polynomial)
    }

    pub fn is_parametric(self) -> bool {
        matches!(self, KernelKind::Polynomial | KernelKind::Rbf | KernelKind::Qaoa)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "Linear",
            KernelKind::Polynomial => "Polynomial",
            KernelKind::Rbf => "RBF",
            KernelKind::Rx => "RX",
            KernelKind::Iqp => "IQP",
            KernelKind::Qaoa => "QAOA",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            "rx" => Ok(KernelKind::Rx),
            "iqp" => Ok(KernelKind::Iqp),
            "qaoa" => Ok(KernelKind::Qaoa),
            other => Err(Error::Kind(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Which qubit pairs carry a trainable ZZ angle in the QAOA embedding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaoaTopology {
    /// Every unordered pair `p < q`: `d(d−1)/2` ZZ angles.
    #[default]
    AllPairs,
    /// Nearest neighbours `(p, p+1 mod d)`: `d` ZZ angles, `2d` parameters in
    /// total. Requires `d ≥ 2`; at `d = 2` the pair (0, 1) appears twice.
    Ring,
}

/// ZZ entangler pairs of the QAOA embedding, in parameter order.
pub fn qaoa_pairs(n_features: usize, topology: QaoaTopology) -> Vec<(usize, usize)> {
    match topology {
        QaoaTopology::AllPairs => (0..n_features)
            .flat_map(|p| (p + 1..n_features).map(move |q| (p, q)))
            .collect(),
        QaoaTopology::Ring => {
            if n_features < 2 {
                Vec::new()
            } else {
                (0..n_features).map(|p| (p, (p + 1) % n_features)).collect()
            }
        }
    }
}

/// Number of trainable parameters for a kernel of the given kind.
pub fn param_count(kind: KernelKind, n_features: usize, topology: QaoaTopology) -> usize {
    match kind {
        KernelKind::Linear | KernelKind::Rx | KernelKind::Iqp => 0,
        KernelKind::Polynomial => 2,
        KernelKind::Rbf => 1,
        KernelKind::Qaoa => qaoa_pairs(n_features, topology).len() + n_features,
    }
}

/// One base kernel together with its parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    kind: KernelKind,
    n_features: usize,
    theta: Vec<f64>,
    #[serde(default)]
    topology: QaoaTopology,
}

impl KernelSpec {
    pub fn new(
        kind: KernelKind,
        n_features: usize,
        theta: Vec<f64>,
        topology: QaoaTopology,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Argument("kernels need at least one feature".into()));
        }
        if kind == KernelKind::Qaoa && topology == QaoaTopology::Ring && n_features < 2 {
            return Err(Error::Argument("ring topology needs at least two features".into()));
        }
        let expected = param_count(kind, n_features, topology);
        if theta.len() != expected {
            return Err(Error::Argument(format!(
                "{kind} kernel on {n_features} features takes {expected} parameters, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("kernel parameters must be finite".into()));
        }
        if kind == KernelKind::Rbf && theta[0] <= 0.0 {
            return Err(Error::Argument(format!("RBF θ2 must be positive, got {}", theta[0])));
        }
        Ok(Self {
            kind,
            n_features,
            theta,
            topology,
        })
    }

    /// Default parameters for the non-random kinds: `(θ0, θ1) = (1/d, 1)`,
    /// `θ2 = 1`. QAOA has no default and is rejected here; see [`Self::initial`].
    pub fn with_defaults(kind: KernelKind, n_features: usize) -> Result<Self> {
        let theta = match kind {
            KernelKind::Polynomial => vec![1.0 / n_features as f64, 1.0],
            KernelKind::Rbf => vec![1.0],
            KernelKind::Qaoa => {
                return Err(Error::Kind("QAOA parameters are drawn at random".into()))
            }
            _ => Vec::new(),
        };
        Self::new(kind, n_features, theta, QaoaTopology::default())
    }

    /// Initial parameters: defaults for classical kinds, uniform on `[0, 2π]`
    /// for QAOA.
    pub fn initial<R: Rng + ?Sized>(
        kind: KernelKind,
        n_features: usize,
        topology: QaoaTopology,
        rng: &mut R,
    ) -> Result<Self> {
        if kind == KernelKind::Qaoa {
            let n = param_count(kind, n_features, topology);
            let theta = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            Self::new(kind, n_features, theta, topology)
        } else {
            Self::with_defaults(kind, n_features)
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn topology(&self) -> QaoaTopology {
        self.topology
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.kind.is_bounded()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, self.n_features, theta, self.topology)
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Builds the embedding circuit for a quantum kind with an explicit θ.
pub(crate) fn embed_with_theta(
    kind: KernelKind,
    topology: QaoaTopology,
    theta: &[f64],
    x: &[f64],
) -> Result<Statevector> {
    let n = x.len();
    let mut state = Statevector::zero_state(n)?;
    match kind {
        KernelKind::Rx => {
            for (p, &xp) in x.iter().enumerate() {
                state.apply_rotation(Axis::X, p, xp)?;
            }
        }
        KernelKind::Iqp => {
            for p in 0..n {
                state.apply_hadamard(p)?;
            }
            for (p, &xp) in x.iter().enumerate() {
                state.apply_rotation(Axis::Z, p, xp)?;
            }
            for p in 0..n {
                for q in p + 1..n {
                    state.apply_zz(p, q, x[p] * x[q])?;
                }
            }
        }
        KernelKind::Qaoa => {
            for (p, &xp) in x.iter().enumerate() {
                state.apply_rotation(Axis::X, p, xp)?;
            }
            let pairs = qaoa_pairs(n, topology);
            for (&(p, q), &angle) in pairs.iter().zip(theta) {
                state.apply_zz(p, q, angle)?;
            }
            for (p, &angle) in theta[pairs.len()..].iter().enumerate() {
                state.apply_rotation(Axis::Y, p, angle)?;
            }
        }
        classical => {
            return Err(Error::Kind(format!("{classical} kernel has no quantum embedding")))
        }
    }
    state.check_norm()?;
    Ok(state)
}

/// The embedded state `U_θ(x)|0⟩` for a quantum kernel.
pub fn embed_state(spec: &KernelSpec, x: &[f64]) -> Result<Statevector> {
    if !spec.kind.is_quantum() {
        return Err(Error::Kind(format!("{} kernel has no quantum embedding", spec.kind)));
    }
    check_dim(spec.n_features, x.len())?;
    embed_with_theta(spec.kind, spec.topology, &spec.theta, x)
}

pub(crate) fn classical_eval(kind: KernelKind, theta: &[f64], x: &[f64], y: &[f64]) -> f64 {
    match kind {
        KernelKind::Linear => dot(x, y),
        KernelKind::Polynomial => (theta[0] * dot(x, y) + theta[1]).powi(3),
        KernelKind::Rbf => (-theta[0] * squared_distance(x, y)).exp(),
        _ => unreachable!("classical_eval called with a quantum kind"),
    }
}

/// Evaluates `k(x, x')` for a single pair of points.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    check_dim(spec.n_features, x.len())?;
    check_dim(spec.n_features, x_prime.len())?;
    if spec.kind.is_quantum() {
        let a = embed_state(spec, x)?;
        let b = embed_state(spec, x_prime)?;
        a.fidelity(&b)
    } else {
        Ok(classical_eval(spec.kind, &spec.theta, x, x_prime))
    }
}

/// Per-point precomputation shared by Gram and cross-Gram builds.
pub(crate) enum Embedded<'a> {
    Classical(&'a [Vec<f64>]),
    Quantum(Vec<Statevector>),
}

impl<'a> Embedded<'a> {
    pub(crate) fn new(spec: &KernelSpec, points: &'a [Vec<f64>]) -> Result<Self> {
        for p in points {
            check_dim(spec.n_features, p.len())?;
        }
        if spec.kind.is_quantum() {
            let states = points
                .iter()
                .map(|x| embed_with_theta(spec.kind, spec.topology, &spec.theta, x))
                .collect::<Result<Vec<_>>>()?;
            Ok(Embedded::Quantum(states))
        } else {
            Ok(Embedded::Classical(points))
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            Embedded::Classical(p) => p.len(),
            Embedded::Quantum(s) => s.len(),
        }
    }

    pub(crate) fn eval(&self, spec: &KernelSpec, other: &Embedded<'_>, i: usize, j: usize) -> f64 {
        match (self, other) {
            (Embedded::Classical(a), Embedded::Classical(b)) => {
                classical_eval(spec.kind, &spec.theta, &a[i], &b[j])
            }
            (Embedded::Quantum(a), Embedded::Quantum(b)) => a[i].fidelity_unchecked(&b[j]),
            _ => unreachable!("mixed embeddings"),
        }
    }
}
