//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qcmkl_core::kernels::{qaoa_pairs, KernelKind, QaoaTopology};

type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity2() -> CMat {
    CMat::identity(2, 2)
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Full `2^n × 2^n` operator acting as `gate` on `qubit`. Qubit 0 is the
/// least significant bit, so it is the rightmost Kronecker factor.
pub fn lift(gate: &CMat, qubit: usize, n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let id = identity2();
        out = kron(&out, if q == qubit { gate } else { &id });
    }
    out
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `exp(−i a G / 2)` for an involutory generator `G` (`G² = I`).
pub fn exp_involutory(generator: &CMat, angle: f64) -> CMat {
    let n = generator.nrows();
    let (s, co) = (angle / 2.0).sin_cos();
    CMat::identity(n, n) * c(co, 0.0) - generator * c(0.0, s)
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

fn zz(p: usize, q: usize, n: usize) -> CMat {
    lift(&pauli_z(), p, n) * lift(&pauli_z(), q, n)
}

/// Embedding unitary built from explicit matrix products.
pub fn dense_unitary(kind: KernelKind, topology: QaoaTopology, theta: &[f64], x: &[f64]) -> CMat {
    let n = x.len();
    let dim = 1usize << n;
    let mut u = CMat::identity(dim, dim);
    let mut apply = |g: CMat| u = &g * &u;
    match kind {
        KernelKind::Rx => {
            for p in 0..n {
                apply(lift(&exp_involutory(&pauli_x(), x[p]), p, n));
            }
        }
        KernelKind::Iqp => {
            for p in 0..n {
                apply(lift(&hadamard(), p, n));
            }
            for p in 0..n {
                apply(lift(&exp_involutory(&pauli_z(), x[p]), p, n));
            }
            for p in 0..n {
                for q in p + 1..n {
                    apply(exp_involutory(&zz(p, q, n), x[p] * x[q]));
                }
            }
        }
        KernelKind::Qaoa => {
            for p in 0..n {
                apply(lift(&exp_involutory(&pauli_x(), x[p]), p, n));
            }
            let pairs = qaoa_pairs(n, topology);
            for (k, &(p, q)) in pairs.iter().enumerate() {
                apply(exp_involutory(&zz(p, q, n), theta[k]));
            }
            for p in 0..n {
                apply(lift(&exp_involutory(&pauli_y(), theta[pairs.len() + p]), p, n));
            }
        }
        _ => panic!("no circuit for {kind}"),
    }
    u
}

/// `|⟨0|U(x')† U(x)|0⟩|²` from dense unitaries.
pub fn dense_fidelity(kind: KernelKind, topology: QaoaTopology, theta: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let ux = dense_unitary(kind, topology, theta, x);
    let uy = dense_unitary(kind, topology, theta, y);
    let m = uy.adjoint() * ux;
    m[(0, 0)].norm_sqr()
}

/// Smallest eigenvalue by the symmetric eigen-solver.
pub fn min_eigenvalue(k: &DMatrix<f64>) -> f64 {
    k.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// All compositions of `steps` into `parts` non-negative integers.
pub fn compositions(steps: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![steps]];
    }
    let mut out = Vec::new();
    for first in 0..=steps {
        for mut rest in compositions(steps - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Minimum of `(1 − λ)‖d(φ)‖₂ + λ‖φ‖²` over the bi-simplex lattice with
/// spacing `1/steps`, for every λ in `lambdas` at once.
///
/// `d_r = q⁺_r + q⁻_r − 2 ⟨u_r, φ⁻⟩` where `q±` are the within-class quadratic
/// forms and `u_r = K_r[+, −]ᵀ φ⁺`, so each lattice pair costs `O(R · n⁻)`.
pub fn grid_minimum(grams: &[DMatrix<f64>], labels: &[i8], lambdas: &[f64], steps: usize) -> Vec<f64> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1).collect();
    let h = 1.0 / steps as f64;
    let to_phi = |c: &[usize]| c.iter().map(|&k| k as f64 * h).collect::<Vec<f64>>();
    let quad = |k: &DMatrix<f64>, idx: &[usize], v: &[f64]| {
        let mut s = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                s += v[a] * v[b] * k[(i, j)];
            }
        }
        s
    };
    let neg_points: Vec<(Vec<f64>, Vec<f64>, f64)> = compositions(steps, neg.len())
        .iter()
        .map(|c| {
            let phi = to_phi(c);
            let q: Vec<f64> = grams.iter().map(|k| quad(k, &neg, &phi)).collect();
            let sq = phi.iter().map(|p| p * p).sum();
            (phi, q, sq)
        })
        .collect();
    let mut best = vec![f64::INFINITY; lambdas.len()];
    let mut d = vec![0.0; grams.len()];
    for c in compositions(steps, pos.len()) {
        let phi_p = to_phi(&c);
        let q_p: Vec<f64> = grams.iter().map(|k| quad(k, &pos, &phi_p)).collect();
        let u: Vec<Vec<f64>> = grams
            .iter()
            .map(|k| {
                neg.iter()
                    .map(|&j| pos.iter().zip(&phi_p).map(|(&i, p)| p * k[(i, j)]).sum())
                    .collect()
            })
            .collect();
        let sq_p: f64 = phi_p.iter().map(|p| p * p).sum();
        for (phi_n, q_n, sq_n) in &neg_points {
            for r in 0..grams.len() {
                let cross: f64 = u[r].iter().zip(phi_n).map(|(a, b)| a * b).sum();
                d[r] = q_p[r] + q_n[r] - 2.0 * cross;
            }
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (l, &lambda) in lambdas.iter().enumerate() {
                let f = (1.0 - lambda) * norm + lambda * (sq_p + sq_n);
                if f < best[l] {
                    best[l] = f;
                }
            }
        }
    }
    best
}

/// `Σα − ½ αᵀ Q α` with `Q_ij = y_i y_j K_ij`.
pub fn svm_dual(k: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
pub fn project_box_hyperplane(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(a, b)| (a - mu * b).clamp(0.0, c)).collect() };
    let residual = |mu: f64| at(mu).iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let bound = v.iter().map(|a| a.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    // residual is non-increasing in mu
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient ascent on the SVM dual, run to high
/// precision. Returns `(α, b)` with `b` from the free coefficients, or the
/// midpoint of the feasible bias interval when none is free.
pub fn svm_reference(k: &DMatrix<f64>, labels: &[i8], c: f64, iterations: usize) -> (Vec<f64>, f64) {
    let m = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = DMatrix::from_fn(m, m, |i, j| y[i] * y[j] * k[(i, j)]);
    let lipschitz = q.clone().symmetric_eigenvalues().iter().copied().fold(0.0, f64::max).max(1e-12);
    let step = 1.0 / lipschitz;
    let mut alpha = vec![0.0; m];
    let mut z = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..m).map(|i| 1.0 - (0..m).map(|j| q[(i, j)] * z[j]).sum::<f64>()).collect();
        let trial: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
        let next = project_box_hyperplane(&trial, &y, c);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = next.iter().zip(&alpha).map(|(n, a)| n + (t - 1.0) / t_next * (n - a)).collect();
        alpha = next;
        t = t_next;
    }
    let grad: Vec<f64> = (0..m).map(|i| y[i] - (0..m).map(|j| alpha[j] * y[j] * k[(i, j)]).sum::<f64>()).collect();
    let free: Vec<usize> = (0..m).filter(|&i| alpha[i] > 1e-6 * c && alpha[i] < c * (1.0 - 1e-6)).collect();
    let bias = if free.is_empty() {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..m {
            let at_lower = alpha[i] <= 1e-6 * c;
            // y_i f(x_i) ≥ 1 at the lower bound, ≤ 1 at the upper bound
            if (at_lower && y[i] > 0.0) || (!at_lower && y[i] < 0.0) {
                lo = lo.max(grad[i]);
            } else {
                hi = hi.min(grad[i]);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            _ => 0.0,
        }
    } else {
        free.iter().map(|&i| grad[i]).sum::<f64>() / free.len() as f64
    };
    (alpha, bias)
}

/// Decision values `Σ α_j y_j K(t, j) + b`.
pub fn svm_scores(k_cross: &DMatrix<f64>, labels: &[i8], alpha: &[f64], bias: f64) -> Vec<f64> {
    (0..k_cross.nrows())
        .map(|t| (0..alpha.len()).map(|j| alpha[j] * f64::from(labels[j]) * k_cross[(t, j)]).sum::<f64>() + bias)
        .collect()
}
