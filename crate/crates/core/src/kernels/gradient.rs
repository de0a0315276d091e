use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use super::{embed_with_theta, gram_matrix, normalization_index, normalize_gram, KernelKind, KernelSpec};
use crate::error::{check_dim, Error, Result};
use crate::statevector::Statevector;

/// Derivatives of the raw Gram matrix, one `M×M` matrix per θ component.
///
/// Polynomial and RBF use the analytic derivatives. QAOA uses the
/// parameter-shift rule on each of the two circuit copies: θ_j enters both the
/// ket embedding `U(x)` and the bra embedding `U(x')`, and every generator has
/// eigenvalues ±1, so
///
/// ```text
/// ∂k/∂θ_j = ½[k(θ_j^ket + π/2) − k(θ_j^ket − π/2)] + ½[k(θ_j^bra + π/2) − k(θ_j^bra − π/2)]
/// ```
pub fn raw_gram_gradient(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<DMatrix<f64>>> {
    for p in points {
        check_dim(spec.n_features(), p.len())?;
    }
    let m = points.len();
    let theta = spec.theta();
    match spec.kind() {
        KernelKind::Polynomial => {
            let mut d0 = DMatrix::zeros(m, m);
            let mut d1 = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let ip: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
                    let base = theta[0] * ip + theta[1];
                    let outer = 3.0 * base * base;
                    d0[(i, j)] = outer * ip;
                    d0[(j, i)] = outer * ip;
                    d1[(i, j)] = outer;
                    d1[(j, i)] = outer;
                }
            }
            Ok(vec![d0, d1])
        }
        KernelKind::Rbf => {
            let mut d = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i + 1..m {
                    let sq: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    let v = -sq * (-theta[0] * sq).exp();
                    d[(i, j)] = v;
                    d[(j, i)] = v;
                }
            }
            Ok(vec![d])
        }
        KernelKind::Qaoa => qaoa_parameter_shift(spec, points),
        other => Err(Error::Kind(format!("{other} kernel has no trainable parameters"))),
    }
}

fn qaoa_parameter_shift(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let m = points.len();
    let n_params = spec.n_params();
    let embed = |theta: &[f64], x: &[f64]| embed_with_theta(spec.kind(), spec.topology(), theta, x);

    let base: Vec<Statevector> = points
        .iter()
        .map(|x| embed(spec.theta(), x))
        .collect::<Result<_>>()?;
    let mut grads = Vec::with_capacity(n_params);
    let mut shifted = spec.theta().to_vec();
    for j in 0..n_params {
        let original = shifted[j];
        shifted[j] = original + FRAC_PI_2;
        let plus: Vec<Statevector> = points.iter().map(|x| embed(&shifted, x)).collect::<Result<_>>()?;
        shifted[j] = original - FRAC_PI_2;
        let minus: Vec<Statevector> = points.iter().map(|x| embed(&shifted, x)).collect::<Result<_>>()?;
        shifted[j] = original;

        // ket-side shift of point a against the unshifted bra of point b
        let ket_term = |a: usize, b: usize| {
            0.5 * (plus[a].fidelity_unchecked(&base[b]) - minus[a].fidelity_unchecked(&base[b]))
        };
        let mut g = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a + 1..m {
                let v = ket_term(a, b) + ket_term(b, a);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Derivatives of the Gram matrix as it is used downstream: for unbounded
/// kernels this is the derivative of the normalised matrix `K / K_kk`, where
/// `k` indexes the largest diagonal entry,
///
/// ```text
/// ∂K̃_ij = (∂K_ij − K̃_ij ∂K_kk) / K_kk
/// ```
///
/// The maximising index is held fixed, which gives the one-sided derivative
/// where two diagonal entries tie.
pub fn gram_gradient(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let raw_grads = raw_gram_gradient(spec, points)?;
    if spec.is_bounded() {
        return Ok(raw_grads);
    }
    let raw = gram_matrix(spec, points)?;
    let normalized = normalize_gram(&raw)?;
    let k = normalization_index(&raw);
    let scale = raw.get(k, k);
    Ok(raw_grads
        .into_iter()
        .map(|dk| (&dk - normalized.entries() * dk[(k, k)]) / scale)
        .collect())
}
