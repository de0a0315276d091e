use nalgebra::DMatrix;

use super::gram::validate_weights;
use super::{
    combine_grams, gram_matrix, normalization_index, normalize_gram, prepared_gram, Embedded, GramMatrix,
    KernelSpec,
};
use crate::error::{check_dim, Error, Result};

/// A weighted kernel combination fixed to a training set, able to produce the
/// combined training Gram and cross-Grams against new points.
///
/// Unbounded components are divided by the same training-set scale on both
/// sides, so `cross_gram(train)` reproduces `train_gram()`.
#[derive(Clone, Debug)]
pub struct CombinedKernel {
    specs: Vec<KernelSpec>,
    weights: Vec<f64>,
    train: Vec<Vec<f64>>,
    // max_m k(x_m, x_m) per unbounded spec; 1 for bounded ones
    scales: Vec<f64>,
}

impl CombinedKernel {
    pub fn new(specs: Vec<KernelSpec>, weights: Vec<f64>, train: Vec<Vec<f64>>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Size("no base kernels".into()));
        }
        if train.is_empty() {
            return Err(Error::Size("empty training set".into()));
        }
        check_dim(specs.len(), weights.len())?;
        validate_weights(&weights)?;
        let d = specs[0].n_features();
        if let Some(s) = specs.iter().find(|s| s.n_features() != d) {
            return Err(Error::Dimension {
                expected: d,
                actual: s.n_features(),
            });
        }
        let scales = specs
            .iter()
            .map(|s| training_scale(s, &train))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            specs,
            weights,
            train,
            scales,
        })
    }

    pub fn specs(&self) -> &[KernelSpec] {
        &self.specs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn train_points(&self) -> &[Vec<f64>] {
        &self.train
    }

    /// Prepared component Grams over the training set.
    pub fn component_grams(&self) -> Result<Vec<GramMatrix>> {
        self.specs.iter().map(|s| prepared_gram(s, &self.train)).collect()
    }

    pub fn train_gram(&self) -> Result<GramMatrix> {
        combine_grams(&self.component_grams()?, &self.weights)
    }

    /// `T×M` matrix of combined kernel values between `points` (rows) and the
    /// training points (columns).
    pub fn cross_gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let t = points.len();
        let m = self.train.len();
        let mut out = DMatrix::zeros(t, m);
        for ((spec, &w), &scale) in self.specs.iter().zip(&self.weights).zip(&self.scales) {
            if w == 0.0 {
                continue;
            }
            let lhs = Embedded::new(spec, points)?;
            let rhs = Embedded::new(spec, &self.train)?;
            for i in 0..t {
                for j in 0..m {
                    out[(i, j)] += w * lhs.eval(spec, &rhs, i, j) / scale;
                }
            }
        }
        Ok(out)
    }
}

fn training_scale(spec: &KernelSpec, train: &[Vec<f64>]) -> Result<f64> {
    if spec.is_bounded() {
        return Ok(1.0);
    }
    let gram = gram_matrix(spec, train)?;
    let k = normalization_index(&gram);
    normalize_gram(&gram)?;
    Ok(gram.get(k, k))
}
