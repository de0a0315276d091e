use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use super::{Embedded, KernelSpec};
use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 4] = b"QGRM";

/// Symmetric matrix of pairwise kernel values over one sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    bounded: bool,
    normalized: bool,
}

impl GramMatrix {
    /// Wraps a square matrix. Symmetry is checked to 1e-10.
    pub fn new(entries: DMatrix<f64>, bounded: bool, normalized: bool) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::Size("empty Gram matrix".into()));
        }
        let gram = Self {
            entries,
            bounded,
            normalized,
        };
        if !gram.is_symmetric(1e-10) {
            return Err(Error::Argument("Gram matrix is not symmetric".into()));
        }
        Ok(gram)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn bounded(&self) -> bool {
        self.bounded
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.size();
        (0..n).all(|i| (i + 1..n).all(|j| (self.entries[(i, j)] - self.entries[(j, i)]).abs() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Row-major CSV without a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.size() {
            let row: Vec<String> = (0..self.size()).map(|j| format!("{:e}", self.entries[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (index, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: index + 1,
                        message: format!("'{v}': {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        line: index + 1,
                        message: format!("expected {} values, got {}", first.len(), row.len()),
                    });
                }
            }
            rows.push(row);
        }
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Parse {
                line: m,
                message: "Gram CSV is not square".into(),
            });
        }
        let entries = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
        Self::from_loaded(entries)
    }

    /// `"QGRM"`, `u32` size, then `f64` entries row-major, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let m = u32::try_from(self.size()).map_err(|_| Error::Size("Gram too large".into()))?;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&m.to_le_bytes())?;
        for i in 0..self.size() {
            for j in 0..self.size() {
                out.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Parse {
                line: 0,
                message: "missing QGRM magic".into(),
            });
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let m = u32::from_le_bytes(word) as usize;
        let mut values = vec![0.0; m * m];
        let mut buf = [0u8; 8];
        for v in values.iter_mut() {
            input.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        Self::from_loaded(DMatrix::from_row_slice(m, m, &values))
    }

    fn from_loaded(entries: DMatrix<f64>) -> Result<Self> {
        let unit = (0..entries.nrows()).all(|i| (entries[(i, i)] - 1.0).abs() <= 1e-10);
        Self::new(entries, false, unit)
    }
}

/// Raw Gram matrix `K_ij = k(x_i, x_j)`, one evaluation per unordered pair.
pub fn gram_matrix(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::Size("Gram matrix needs at least one point".into()));
    }
    let embedded = Embedded::new(spec, points)?;
    let m = embedded.len();
    let mut entries = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = embedded.eval(spec, &embedded, i, j);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        entries,
        bounded: spec.is_bounded(),
        normalized: false,
    })
}

/// The Gram matrix as it enters weight optimisation and metrics: unbounded
/// kernels are normalised, bounded ones are left as they are.
pub fn prepared_gram(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<GramMatrix> {
    let raw = gram_matrix(spec, points)?;
    if spec.is_bounded() {
        Ok(raw)
    } else {
        normalize_gram(&raw)
    }
}

/// Index of the largest diagonal entry, the first one on ties. Normalisation
/// divides by this entry, so every entry of the result lies in `[-1, 1]`.
pub fn normalization_index(gram: &GramMatrix) -> usize {
    let k = &gram.entries;
    (0..gram.size()).fold(0, |best, i| if k[(i, i)] > k[(best, best)] { i } else { best })
}

/// `K / max_i K_ii`. A uniform rescaling keeps the decision functions of the
/// kernel intact (a linear kernel stays linear) while bounding its entries
/// like those of the bounded kernels. Diagonal entries must be non-negative
/// and at least one must be positive.
pub fn normalize_gram(gram: &GramMatrix) -> Result<GramMatrix> {
    let m = gram.size();
    if let Some(i) = (0..m).find(|&i| !(gram.entries[(i, i)] >= 0.0)) {
        return Err(Error::DegenerateKernel(format!(
            "diagonal entry {i} is {}",
            gram.entries[(i, i)]
        )));
    }
    let scale = gram.entries[(normalization_index(gram), normalization_index(gram))];
    if scale <= 0.0 {
        return Err(Error::DegenerateKernel("every diagonal entry is zero".into()));
    }
    Ok(GramMatrix {
        entries: &gram.entries / scale,
        bounded: gram.bounded,
        normalized: true,
    })
}

/// Convex combination `Σ_r γ_r K^(r)`; `γ ≥ 0` and `‖γ‖₁ = 1` within 1e-8.
pub fn combine_grams(grams: &[GramMatrix], gamma: &[f64]) -> Result<GramMatrix> {
    if grams.is_empty() {
        return Err(Error::Size("no Gram matrices to combine".into()));
    }
    if grams.len() != gamma.len() {
        return Err(Error::Dimension {
            expected: grams.len(),
            actual: gamma.len(),
        });
    }
    validate_weights(gamma)?;
    let m = grams[0].size();
    if let Some(g) = grams.iter().find(|g| g.size() != m) {
        return Err(Error::Dimension {
            expected: m,
            actual: g.size(),
        });
    }
    let mut entries = DMatrix::zeros(m, m);
    for (g, &w) in grams.iter().zip(gamma) {
        entries += &g.entries * w;
    }
    let prepared = grams.iter().all(|g| g.bounded || g.normalized);
    Ok(GramMatrix {
        entries,
        bounded: grams.iter().all(|g| g.bounded),
        normalized: prepared && grams.iter().any(|g| g.normalized),
    })
}

pub(crate) fn validate_weights(gamma: &[f64]) -> Result<()> {
    if let Some(w) = gamma.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Weight(format!("negative or NaN weight {w}")));
    }
    let l1: f64 = gamma.iter().sum();
    if (l1 - 1.0).abs() > 1e-8 {
        return Err(Error::Weight(format!("weights sum to {l1}, not 1")));
    }
    Ok(())
}
