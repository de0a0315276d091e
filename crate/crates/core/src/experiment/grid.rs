use std::f64::consts::TAU;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kernels::CombinedKernel;
use crate::svm::{decision_values, SvmModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

/// Decision values on a `resolution × resolution` lattice over `[0, 2π]²`,
/// `x` varying fastest.
pub fn decision_grid(model: &SvmModel, kernel: &CombinedKernel, resolution: usize) -> Result<Vec<GridPoint>> {
    let d = kernel.specs()[0].n_features();
    if d != 2 {
        return Err(Error::Dimension { expected: 2, actual: d });
    }
    if resolution < 2 {
        return Err(Error::Argument(format!("grid resolution must be at least 2, got {resolution}")));
    }
    let axis: Vec<f64> = (0..resolution).map(|i| TAU * (i as f64 / (resolution - 1) as f64)).collect();
    let points: Vec<Vec<f64>> = axis.iter().flat_map(|&y| axis.iter().map(move |&x| vec![x, y])).collect();
    let scores = decision_values(model, &kernel.cross_gram(&points)?)?;
    Ok(points.iter().zip(scores).map(|(p, score)| GridPoint { x: p[0], y: p[1], score }).collect())
}

pub fn write_grid_csv<W: Write>(grid: &[GridPoint], mut out: W) -> Result<()> {
    writeln!(out, "x,y,score")?;
    for p in grid {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", p.x, p.y, p.score)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelKind, KernelSpec};
    use crate::svm::train_svm;

    #[test]
    fn grid_layout_and_size() {
        let train = vec![vec![1.0, 1.0], vec![1.5, 0.5], vec![5.0, 5.5], vec![5.5, 4.8]];
        let labels = [-1, -1, 1, 1];
        let spec = KernelSpec::with_defaults(KernelKind::Rbf, 2).unwrap();
        let kernel = CombinedKernel::new(vec![spec], vec![1.0], train).unwrap();
        let model = train_svm(&kernel.train_gram().unwrap(), &labels, 1.0).unwrap();
        let grid = decision_grid(&model, &kernel, 100).unwrap();
        assert_eq!(grid.len(), 10_000);
        assert_eq!((grid[0].x, grid[0].y), (0.0, 0.0));
        assert_eq!((grid[99].x, grid[99].y), (TAU, 0.0));
        let mut buf = Vec::new();
        write_grid_csv(&grid, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10_001);
    }

    #[test]
    fn rejects_other_dimensions() {
        let spec = KernelSpec::with_defaults(KernelKind::Rx, 3).unwrap();
        let kernel = CombinedKernel::new(vec![spec], vec![1.0], vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        let model = train_svm(&kernel.train_gram().unwrap(), &[1, -1], 1.0).unwrap();
        assert!(matches!(decision_grid(&model, &kernel, 10), Err(Error::Dimension { .. })));
    }
}
