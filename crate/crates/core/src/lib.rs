//! Quantum-classical multiple kernel learning.
//!
//! Simulated quantum embedding kernels and classical kernels are combined
//! with EasyMKL weights, optionally after training kernel parameters with
//! QCC-net, and evaluated with a precomputed-kernel SVM.
//!
//! ```
//! use qcmkl_core::data::{prepare_dataset, PrepareOptions};
//! use qcmkl_core::experiment::evaluate_combination;
//! use qcmkl_core::kernels::{KernelKind, QaoaTopology};
//! use qcmkl_core::qccnet::{initial_specs, train, QccNetConfig};
//!
//! # fn main() -> qcmkl_core::Result<()> {
//! let ds = prepare_dataset(2, &PrepareOptions::default(), 7)?;
//! let (x, y) = ds.train();
//! let (tx, ty) = ds.test();
//! let specs = initial_specs(&[KernelKind::Rbf, KernelKind::Rx], 2, QaoaTopology::AllPairs, 7)?;
//! let trained = train(&specs, &x, &y, &QccNetConfig::default())?;
//! let out = evaluate_combination(trained.specs.clone(), trained.gamma_l1(), &x, &y, &tx, &ty, 1.0)?;
//! assert!((0.0..=1.0).contains(&out.metrics.accuracy));
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod experiment;
pub mod error;
pub mod kernels;
pub mod labels;
pub mod metrics;
pub mod mkl;
pub mod qccnet;
pub mod seeds;
pub mod statevector;
pub mod svm;

pub use error::{Error, Result};
pub use kernels::{
    combine_grams, gram_matrix, kernel_eval, prepared_gram, CombinedKernel, GramMatrix, KernelKind,
    KernelSpec, QaoaTopology,
};
pub use metrics::MetricsRecord;
pub use mkl::{solve_easymkl, MklProblem, MklSolution};
pub use qccnet::{train, QccNetConfig, TrainingResult, TrainingTrace};
pub use statevector::Statevector;
pub use svm::{train_svm, SvmModel};
pub use data::Dataset;
pub use experiment::{run_experiment, ExperimentConfig, ResultRow, ResultType};
