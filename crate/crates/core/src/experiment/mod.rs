//! The experiment grid: every kernel pair, feature count and repetition, under
//! each of the three result types.
//!
//! | type | θ                  | γ                 |
//! |------|--------------------|-------------------|
//! | I    | default / random   | uniform           |
//! | II   | default / random   | EasyMKL optimum   |
//! | III  | QCC-net trained    | EasyMKL optimum   |
//!
//! Every instance draws its dataset from `hash(base_seed, d, repetition)`, so
//! all pairs at the same `(d, repetition)` see the same data, and its random
//! kernel parameters from `hash(base_seed, pair, d, repetition)`.

mod aggregate;
mod grid;

pub use aggregate::{aggregate_report, median, AggregateReport, DensityRow, DifferenceRow, MedianRow};
pub use grid::{decision_grid, write_grid_csv, GridPoint};

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{prepare_dataset, PrepareOptions};
use crate::error::{Error, Result};
use crate::kernels::{CombinedKernel, KernelKind, KernelSpec, QaoaTopology};
use crate::metrics::MetricsRecord;
use crate::qccnet::{initial_specs, train, QccNetConfig};
use crate::seeds::derive_seed;
use crate::svm::{decision_values, sign, train_svm, SvmModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResultType {
    I,
    II,
    III,
}

impl ResultType {
    pub const ALL: [ResultType; 3] = [ResultType::I, ResultType::II, ResultType::III];

    pub fn as_str(self) -> &'static str {
        match self {
            ResultType::I => "I",
            ResultType::II => "II",
            ResultType::III => "III",
        }
    }
}

impl fmt::Display for ResultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResultType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ResultType::I),
            "II" | "2" => Ok(ResultType::II),
            "III" | "3" => Ok(ResultType::III),
            _ => Err(Error::Argument(format!("unknown result type '{s}'"))),
        }
    }
}

/// The 21 unordered pairs of base kernels, self-pairs included.
pub fn all_pairs() -> Vec<Vec<KernelKind>> {
    let kinds = KernelKind::ALL;
    let mut out = Vec::new();
    for i in 0..kinds.len() {
        for j in i..kinds.len() {
            out.push(vec![kinds[i], kinds[j]]);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Kernel combinations; usually pairs, a single kind runs the lone kernel.
    pub kernel_pairs: Vec<Vec<KernelKind>>,
    pub d_range: Vec<usize>,
    pub repetitions: usize,
    pub result_types: Vec<ResultType>,
    pub lambda: f64,
    pub svm_c: f64,
    pub qccnet: QccNetConfig,
    pub data: PrepareOptions,
    pub topology: QaoaTopology,
    pub base_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel_pairs: all_pairs(),
            d_range: (2..=6).collect(),
            repetitions: 10,
            result_types: ResultType::ALL.to_vec(),
            lambda: 0.2,
            svm_c: 1.0,
            qccnet: QccNetConfig::default(),
            data: PrepareOptions::default(),
            topology: QaoaTopology::AllPairs,
            base_seed: 0,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// The full grid over `d = 2, …, 13`.
    pub fn full() -> Self {
        Self { d_range: (2..=13).collect(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Argument("repetitions must be at least 1".into()));
        }
        if self.kernel_pairs.is_empty() || self.kernel_pairs.iter().any(Vec::is_empty) {
            return Err(Error::Argument("every kernel combination needs at least one kernel".into()));
        }
        if self.d_range.is_empty() || self.d_range.contains(&0) {
            return Err(Error::Argument("d_range must list positive feature counts".into()));
        }
        if self.result_types.is_empty() {
            return Err(Error::Argument("no result types requested".into()));
        }
        if !(self.svm_c > 0.0) {
            return Err(Error::Argument(format!("svm C must be positive, got {}", self.svm_c)));
        }
        QccNetConfig { lambda: self.lambda, ..self.qccnet }.validate()
    }

    /// Rows the grid produces.
    pub fn row_count(&self) -> usize {
        self.kernel_pairs.len() * self.d_range.len() * self.repetitions * self.result_types.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn pair_label(kinds: &[KernelKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("-")
}

pub fn data_seed(base_seed: u64, d: usize, repetition: usize) -> u64 {
    derive_seed(&[base_seed, d as u64, repetition as u64])
}

pub fn parameter_seed(base_seed: u64, kinds: &[KernelKind], d: usize, repetition: usize) -> u64 {
    // the kind list is folded in first, tagged by its length
    let mut parts = vec![base_seed, kinds.len() as u64];
    parts.extend(kinds.iter().map(|&k| k as u64));
    parts.extend([d as u64, repetition as u64]);
    derive_seed(&parts)
}

/// One (kernels, d, repetition, result type) outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub pair: String,
    pub kernels: Vec<KernelKind>,
    pub d: usize,
    pub repetition: usize,
    pub seed: u64,
    pub result_type: ResultType,
    pub gamma_l1: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub loss: Option<f64>,
    pub metrics: Option<MetricsRecord>,
    pub error: Option<String>,
    /// Seconds spent on this row; kept out of the JSON output so that reruns
    /// are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

impl ResultRow {
    pub const CSV_HEADER: &'static str = "pair,kernel_a,kernel_b,d,repetition,seed,result_type,\
gamma_a,gamma_b,accuracy,aucroc,margin,spectral_ratio,spectral_ratio_raw,loss,error";

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn csv_line(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let kind = |i: usize| self.kernels.get(i).map(|k| k.name().to_string()).unwrap_or_default();
        let m = self.metrics.as_ref();
        let error = self.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        [
            self.pair.clone(),
            kind(0),
            kind(1),
            self.d.to_string(),
            self.repetition.to_string(),
            self.seed.to_string(),
            self.result_type.to_string(),
            f(self.gamma_l1.first().copied()),
            f(self.gamma_l1.get(1).copied()),
            f(m.map(|m| m.accuracy)),
            f(m.map(|m| m.aucroc)),
            f(m.map(|m| m.margin)),
            f(m.map(|m| m.spectral_ratio)),
            f(m.map(|m| m.spectral_ratio_raw)),
            f(self.loss),
            error,
        ]
        .join(",")
    }
}

/// Everything needed to fit and score one combined kernel.
#[derive(Clone, Debug)]
pub struct InstanceOutcome {
    pub kernel: CombinedKernel,
    pub loss: Option<f64>,
    pub metrics: MetricsRecord,
    pub predictions: Vec<i8>,
    pub scores: Vec<f64>,
    pub model: SvmModel,
}

/// Fits an SVM on the combined training Gram and scores the test partition.
pub fn evaluate_combination(
    specs: Vec<KernelSpec>,
    gamma_l1: Vec<f64>,
    train_x: &[Vec<f64>],
    train_y: &[i8],
    test_x: &[Vec<f64>],
    test_y: &[i8],
    svm_c: f64,
) -> Result<InstanceOutcome> {
    let kernel = CombinedKernel::new(specs, gamma_l1, train_x.to_vec())?;
    let train_gram = kernel.train_gram()?;
    let model = train_svm(&train_gram, train_y, svm_c)?;
    let scores = decision_values(&model, &kernel.cross_gram(test_x)?)?;
    let predictions: Vec<i8> = scores.iter().copied().map(sign).collect();
    let metrics = MetricsRecord::evaluate(&predictions, &scores, test_y, &train_gram, train_y)?;
    Ok(InstanceOutcome { kernel, loss: None, metrics, predictions, scores, model })
}

/// Runs one instance under one result type.
pub fn run_instance(
    kinds: &[KernelKind],
    d: usize,
    repetition: usize,
    result_type: ResultType,
    config: &ExperimentConfig,
) -> Result<InstanceOutcome> {
    let seed = data_seed(config.base_seed, d, repetition);
    let ds = prepare_dataset(d, &config.data, seed)?;
    let (train_x, train_y) = ds.train();
    let (test_x, test_y) = ds.test();
    let specs = initial_specs(
        kinds,
        d,
        config.topology,
        parameter_seed(config.base_seed, kinds, d, repetition),
    )?;
    let qcc = QccNetConfig { lambda: config.lambda, ..config.qccnet };
    let (specs, gamma, loss) = match result_type {
        ResultType::I => {
            let r = specs.len();
            (specs, vec![1.0 / r as f64; r], None)
        }
        ResultType::II | ResultType::III => {
            let qcc = if result_type == ResultType::II { QccNetConfig { max_outer_iters: 0, ..qcc } } else { qcc };
            let trained = train(&specs, &train_x, &train_y, &qcc)?;
            let gamma = trained.gamma_l1();
            (trained.specs, gamma, Some(trained.solution.loss))
        }
    };
    let outcome = evaluate_combination(specs, gamma, &train_x, &train_y, &test_x, &test_y, config.svm_c)?;
    Ok(InstanceOutcome { loss, ..outcome })
}

fn run_row(
    kinds: &[KernelKind],
    d: usize,
    repetition: usize,
    result_type: ResultType,
    config: &ExperimentConfig,
) -> ResultRow {
    let start = std::time::Instant::now();
    let outcome = run_instance(kinds, d, repetition, result_type, config);
    let mut row = ResultRow {
        pair: pair_label(kinds),
        kernels: kinds.to_vec(),
        d,
        repetition,
        seed: data_seed(config.base_seed, d, repetition),
        result_type,
        gamma_l1: Vec::new(),
        theta: Vec::new(),
        loss: None,
        metrics: None,
        error: None,
        wall_time: 0.0,
    };
    match outcome {
        Ok(o) => {
            row.gamma_l1 = o.kernel.weights().to_vec();
            row.theta = o.kernel.specs().iter().map(|s| s.theta().to_vec()).collect();
            row.loss = o.loss;
            row.metrics = Some(o.metrics);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row.wall_time = start.elapsed().as_secs_f64();
    row
}

/// Runs the whole grid. Rows come back in canonical
/// (pair, d, repetition, result type) order whatever the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut jobs = Vec::with_capacity(config.row_count());
    for kinds in &config.kernel_pairs {
        for &d in &config.d_range {
            for rep in 0..config.repetitions {
                for &t in &config.result_types {
                    jobs.push((kinds.as_slice(), d, rep, t));
                }
            }
        }
    }
    let run = || -> Vec<ResultRow> {
        jobs.par_iter().map(|&(kinds, d, rep, t)| run_row(kinds, d, rep, t, config)).collect()
    };
    match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

pub fn write_rows_jsonl<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_rows_jsonl<R: BufRead>(input: R) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(rows)
}

pub fn write_rows_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{}", ResultRow::CSV_HEADER)?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

/// Per-row timings, written apart from the deterministic outputs.
pub fn write_timings_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "pair,d,repetition,result_type,wall_time")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{:.6}", r.pair, r.d, r.repetition, r.result_type, r.wall_time)?;
    }
    Ok(())
}
