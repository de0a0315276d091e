use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qcmkl_core::data::{generate_dataset, prepare_dataset, Dataset, GenerationManifest, PrepareOptions};
use qcmkl_core::experiment::{
    aggregate_report, decision_grid, evaluate_combination, read_rows_jsonl, write_grid_csv,
    write_rows_csv, write_rows_jsonl, write_timings_csv, ExperimentConfig, ResultType,
};
use qcmkl_core::kernels::{prepared_gram, GramMatrix, KernelKind, KernelSpec, QaoaTopology};
use qcmkl_core::mkl::{solve_easymkl, MklProblem};
use qcmkl_core::qccnet::{initial_specs, train, QccNetConfig};
use qcmkl_core::svm::train_svm;

#[derive(Parser)]
#[command(name = "qcmkl", version, about = "Quantum-classical multiple kernel learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, scale and split one synthetic instance.
    GenData(GenData),
    /// Build the (normalised) Gram matrix of one kernel.
    Gram(GramCmd),
    /// Solve for EasyMKL weights over precomputed Grams.
    MklFit(MklFit),
    /// Train kernel parameters with QCC-net.
    Train(TrainCmd),
    /// Fit an SVM on a precomputed training Gram.
    Svm(SvmCmd),
    /// Fit and score a weighted kernel combination on a dataset.
    Evaluate(EvaluateCmd),
    /// Run the experiment grid.
    Experiment(ExperimentCmd),
    /// Medians, weight densities and difference grid from result rows.
    Aggregate(AggregateCmd),
    /// Decision values on a lattice over [0, 2π]² (d = 2 only).
    DecisionGrid(DecisionGridCmd),
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    class_sep: f64,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    train_ratio: f64,
    /// Fit the scaler on the training partition only.
    #[arg(long)]
    fit_scaler_on_train: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the generation manifest as JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Partition {
    Train,
    Test,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Topology {
    AllPairs,
    Ring,
}

impl From<Topology> for QaoaTopology {
    fn from(t: Topology) -> Self {
        match t {
            Topology::AllPairs => QaoaTopology::AllPairs,
            Topology::Ring => QaoaTopology::Ring,
        }
    }
}

/// Kernel selection shared by several subcommands.
#[derive(Args)]
struct KernelArgs {
    /// Comma-separated kernel kinds, e.g. `rx,linear`.
    #[arg(long, value_delimiter = ',')]
    kernels: Vec<KernelKind>,
    /// JSON file with explicit kernel specs; overrides `--kernels`.
    #[arg(long)]
    specs: Option<PathBuf>,
    /// Seed for random initial parameters.
    #[arg(long, default_value_t = 0)]
    param_seed: u64,
    #[arg(long, value_enum, default_value_t = Topology::AllPairs)]
    topology: Topology,
}

impl KernelArgs {
    fn resolve(&self, d: usize) -> Result<Vec<KernelSpec>> {
        let specs: Vec<KernelSpec> = match &self.specs {
            Some(path) => serde_json::from_str(&read_text(path)?)
                .with_context(|| format!("parsing kernel specs {}", path.display()))?,
            None => {
                if self.kernels.is_empty() {
                    bail!("pass --kernels or --specs");
                }
                initial_specs(&self.kernels, d, self.topology.into(), self.param_seed)?
            }
        };
        if let Some(s) = specs.iter().find(|s| s.n_features() != d) {
            bail!("{} kernel expects {} features, data has {d}", s.kind(), s.n_features());
        }
        Ok(specs)
    }
}

#[derive(Args)]
struct GramCmd {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_enum, default_value_t = Partition::Train)]
    partition: Partition,
    #[arg(long)]
    out: PathBuf,
    /// Write the binary format instead of CSV.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct MklFit {
    /// Gram matrices (CSV or binary, by extension `.bin`).
    #[arg(long, num_args = 1.., required = true)]
    grams: Vec<PathBuf>,
    /// Dataset supplying the training labels.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainCmd {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// QCC-net config JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Trained specs, weights and loss as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SvmCmd {
    #[arg(long)]
    gram: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateCmd {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// L1 weights; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentCmd {
    /// Experiment config JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the full d = 2..13 grid as the base config.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    d_range: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    result_types: Vec<ResultType>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
}

#[derive(Args)]
struct AggregateCmd {
    /// JSON-lines rows written by `experiment`.
    #[arg(long)]
    rows: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DecisionGridCmd {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(BufReader::new(file)).with_context(|| format!("reading dataset {}", path.display()))
}

fn load_gram(path: &Path) -> Result<GramMatrix> {
    let file = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let gram = if path.extension().is_some_and(|e| e == "bin") {
        GramMatrix::read_binary(file)
    } else {
        GramMatrix::read_csv(file)
    };
    gram.with_context(|| format!("reading Gram matrix {}", path.display()))
}

/// Writes pretty JSON to `out`, or to stdout.
fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn uniform_or(weights: &[f64], r: usize) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Ok(vec![1.0 / r as f64; r]);
    }
    if weights.len() != r {
        bail!("{} weights given for {r} kernels", weights.len());
    }
    Ok(weights.to_vec())
}

fn gen_data(args: GenData) -> Result<()> {
    let options = PrepareOptions {
        n_samples: args.n,
        class_sep: args.class_sep,
        clusters_per_class: args.clusters,
        train_ratio: args.train_ratio,
        fit_scaler_on_train: args.fit_scaler_on_train,
    };
    // fail early with the generator's own error for bad placement
    generate_dataset(args.d, args.n, args.class_sep, args.clusters, args.seed)?;
    let ds = prepare_dataset(args.d, &options, args.seed)?;
    let mut w = create(&args.out)?;
    ds.write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = &args.manifest {
        let manifest = GenerationManifest {
            d: args.d,
            n: args.n,
            class_sep: args.class_sep,
            clusters: args.clusters,
            seed: args.seed,
        };
        emit_json(&manifest, Some(path))?;
    }
    Ok(())
}

fn gram(args: GramCmd) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let specs = args.kernel.resolve(ds.d)?;
    if specs.len() != 1 {
        bail!("gram takes exactly one kernel, got {}", specs.len());
    }
    let points = match args.partition {
        Partition::Train => ds.train().0,
        Partition::Test => ds.test().0,
        Partition::All => ds.features.clone(),
    };
    let g = prepared_gram(&specs[0], &points)?;
    let mut w = create(&args.out)?;
    if args.binary {
        g.write_binary(&mut w)?;
    } else {
        g.write_csv(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn mkl_fit(args: MklFit) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let grams = args.grams.iter().map(|p| load_gram(p)).collect::<Result<Vec<_>>>()?;
    let (_, labels) = ds.train();
    let solution = solve_easymkl(&MklProblem::new(grams, labels, args.lambda)?)?;
    emit_json(&solution, args.out.as_deref())
}

#[derive(serde::Serialize)]
struct TrainOutput {
    specs: Vec<KernelSpec>,
    theta_star: Vec<f64>,
    gamma_l2: Vec<f64>,
    gamma_l1: Vec<f64>,
    loss: f64,
    best_iteration: usize,
    iterations: usize,
}

fn train_cmd(args: TrainCmd) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let mut config: QccNetConfig = match &args.config {
        Some(p) => serde_json::from_str(&read_text(p)?).context("parsing QCC-net config")?,
        None => QccNetConfig::default(),
    };
    if let Some(v) = args.lambda {
        config.lambda = v;
    }
    if let Some(v) = args.max_outer_iters {
        config.max_outer_iters = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    let specs = args.kernel.resolve(ds.d)?;
    let (x, y) = ds.train();
    let result = train(&specs, &x, &y, &config)?;
    if let Some(path) = &args.trace {
        let mut w = create(path)?;
        result.trace.write_json_lines(&mut w)?;
        w.flush()?;
    }
    let output = TrainOutput {
        theta_star: result.theta_star(),
        gamma_l1: result.gamma_l1(),
        gamma_l2: result.gamma_star.clone(),
        loss: result.solution.loss,
        best_iteration: result.trace.best_iteration,
        iterations: result.trace.records.len(),
        specs: result.specs,
    };
    emit_json(&output, args.out.as_deref())
}

fn svm(args: SvmCmd) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let gram = load_gram(&args.gram)?;
    let (_, labels) = ds.train();
    let model = train_svm(&gram, &labels, args.c)?;
    emit_json(&model, args.out.as_deref())
}

fn evaluate(args: EvaluateCmd) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let specs = args.kernel.resolve(ds.d)?;
    let weights = uniform_or(&args.weights, specs.len())?;
    let (train_x, train_y) = ds.train();
    let (test_x, test_y) = ds.test();
    let outcome = evaluate_combination(specs, weights, &train_x, &train_y, &test_x, &test_y, args.c)?;
    emit_json(&outcome.metrics, args.out.as_deref())
}

fn experiment(args: ExperimentCmd) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_json(&read_text(p)?).context("parsing experiment config")?,
        None if args.full => ExperimentConfig::full(),
        None => ExperimentConfig::default(),
    };
    if args.full {
        config.d_range = ExperimentConfig::full().d_range;
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    if let Some(v) = args.repetitions {
        config.repetitions = v;
    }
    if !args.d_range.is_empty() {
        config.d_range = args.d_range.clone();
    }
    if !args.result_types.is_empty() {
        config.result_types = args.result_types.clone();
    }
    if let Some(v) = args.base_seed {
        config.base_seed = v;
    }
    if let Some(v) = args.max_outer_iters {
        config.qccnet.max_outer_iters = v;
    }

    let rows = qcmkl_core::run_experiment(&config)?;
    let dir = &args.out_dir;
    let mut w = create(&dir.join("rows.jsonl"))?;
    write_rows_jsonl(&rows, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("rows.csv"))?;
    write_rows_csv(&rows, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("timings.csv"))?;
    write_timings_csv(&rows, &mut w)?;
    w.flush()?;
    emit_json(&config, Some(&dir.join("config.json")))?;

    let failed: Vec<_> = rows.iter().filter(|r| !r.is_ok()).collect();
    eprintln!("{} rows written to {}, {} failed", rows.len(), dir.display(), failed.len());
    for r in failed.iter().take(10) {
        eprintln!("  {} d={} rep={} {}: {}", r.pair, r.d, r.repetition, r.result_type, r.error.as_deref().unwrap_or(""));
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn aggregate(args: AggregateCmd) -> Result<()> {
    let file = File::open(&args.rows).with_context(|| format!("opening {}", args.rows.display()))?;
    let rows = read_rows_jsonl(BufReader::new(file))?;
    let report = aggregate_report(&rows)?;
    let dir = &args.out_dir;
    let mut w = create(&dir.join("medians.csv"))?;
    report.write_medians_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("densities.csv"))?;
    report.write_densities_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("differences.csv"))?;
    report.write_differences_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn decision_grid_cmd(args: DecisionGridCmd) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let specs = args.kernel.resolve(ds.d)?;
    let weights = uniform_or(&args.weights, specs.len())?;
    let (train_x, train_y) = ds.train();
    let (test_x, test_y) = ds.test();
    let outcome = evaluate_combination(specs, weights, &train_x, &train_y, &test_x, &test_y, args.c)?;
    let grid = decision_grid(&outcome.model, &outcome.kernel, args.resolution)?;
    let mut w = create(&args.out)?;
    write_grid_csv(&grid, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenData(a) => gen_data(a)?,
        Command::Gram(a) => gram(a)?,
        Command::MklFit(a) => mkl_fit(a)?,
        Command::Train(a) => train_cmd(a)?,
        Command::Svm(a) => svm(a)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::Experiment(a) => return experiment(a),
        Command::Aggregate(a) => aggregate(a)?,
        Command::DecisionGrid(a) => decision_grid_cmd(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
