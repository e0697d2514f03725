//! `mvps` command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification, 2 argument or I/O errors,
//! 3 model loading or validation errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvps::harness::{self, ExperimentReport, SuiteSize};
use mvps::kernel::{classify, classify_reporting_leaks_with, ClassifyOptions, Witness};
use mvps::model_file::ModelFile;
use mvps::oracle::{exchangeability_depth_check_with_budget, DEFAULT_BUDGET, DEFAULT_DEPTH};
use mvps::sampler::{sample_path, stick_breaking, RngStream, DEFAULT_EPS};
use mvps::{Error, Rational, Scalar, Tolerance, UrnModel};
use serde_json::Value;

/// Seed used when `--seed` is omitted.
const DEFAULT_SEED: u64 = 20_240_607;
/// Environment variable capping the number of worker threads.
const THREADS_VAR: &str = "MVPS_THREADS";

#[derive(Parser)]
#[command(
    name = "mvps",
    version,
    about = "Measure-valued Polya urn sequences: classify, simulate, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a model as IID, Exchangeable or NotExchangeable.
    Classify {
        model: PathBuf,
        /// Use floating point even when the file is exact.
        #[arg(long)]
        float: bool,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate one path and print it as CSV.
    Simulate {
        model: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Draw directing random measures by stick-breaking, one JSON line each.
    Prior {
        model: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        draws: u64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check permutation invariance of the joint law by exact enumeration.
    Oracle {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPTH, value_parser = parse_positive)]
        depth: usize,
        /// Maximum number of sequences to enumerate.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        #[arg(long)]
        float: bool,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the Monte Carlo experiments that apply to a model.
    Verify {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::Quick)]
        suite: Suite,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the hybrid [0, 1] example with atoms below s.
    DemoSingular {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 5_000, value_parser = parse_positive)]
        length: usize,
        #[arg(long, default_value_t = 1_000, value_parser = parse_positive)]
        runs: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Quick,
    Full,
}

#[derive(Args)]
struct SeedArg {
    /// Integer seed, or `random` to draw one from the environment.
    #[arg(long, default_value_t = SeedChoice::Fixed(DEFAULT_SEED), value_parser = parse_seed)]
    seed: SeedChoice,
}

#[derive(Clone, Copy)]
enum SeedChoice {
    Fixed(u64),
    Random,
}

impl std::fmt::Display for SeedChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedChoice::Fixed(s) => write!(f, "{s}"),
            SeedChoice::Random => f.write_str("random"),
        }
    }
}

impl SeedArg {
    fn resolve(&self) -> u64 {
        match self.seed {
            SeedChoice::Fixed(s) => s,
            SeedChoice::Random => {
                use std::hash::{BuildHasher, RandomState};
                let seed = RandomState::new().hash_one(std::time::SystemTime::now());
                eprintln!("using seed {seed}");
                seed
            }
        }
    }
}

#[derive(Args)]
struct TolArgs {
    /// Relative tolerance for floating-point comparisons.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance for floating-point comparisons.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Total-variation threshold for grouping identical rows.
    #[arg(long)]
    row_tol: Option<f64>,
}

impl TolArgs {
    fn options(&self) -> Result<ClassifyOptions, CliError> {
        let mut opts = ClassifyOptions::default();
        for v in [self.rel_tol, self.abs_tol, self.row_tol]
            .into_iter()
            .flatten()
        {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!(
                    "tolerance {v} must be finite and non-negative"
                )));
            }
        }
        opts.tolerance.rel = self.rel_tol.unwrap_or(opts.tolerance.rel);
        opts.tolerance.abs = self.abs_tol.unwrap_or(opts.tolerance.abs);
        if let Some(r) = self.row_tol {
            opts.row_tolerance = Tolerance { rel: 0.0, abs: r };
        }
        Ok(opts)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Also write the output to `<subcommand>-<seed>.<ext>` in this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pretty: bool,
    /// Keep wall-clock timings in reports (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_seed(s: &str) -> Result<SeedChoice, String> {
    if s.eq_ignore_ascii_case("random") {
        return Ok(SeedChoice::Random);
    }
    s.parse()
        .map(SeedChoice::Fixed)
        .map_err(|_| format!("expected an integer or `random`, got `{s}`"))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Model(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Errors caused by command-line parameters rather than by the model file.
fn usage_if_parameter(e: CliError) -> CliError {
    match e {
        CliError::Model(
            err @ (Error::InvalidS(_)
            | Error::InvalidTheta(_)
            | Error::NonPositiveEps(_)
            | Error::BudgetExceeded { .. }
            | Error::InvalidParameter(_)
            | Error::ZeroLength
            | Error::ZeroDepth),
        ) => CliError::Usage(err.to_string()),
        other => other,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Model(e) => write!(f, "model error: {e}"),
        }
    }
}

/// Output of a subcommand: text for stdout plus the extension used in `--out-dir`.
struct Output {
    name: &'static str,
    seed: u64,
    ext: &'static str,
    text: String,
    passed: bool,
}

impl Output {
    fn json(name: &'static str, seed: u64, value: &Value, out: &OutArgs) -> Self {
        let mut value = value.clone();
        if !out.timings {
            strip_timings(&mut value);
        }
        let mut text = if out.pretty {
            serde_json::to_string_pretty(&value)
        } else {
            serde_json::to_string(&value)
        }
        .expect("json serializes");
        text.push('\n');
        Self {
            name,
            seed,
            ext: "json",
            text,
            passed: true,
        }
    }
}

fn strip_timings(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("runtime_ms");
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn load(path: &Path) -> Result<ModelFile, CliError> {
    Ok(ModelFile::from_path(path)?)
}

fn load_f64(path: &Path) -> Result<UrnModel<f64>, CliError> {
    Ok(load(path)?.model()?)
}

fn classify_output<S: Scalar>(
    model: &UrnModel<S>,
    opts: &ClassifyOptions,
) -> Result<Value, CliError> {
    let verdict = classify_reporting_leaks_with(model, opts)?;
    if let Some(Witness::MassLeak { from, to, .. }) = &verdict.witness {
        let label = |i: usize| model.space().label(i).unwrap_or("?").to_owned();
        eprintln!(
            "warning: color {} reinforces color {}, which has no base-measure mass",
            label(*from),
            label(*to)
        );
    }
    Ok(verdict.to_json())
}

fn oracle_output<S: Scalar>(
    model: &UrnModel<S>,
    depth: usize,
    budget: u128,
    tol: &Tolerance,
) -> Result<Value, CliError> {
    let check = exchangeability_depth_check_with_budget(model, depth, tol, budget)?;
    Ok(check.to_json())
}

fn simulate(path: &Path, n: u64, seed: u64) -> Result<String, CliError> {
    let model = load_f64(path)?;
    let n = usize::try_from(n).map_err(|_| CliError::Usage("n is too large".into()))?;
    let sample = sample_path(&model, n, &mut RngStream::new(seed, 0))?;
    let labels = model.space().labels();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_owned(), "color".to_owned()];
    header.extend(labels.iter().map(|l| format!("p_{l}")));
    let io_err = |e: csv::Error| CliError::Io(e.to_string());
    writer.write_record(&header).map_err(io_err)?;
    for (t, (color, predictive)) in sample
        .colors
        .iter()
        .zip(&sample.predictive_trace)
        .enumerate()
    {
        let mut record = vec![(t + 1).to_string(), labels[*color].clone()];
        record.extend(predictive.iter().map(f64::to_string));
        writer.write_record(&record).map_err(io_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn prior(path: &Path, draws: u64, eps: f64, seed: u64) -> Result<String, CliError> {
    let model = load_f64(path)?;
    let verdict = classify(&model)?;
    let (Some(theta_over_m), Some(normalized), Some(partition)) = (
        verdict.theta_over_m(),
        verdict.normalized.as_ref(),
        verdict.partition.as_ref(),
    ) else {
        return Err(CliError::Model(Error::MissingPartition));
    };
    let mut text = String::new();
    for j in 0..draws {
        let draw = stick_breaking(theta_over_m, normalized, eps, &mut RngStream::new(seed, j))?;
        let mut value = serde_json::to_value(&draw).expect("draw serializes");
        value["draw"] = j.into();
        value["block_masses"] = serde_json::json!(draw.block_masses(partition));
        text.push_str(&serde_json::to_string(&value).expect("json serializes"));
        text.push('\n');
    }
    Ok(text)
}

fn reports_output(
    name: &'static str,
    seed: u64,
    reports: &[ExperimentReport],
    out: &OutArgs,
) -> Output {
    let value = Value::Array(reports.iter().map(ExperimentReport::to_json).collect());
    let mut output = Output::json(name, seed, &value, out);
    output.passed = reports.iter().all(ExperimentReport::passed);
    output
}

fn write_out_dir(
    dir: &Path,
    output: &Output,
    extra: Option<(&str, &[u8])>,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}-{}", output.name, output.seed);
    fs::write(dir.join(format!("{stem}.{}", output.ext)), &output.text)?;
    if let Some((ext, bytes)) = extra {
        fs::write(dir.join(format!("{stem}.{ext}")), bytes)?;
    }
    Ok(())
}

fn execute(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Classify {
            model,
            float,
            tol,
            out,
        } => {
            let opts = tol.options()?;
            let file = load(&model)?;
            let value = if file.is_exact() && !float {
                classify_output(&file.model::<Rational>()?, &opts)?
            } else {
                classify_output(&file.model::<f64>()?, &opts)?
            };
            finish(
                Output::json("classify", DEFAULT_SEED, &value, &out),
                &out,
                None,
            )
        }
        Command::Simulate {
            model,
            n,
            seed,
            out,
        } => {
            let seed = seed.resolve();
            let text = simulate(&model, n, seed)?;
            let output = Output {
                name: "simulate",
                seed,
                ext: "csv",
                text,
                passed: true,
            };
            finish(output, &out, None)
        }
        Command::Prior {
            model,
            draws,
            eps,
            seed,
            out,
        } => {
            let seed = seed.resolve();
            if !(eps > 0.0 && eps < 1.0) {
                return Err(CliError::Usage(format!("--eps {eps} must lie in (0, 1)")));
            }
            let text = prior(&model, draws, eps, seed)?;
            let output = Output {
                name: "prior",
                seed,
                ext: "jsonl",
                text,
                passed: true,
            };
            finish(output, &out, None)
        }
        Command::Oracle {
            model,
            depth,
            budget,
            float,
            tol,
            out,
        } => {
            let opts = tol.options()?;
            let file = load(&model)?;
            let value = if file.is_exact() && !float {
                oracle_output(&file.model::<Rational>()?, depth, budget, &opts.tolerance)
            } else {
                oracle_output(&file.model::<f64>()?, depth, budget, &opts.tolerance)
            }
            .map_err(usage_if_parameter)?;
            finish(
                Output::json("oracle", DEFAULT_SEED, &value, &out),
                &out,
                None,
            )
        }
        Command::Verify {
            model,
            suite,
            seed,
            out,
        } => {
            let seed = seed.resolve();
            let model = load_f64(&model)?;
            let size = match suite {
                Suite::Quick => SuiteSize::QUICK,
                Suite::Full => SuiteSize::FULL,
            };
            let reports = harness::verify_suite(&model, size, seed)?;
            let mut csv = Vec::new();
            harness::write_csv(&reports, &mut csv)?;
            finish(
                reports_output("verify", seed, &reports, &out),
                &out,
                Some(("csv", &csv)),
            )
        }
        Command::DemoSingular {
            theta,
            s,
            length,
            runs,
            seed,
            out,
        } => {
            let seed = seed.resolve();
            let report = harness::singular_structure_experiment(theta, s, length, runs, seed)
                .map_err(|e| usage_if_parameter(e.into()))?;
            finish(
                reports_output("demo-singular", seed, &[report], &out),
                &out,
                None,
            )
        }
    }
}

fn finish(output: Output, out: &OutArgs, extra: Option<(&str, &[u8])>) -> Result<Output, CliError> {
    if let Some(dir) = &out.out_dir {
        write_out_dir(dir, &output, extra)?;
    }
    Ok(output)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads = parse_positive(value.trim())
        .map_err(|e| CliError::Usage(format!("{THREADS_VAR}={value}: {e}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(output) => {
            let mut stdout = io::stdout().lock();
            if let Err(e) = stdout
                .write_all(output.text.as_bytes())
                .and_then(|()| stdout.flush())
            {
                if e.kind() != io::ErrorKind::BrokenPipe {
                    eprintln!("i/o error: {e}");
                    return ExitCode::from(2);
                }
            }
            if output.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("mvps: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
