//! Command implementations for the `plurality` binary.
//!
//! Every command resolves its inputs fully before computing, writes its
//! output with a `# key=value` header describing the resolved configuration,
//! and produces identical bytes for identical configurations regardless of
//! the thread count.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use plurality_core::curves::{
    analytic_curve, clean_samples_from_distributions, clean_samples_from_knn, concentrated_curve,
    empirical_curve, learnable_curve,
};
use plurality_core::io;
use plurality_core::knn::preferred_k_batch;
use plurality_core::noise::{
    build_matrix, cyclic_shift, inject_concentrated_noise, inject_random_noise,
};
use plurality_core::numeric::format_sig12;
use plurality_core::oracle::validate_against_oracle;
use plurality_core::plurality::plurality_accuracy;
use plurality_core::{CorruptionMatrix, FeatureDataset, NoiseRegime, NoiseSpec};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const THREADS_ENV: &str = "PLURALITY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "plurality", version, about = "K-NN accuracy under label noise")]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic accuracy-versus-noise curve.
    Analytic(AnalyticArgs),
    /// Empirical K-NN accuracy under injected noise.
    KnnEval(KnnEvalArgs),
    /// Inject label noise into a label file.
    Inject(InjectArgs),
    /// Check the analytic path against exhaustive enumeration.
    Validate(ValidateArgs),
    /// Preferred K per test sample by chi-square distance to softmax output.
    SoftmaxCompare(SoftmaxArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Uniform,
    Flip,
    Matrix,
    Concentrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CleanSource {
    PointMass,
    KnnHistogram,
    SoftmaxFile,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NoiseArgs {
    #[arg(long, value_enum)]
    pub noise: NoiseKind,
    /// Corruption matrix CSV (matrix noise).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Flip targets, e.g. `1,2,0`; defaults to the cyclic shift.
    #[arg(long, value_delimiter = ',')]
    pub flip_map: Option<Vec<usize>>,
    /// Allow labels that flip to themselves.
    #[arg(long)]
    pub allow_fixed_points: bool,
    /// Alternative label per class for concentrated noise; defaults to the
    /// cyclic shift.
    #[arg(long, value_delimiter = ',')]
    pub alt_map: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GammaArgs {
    /// Explicit noise levels, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "gamma_range")]
    pub gamma: Option<Vec<f64>>,
    /// `start:stop:step`, inclusive of stop.
    #[arg(long)]
    pub gamma_range: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticArgs {
    /// Number of labels; inferred from the data when omitted.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub gamma: GammaArgs,
    #[arg(long, value_enum, default_value = "point-mass")]
    pub clean: CleanSource,
    #[command(flatten)]
    pub data: DataArgs,
    /// Softmax CSV, one row per test sample (`--clean softmax-file`).
    #[arg(long)]
    pub softmax: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KnnEvalArgs {
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub gamma: GammaArgs,
    /// Clusters per class, comma separated (concentrated noise).
    #[arg(long, value_delimiter = ',')]
    pub clusters: Option<Vec<usize>>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Base seed, or `auto`.
    #[arg(long)]
    pub seed: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InjectArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Feature file (concentrated noise).
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub l: Option<usize>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Seed, or `auto`.
    #[arg(long)]
    pub seed: String,
    /// Noisy label file, written in the input's format.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// JSON injection report.
    #[arg(long)]
    #[serde(skip)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 8)]
    pub max_k: usize,
    #[arg(long, default_value_t = 4)]
    pub max_l: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Perturbs the analytic path; the run must then fail.
    #[arg(long, hide = true)]
    pub corrupt_analytic: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SoftmaxArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub softmax: PathBuf,
    #[arg(long)]
    pub l: Option<usize>,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "10:300:10")]
    pub k_range: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Outcome of a successful command run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

/// Input or usage problem; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Runs `cli` on a pool of `cli.threads` workers.
pub fn run(cli: Cli) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("building thread pool")?;
    pool.install(|| match cli.command {
        Command::Analytic(a) => cmd_analytic(&a),
        Command::KnnEval(a) => cmd_knn_eval(&a),
        Command::Inject(a) => cmd_inject(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::SoftmaxCompare(a) => cmd_softmax_compare(&a),
    })
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

/// Wraps library errors from input handling as usage errors.
fn input<T>(r: plurality_core::Result<T>) -> Result<T> {
    r.map_err(|e| usage(e.to_string()))
}

pub fn parse_seed(seed: &str) -> Result<u64> {
    if seed == "auto" {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        return Ok(plurality_core::seed::splitmix64(nanos));
    }
    seed.parse()
        .map_err(|_| usage(format!("--seed must be an unsigned integer or `auto`, got {seed:?}")))
}

fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Inclusive `start:stop:step` range.
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        bail!(usage(format!("range {text:?} is not start:stop:step")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("bad number {s:?} in range {text:?}")))
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(usage(format!("range {text:?} is empty or has a non-positive step")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| round_grid(start + i as f64 * step)).collect())
}

fn gamma_grid(g: &GammaArgs) -> Result<Vec<f64>> {
    match (&g.gamma, &g.gamma_range) {
        (Some(list), None) => Ok(list.clone()),
        (None, Some(range)) => parse_range(range),
        _ => Err(usage("exactly one of --gamma or --gamma-range is required")),
    }
}

fn parse_k_range(text: &str) -> Result<Vec<usize>> {
    if text.contains(':') {
        let values = parse_range(text)?;
        return Ok(values.iter().map(|v| v.round() as usize).collect());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("bad K value {s:?}")))
        })
        .collect()
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| usage(format!("{flag} is required for this configuration")))
}

fn load(features: &Path, labels: &Path, l: Option<usize>) -> Result<FeatureDataset> {
    input(io::load_dataset(features, labels, l))
}

/// Train and test sets; both share the larger inferred label count.
fn load_pair(data: &DataArgs, l: Option<usize>) -> Result<(FeatureDataset, FeatureDataset)> {
    let train = load(require(&data.train, "--train")?, require(&data.train_labels, "--train-labels")?, l)?;
    let test = load(require(&data.test, "--test")?, require(&data.test_labels, "--test-labels")?, l)?;
    if l.is_some() || train.num_labels() == test.num_labels() {
        return Ok((train, test));
    }
    let l = train.num_labels().max(test.num_labels());
    Ok((
        input(FeatureDataset::new(train.features().to_vec(), train.dim(), train.labels().to_vec(), l))?,
        input(FeatureDataset::new(test.features().to_vec(), test.dim(), test.labels().to_vec(), l))?,
    ))
}

fn regime(noise: &NoiseArgs, l: usize, clusters: Option<usize>) -> Result<NoiseRegime> {
    Ok(match noise.noise {
        NoiseKind::Uniform => NoiseRegime::Uniform,
        NoiseKind::Flip => NoiseRegime::Flip {
            flip_map: noise.flip_map.clone().unwrap_or_else(|| cyclic_shift(l)),
            allow_fixed_points: noise.allow_fixed_points,
        },
        NoiseKind::Matrix => NoiseRegime::Matrix {
            matrix: input(io::read_matrix_csv(require(&noise.matrix, "--matrix")?))?,
        },
        NoiseKind::Concentrated => NoiseRegime::Concentrated {
            clusters_per_class: clusters
                .ok_or_else(|| usage("--clusters is required for concentrated noise"))?,
            alternative_label_map: noise.alt_map.clone().unwrap_or_else(|| cyclic_shift(l)),
        },
    })
}

fn matrix_for(noise: &NoiseArgs, l: usize) -> Result<CorruptionMatrix> {
    if noise.noise == NoiseKind::Concentrated {
        return Err(usage("concentrated noise has no corruption matrix; use knn-eval"));
    }
    let r = regime(noise, l, None)?;
    // validates flip maps and matrix size against L
    input(NoiseSpec::new(r.clone(), l, 0.0, 0))?;
    input(build_matrix(&r, l))
}

fn header(command: &str, config: &impl Serialize, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut h = vec![
        ("command".to_string(), command.to_string()),
        (
            "config".to_string(),
            serde_json::to_string(config).expect("config serializes"),
        ),
    ];
    h.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    h
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, text).map_err(Into::into),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_analytic(a: &AnalyticArgs) -> Result<Outcome> {
    let gammas = gamma_grid(&a.gamma)?;
    let curve = match a.clean {
        CleanSource::PointMass => {
            let l = a.l.ok_or_else(|| usage("--l is required with --clean point-mass"))?;
            let matrix = matrix_for(&a.noise, l)?;
            input(learnable_curve(l, a.k, &matrix, &gammas))?
        }
        CleanSource::KnnHistogram => {
            let (train, test) = load_pair(&a.data, a.l)?;
            let matrix = matrix_for(&a.noise, train.num_labels())?;
            let samples = input(clean_samples_from_knn(&train, &test, a.k))?;
            input(analytic_curve(&samples, a.k, &matrix, &gammas))?
        }
        CleanSource::SoftmaxFile => {
            let dists = input(io::read_softmax_csv(require(&a.softmax, "--softmax")?))?;
            let (labels, _) = input(io::read_labels(require(&a.data.test_labels, "--test-labels")?))?;
            let l = a.l.or(dists.first().map(|d| d.len())).unwrap_or(1);
            let matrix = matrix_for(&a.noise, l)?;
            let samples = input(clean_samples_from_distributions(dists, &labels))?;
            input(analytic_curve(&samples, a.k, &matrix, &gammas))?
        }
    };
    emit(&a.out, &io::curve_csv(&curve, &header("analytic", a, &[])))?;
    Ok(Outcome::Success)
}

pub fn cmd_knn_eval(a: &KnnEvalArgs) -> Result<Outcome> {
    let seed = parse_seed(&a.seed)?;
    let (train, test) = load_pair(&a.data, a.l)?;
    if a.k == 0 || a.k > train.len() {
        return Err(usage(format!("--k {} with {} training samples", a.k, train.len())));
    }
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let hdr = header("knn-eval", a, &[("seed", seed.to_string())]);
    let l = train.num_labels();
    if a.noise.noise == NoiseKind::Concentrated {
        let clusters = a
            .clusters
            .as_ref()
            .ok_or_else(|| usage("--clusters is required for concentrated noise"))?;
        let alt = a.noise.alt_map.clone().unwrap_or_else(|| cyclic_shift(l));
        let result = input(concentrated_curve(&train, &test, a.k, clusters, &alt, seed))?;
        let mut text = io::header_lines(&hdr);
        text.push_str("gamma,accuracy,predicted\n");
        for (e, p) in result.empirical.points().iter().zip(result.predicted.points()) {
            text.push_str(&format!(
                "{},{},{}\n",
                format_sig12(e.gamma),
                format_sig12(e.accuracy),
                format_sig12(p.accuracy)
            ));
        }
        emit(&a.out, &text)?;
        return Ok(Outcome::Success);
    }
    let gammas = gamma_grid(&a.gamma)?;
    let spec = input(NoiseSpec::new(regime(&a.noise, l, None)?, l, 0.0, seed))?;
    let curve = input(empirical_curve(&train, &test, a.k, &spec, &gammas, a.repeats, seed))?;
    emit(&a.out, &io::curve_csv(&curve, &hdr))?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct InjectOutput<'a> {
    command: &'static str,
    config: &'a InjectArgs,
    seed: u64,
    num_labels: usize,
    #[serde(flatten)]
    report: plurality_core::InjectionReport,
}

pub fn cmd_inject(a: &InjectArgs) -> Result<Outcome> {
    let seed = parse_seed(&a.seed)?;
    let (labels, format) = input(io::read_labels(&a.labels))?;
    let (noisy, report, l) = if a.noise.noise == NoiseKind::Concentrated {
        let features = require(&a.features, "--features")?;
        let data = load(features, &a.labels, a.l)?;
        let l = data.num_labels();
        let spec = input(NoiseSpec::new(regime(&a.noise, l, a.clusters)?, l, 0.0, seed))?;
        let (noisy, report) = input(inject_concentrated_noise(&data, &spec))?;
        (noisy, report, l)
    } else {
        let l = a
            .l
            .unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
        let spec = input(NoiseSpec::new(regime(&a.noise, l, None)?, l, a.gamma, seed))?;
        let (noisy, report) = input(inject_random_noise(&labels, &spec))?;
        (noisy, report, l)
    };
    io::write_bytes(&a.out, &io::encode_labels(&noisy, format))?;
    let out = InjectOutput {
        command: "inject",
        config: a,
        seed,
        num_labels: l,
        report,
    };
    let mut json = serde_json::to_string_pretty(&out)?;
    json.push('\n');
    io::write_text(&a.report, &json)?;
    Ok(Outcome::Success)
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<Outcome> {
    let corrupt = a.corrupt_analytic;
    let report = input(validate_against_oracle(
        a.max_k,
        a.max_l,
        a.trials,
        a.seed,
        a.tolerance,
        |spec, q| {
            let v = plurality_accuracy(spec, q)?;
            Ok(if corrupt { v + 1e-6 } else { v })
        },
    ))?;
    if a.trials == 0 {
        eprintln!("warning: --trials 0 checks nothing");
    }
    let completeness_ok = report.max_completeness_error <= 1e-9;
    let passed = report.passed() && completeness_ok;
    let mut text = io::header_lines(&header("validate", a, &[]));
    text.push_str(&format!("instances={}\n", report.instances));
    text.push_str(&format!("max_abs_deviation={:e}\n", report.max_deviation));
    text.push_str(&format!(
        "max_completeness_error={:e}\n",
        report.max_completeness_error
    ));
    for f in report.failures.iter().take(20) {
        text.push_str(&format!(
            "FAIL K={} L={} correct={} q={:?} analytic={} enumerated={}\n",
            f.k, f.num_labels, f.correct_label, f.q, f.analytic, f.enumerated
        ));
    }
    text.push_str(if passed { "result=pass\n" } else { "result=fail\n" });
    emit(&a.out, &text)?;
    if a.out.is_some() {
        print!("{}", text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n"));
        println!();
    }
    Ok(if passed {
        Outcome::Success
    } else {
        Outcome::ValidationFailed
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn cmd_softmax_compare(a: &SoftmaxArgs) -> Result<Outcome> {
    let ks = parse_k_range(&a.k_range)?;
    let (train, test) = load_pair(&a.data, a.l)?;
    let softmax = input(io::read_softmax_csv(&a.softmax))?;
    if let Some(&max) = ks.iter().max() {
        if max > train.len() {
            return Err(usage(format!("K={max} exceeds {} training samples", train.len())));
        }
    }
    let results = input(preferred_k_batch(&softmax, &train, &test, &ks))?;
    let distances: Vec<f64> = results.iter().map(|r| r.1).collect();
    let med = median(&distances);
    let mut text = io::header_lines(&header("softmax-compare", a, &[]));
    text.push_str("sample,preferred_k,chi_square,median_chi_square\n");
    for (s, (k, d)) in results.iter().enumerate() {
        text.push_str(&format!(
            "{s},{k},{},{}\n",
            format_sig12(*d),
            format_sig12(med)
        ));
    }
    emit(&a.out, &text)?;
    Ok(Outcome::Success)
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        1
    }
}
