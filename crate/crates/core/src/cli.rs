//! Command-line surface: fit/score/detect on CSV files, synthetic data
//! generation, the SR/MAE convergence study, the bag-count benchmark,
//! and a desk solver for the weight problem.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{load_csv, make_partition, Dataset, LabeledDataset, LoadedCsv};
use crate::error::{Error, Result};
use crate::estimator::{fit, AnomalyScores, BagCount, BagModel, FitOptions};
use crate::evaluation::{auc, mae, rank_table, MetricReport, ReportConfig};
use crate::neighbors::{average_i_distances, AvgDistanceProfile};
use crate::srm::{solve_srm, surrogate_risk, WeightVector};
use crate::synthetic::{mixture_density, sample_huber, sample_mixture, HuberSpec, MixtureSpec};

/// Column name treated as the anomaly label in CSV files.
pub const LABEL_COLUMN: &str = "y";

#[derive(Parser)]
#[command(
    name = "brdad",
    version,
    about = "Bagged regularized k-distances for anomaly detection and density estimation"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit on a CSV file and flag the top-m anomalies.
    Detect(DetectArgs),
    /// Emit per-point anomaly scores for a CSV file.
    Score(ScoreArgs),
    /// Fit a model and write it as JSON.
    Fit(FitArgs),
    /// Surrogate-risk / density-error convergence study on synthetic data.
    Convergence(ConvergenceArgs),
    /// Mean-AUC comparison across bag counts on labeled CSV files.
    Bench(BenchArgs),
    /// Generate synthetic CSV data.
    Synth(SynthArgs),
    /// Solve the weight problem for an average-distance vector.
    SrmSolve(SrmSolveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn parse_bags(s: &str) -> std::result::Result<BagCount, String> {
    if s == "auto" {
        return Ok(BagCount::Auto);
    }
    s.parse::<usize>()
        .map_err(|_| format!("expected a positive integer or 'auto', got {s:?}"))
        .and_then(|b| {
            if b >= 1 {
                Ok(BagCount::Fixed(b))
            } else {
                Err("bag count must be >= 1".into())
            }
        })
}

#[derive(Args)]
#[command(group(ArgGroup::new("anomaly_count").required(true).multiple(false)))]
pub struct DetectArgs {
    /// Input CSV (a column named "y" is treated as labels and ignored).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of points to flag.
    #[arg(long, group = "anomaly_count")]
    pub m: Option<usize>,
    /// Fraction of points to flag (floor of fraction * n).
    #[arg(long, group = "anomaly_count")]
    pub m_frac: Option<f64>,
    /// Bag count, or "auto" for the sample-size rule.
    #[arg(long, value_parser = parse_bags, default_value = "auto")]
    pub bags: BagCount,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip min-max scaling of the features.
    #[arg(long)]
    pub no_scale: bool,
    /// Output path (default stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Score with a saved model instead of fitting on the input. The
    /// input is treated as fresh data in that case.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_parser = parse_bags, default_value = "auto")]
    pub bags: BagCount,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_scale: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_bags, default_value = "auto")]
    pub bags: BagCount,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_scale: bool,
    /// Where to write the model JSON (default stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConvergenceDist {
    /// Standard normal in --d dimensions.
    Normal,
    /// Balanced two-component 1-D mixture.
    Blobs1d,
    /// 0.4/0.6 two-blob mixture in --d dimensions.
    Blobs,
}

#[derive(Args)]
pub struct ConvergenceArgs {
    /// Comma-separated training sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![300usize, 1000, 3000, 5000, 10000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub eval_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ConvergenceDist::Normal)]
    pub dist: ConvergenceDist,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Where to write the JSON-lines report (default stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Labeled CSV files (label column "y").
    #[arg(long, value_delimiter = ',', required = true)]
    pub inputs: Vec<PathBuf>,
    /// Bag counts to compare.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 10])]
    pub bags_list: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_scale: bool,
    /// Where to write the CSV table (default stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SynthKind {
    /// Standard normal in --d dimensions.
    Normal,
    /// 0.4/0.6 two-blob mixture in --d dimensions.
    Blobs,
    /// Balanced two-component 1-D mixture.
    Blobs1d,
    /// Two-blob normals truncated to the unit cube plus uniform
    /// anomalies; emits a label column.
    Huber,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Anomaly proportion for --kind huber.
    #[arg(long)]
    pub contamination: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SrmSolveArgs {
    /// File with one average i-distance per line, sorted non-decreasing.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub bags: usize,
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return 2;
        }
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Csv(_)
        | Error::Json(_)
        | Error::Parse { .. }
        | Error::NonFinite { .. }
        | Error::EmptyDataset(_)
        | Error::BadLabel { .. }
        | Error::MissingColumn(_)
        | Error::SingleClass
        | Error::ModelVersion(_) => 1,
        _ => 2,
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Detect(args) => cmd_detect(args),
        Command::Score(args) => cmd_score(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
        Command::SrmSolve(args) => cmd_srm_solve(args),
    }
}

/// Load features from a CSV, splitting off the label column when present.
fn load_features(path: &Path) -> Result<(Dataset, Option<Vec<u8>>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let has_label = reader.headers()?.iter().any(|h| h.trim() == LABEL_COLUMN);
    drop(reader);
    match load_csv(path, has_label.then_some(LABEL_COLUMN))? {
        LoadedCsv::Plain(data) => Ok((data, None)),
        LoadedCsv::Labeled(ld) => {
            eprintln!(
                "note: column {LABEL_COLUMN:?} in {} treated as labels",
                path.display()
            );
            Ok((ld.data, Some(ld.labels)))
        }
    }
}

fn resolve_bags(bags: BagCount, n: usize) -> usize {
    match bags {
        BagCount::Auto => {
            let b = crate::data::auto_bag_count(n);
            eprintln!("B={b} (auto for n={n})");
            b
        }
        BagCount::Fixed(b) => b,
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(
            std::fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

#[derive(Serialize)]
struct ScoreRecord {
    index: usize,
    score: f64,
    flag: u8,
}

#[derive(Serialize)]
struct ScoreFile {
    n: usize,
    flagged: Vec<usize>,
    records: Vec<ScoreRecord>,
}

fn write_score_output(
    out: &mut dyn Write,
    scores: &AnomalyScores,
    format: OutputFormat,
    path: &Option<PathBuf>,
) -> Result<()> {
    let records: Vec<ScoreRecord> = scores
        .scores()
        .iter()
        .zip(scores.flags())
        .enumerate()
        .map(|(index, (&score, &flag))| ScoreRecord {
            index,
            score,
            flag: flag as u8,
        })
        .collect();
    let io_err = |e| Error::io(path.clone().unwrap_or_else(|| PathBuf::from("<stdout>")), e);
    match format {
        OutputFormat::Csv => {
            writeln!(out, "index,score,flag").map_err(io_err)?;
            for r in records {
                writeln!(out, "{},{},{}", r.index, r.score, r.flag).map_err(io_err)?;
            }
        }
        OutputFormat::Json => {
            let file = ScoreFile {
                n: scores.scores().len(),
                flagged: scores.flagged(),
                records,
            };
            serde_json::to_writer(&mut *out, &file)?;
            writeln!(out).map_err(io_err)?;
        }
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let (data, _) = load_features(&args.input)?;
    let m = match (args.m, args.m_frac) {
        (Some(m), None) => m,
        (None, Some(frac)) => {
            if !(0.0..=1.0).contains(&frac) {
                return Err(Error::InvalidArgument(format!(
                    "--m-frac must be in [0,1], got {frac}"
                )));
            }
            (frac * data.n() as f64).floor() as usize
        }
        _ => unreachable!("clap enforces the m / m-frac group"),
    };
    if m > data.n() {
        return Err(Error::InvalidArgument(format!(
            "--m {} exceeds the {} input rows",
            m,
            data.n()
        )));
    }
    let bags = resolve_bags(args.bags, data.n());
    let model = fit(
        &data,
        &FitOptions {
            bags: BagCount::Fixed(bags),
            seed: args.seed,
            scale: !args.no_scale,
        },
    )?;
    let scores = model.detect(&data, m)?;
    let mut out = open_output(&args.output)?;
    write_score_output(&mut *out, &scores, args.format, &args.output)
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let (data, _) = load_features(&args.input)?;
    let scores = match &args.model {
        Some(path) => BagModel::load(path)?.score_fresh(&data)?,
        None => {
            let bags = resolve_bags(args.bags, data.n());
            let model = fit(
                &data,
                &FitOptions {
                    bags: BagCount::Fixed(bags),
                    seed: args.seed,
                    scale: !args.no_scale,
                },
            )?;
            model.score(&data)?
        }
    };
    let mut out = open_output(&args.output)?;
    write_score_output(&mut *out, &scores, args.format, &args.output)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let (data, _) = load_features(&args.input)?;
    let bags = resolve_bags(args.bags, data.n());
    let model = fit(
        &data,
        &FitOptions {
            bags: BagCount::Fixed(bags),
            seed: args.seed,
            scale: !args.no_scale,
        },
    )?;
    let json = model.to_json()?;
    let mut out = open_output(&args.output)?;
    writeln!(out, "{json}").map_err(|e| {
        Error::io(
            args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
            e,
        )
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive an independent stream seed from a base seed and a label path.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(base);
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// Configuration of the convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub eval_points: usize,
    pub seed: u64,
    pub spec: MixtureSpec,
}

/// Per-size medians over the repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub median_sr: f64,
    pub median_mae: f64,
    pub sr_mae_ratio: f64,
    #[serde(skip)]
    pub reports: Vec<MetricReport>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One repetition of the study: fit a single bag without scaling,
/// record the surrogate risk of the fitted weights and the mean
/// absolute density error on fresh evaluation points.
fn convergence_rep(
    spec: &MixtureSpec,
    n: usize,
    eval_points: usize,
    data_seed: u64,
    eval_seed: u64,
) -> Result<MetricReport> {
    let d = spec.d();
    let start = Instant::now();
    let data = sample_mixture(spec, n, data_seed)?;
    let bags = 1usize;
    let partition = make_partition(n, bags, data_seed)?;

    let mut profiles: Vec<AvgDistanceProfile> = Vec::with_capacity(bags);
    let mut weights: Vec<WeightVector> = Vec::with_capacity(bags);
    let mut parts = Vec::with_capacity(bags);
    for (fit_idx, ref_idx) in partition.pairs() {
        let profile = average_i_distances(&data.gather(fit_idx), d)?;
        let w = solve_srm(&profile, bags)?;
        parts.push((w.clone(), data.gather(ref_idx), ref_idx.clone()));
        profiles.push(profile);
        weights.push(w);
    }
    let s_fit = partition.pairs()[0].0.len();
    let sr = surrogate_risk(&weights, &profiles, bags, s_fit)?;
    let model = BagModel::from_parts(d, n, None, parts)?;

    let eval = sample_mixture(spec, eval_points, eval_seed)?;
    let estimates: Vec<f64> = (0..eval.n())
        .collect::<Vec<_>>()
        .par_chunks(256)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&i| model.brdde_density(eval.row(i)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let truths: Vec<f64> = eval.rows().map(|r| mixture_density(spec, r)).collect();
    let err = mae(&estimates, &truths)?;

    Ok(MetricReport {
        auc: None,
        mae: Some(err),
        sr: Some(sr),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        config: ReportConfig {
            n,
            d,
            bags,
            seed: data_seed,
        },
    })
}

/// Run the convergence study: for every size, `reps` repetitions of
/// sample + fit (B = 1, no scaling) + surrogate risk + density MAE.
pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<Vec<SizeSummary>> {
    if cfg.sizes.is_empty() || cfg.reps == 0 || cfg.eval_points == 0 {
        return Err(Error::InvalidArgument(
            "convergence study needs sizes, reps and eval points".into(),
        ));
    }
    let mut summaries = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let mut reports = Vec::with_capacity(cfg.reps);
        for rep in 0..cfg.reps {
            let data_seed = mix_seed(cfg.seed, &[n as u64, rep as u64, 0]);
            let eval_seed = mix_seed(cfg.seed, &[n as u64, rep as u64, 1]);
            reports.push(convergence_rep(
                &cfg.spec,
                n,
                cfg.eval_points,
                data_seed,
                eval_seed,
            )?);
        }
        let mut srs: Vec<f64> = reports.iter().map(|r| r.sr.unwrap()).collect();
        let mut maes: Vec<f64> = reports.iter().map(|r| r.mae.unwrap()).collect();
        let median_sr = median(&mut srs);
        let median_mae = median(&mut maes);
        summaries.push(SizeSummary {
            n,
            median_sr,
            median_mae,
            sr_mae_ratio: median_sr / median_mae,
            reports,
        });
    }
    Ok(summaries)
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<()> {
    let spec = match args.dist {
        ConvergenceDist::Normal => MixtureSpec::standard_normal(args.d),
        ConvergenceDist::Blobs1d => MixtureSpec::two_blobs_1d_balanced(),
        ConvergenceDist::Blobs => MixtureSpec::two_blobs(args.d),
    };
    let cfg = ConvergenceConfig {
        sizes: args.sizes,
        reps: args.reps,
        eval_points: args.eval_points,
        seed: args.seed,
        spec,
    };
    let summaries = convergence_study(&cfg)?;
    let mut out = open_output(&args.output)?;
    let io_err = |e| {
        Error::io(
            args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
            e,
        )
    };
    for summary in &summaries {
        for report in &summary.reports {
            report.validate()?;
            serde_json::to_writer(&mut *out, report)?;
            writeln!(out).map_err(io_err)?;
        }
        serde_json::to_writer(&mut *out, summary)?;
        writeln!(out).map_err(io_err)?;
    }
    Ok(())
}

/// Mean AUC for one labeled dataset under one bag count.
fn bench_cell(
    ld: &LabeledDataset,
    bags: usize,
    reps: usize,
    seed: u64,
    scale: bool,
) -> Result<MetricReport> {
    let start = Instant::now();
    let mut total = 0.0;
    for rep in 0..reps {
        let fit_seed = mix_seed(seed, &[bags as u64, rep as u64]);
        let model = fit(
            &ld.data,
            &FitOptions {
                bags: BagCount::Fixed(bags),
                seed: fit_seed,
                scale,
            },
        )?;
        let scores = model.score(&ld.data)?;
        total += auc(scores.scores(), &ld.labels)?;
    }
    Ok(MetricReport {
        auc: Some(total / reps as f64),
        mae: None,
        sr: None,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        config: ReportConfig {
            n: ld.data.n(),
            d: ld.data.d(),
            bags,
            seed,
        },
    })
}

/// Fill the [dataset x bag-count] mean-AUC matrix and its rank sums.
pub fn bench_matrix(
    datasets: &[(String, LabeledDataset)],
    bags_list: &[usize],
    reps: usize,
    seed: u64,
    scale: bool,
) -> Result<(Vec<Vec<MetricReport>>, Vec<f64>)> {
    if datasets.is_empty() || bags_list.is_empty() || reps == 0 {
        return Err(Error::InvalidArgument(
            "bench needs datasets, bag counts and reps".into(),
        ));
    }
    let mut matrix = Vec::with_capacity(datasets.len());
    for (name, ld) in datasets {
        let mut row = Vec::with_capacity(bags_list.len());
        for &bags in bags_list {
            let cell = bench_cell(ld, bags, reps, seed, scale)?;
            eprintln!(
                "bench: {name} B={bags} mean AUC {:.4} ({:.0} ms)",
                cell.auc.unwrap(),
                cell.runtime_ms
            );
            row.push(cell);
        }
        matrix.push(row);
    }
    let sums = rank_table(&matrix)?;
    Ok((matrix, sums))
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut datasets = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let loaded = load_csv(path, Some(LABEL_COLUMN))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        match loaded {
            LoadedCsv::Labeled(ld) => datasets.push((name, ld)),
            LoadedCsv::Plain(_) => unreachable!("label column was requested"),
        }
    }
    let (matrix, sums) = bench_matrix(&datasets, &args.bags_list, args.reps, args.seed, !args.no_scale)?;

    let mut out = open_output(&args.output)?;
    let io_err = |e| {
        Error::io(
            args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
            e,
        )
    };
    let header: Vec<String> = std::iter::once("dataset".to_string())
        .chain(args.bags_list.iter().map(|b| format!("B={b}")))
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for ((name, _), row) in datasets.iter().zip(&matrix) {
        let cells: Vec<String> = row
            .iter()
            .map(|r| format!("{:.4}", r.auc.unwrap()))
            .collect();
        writeln!(out, "{name},{}", cells.join(",")).map_err(io_err)?;
    }
    let sum_cells: Vec<String> = sums.iter().map(|s| format!("{s}")).collect();
    writeln!(out, "rank_sum,{}", sum_cells.join(",")).map_err(io_err)?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut out = open_output(&args.output)?;
    let io_err = |e| {
        Error::io(
            args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
            e,
        )
    };
    let (data, labels) = match args.kind {
        SynthKind::Normal => (
            sample_mixture(&MixtureSpec::standard_normal(args.d), args.n, args.seed)?,
            None,
        ),
        SynthKind::Blobs => (
            sample_mixture(&MixtureSpec::two_blobs(args.d), args.n, args.seed)?,
            None,
        ),
        SynthKind::Blobs1d => (
            sample_mixture(&MixtureSpec::two_blobs_1d_balanced(), args.n, args.seed)?,
            None,
        ),
        SynthKind::Huber => {
            let contamination = args.contamination.ok_or_else(|| {
                Error::InvalidArgument("--contamination is required for --kind huber".into())
            })?;
            let spec = HuberSpec::new(contamination, MixtureSpec::two_blobs(args.d))?;
            let ld = sample_huber(&spec, args.n, args.seed)?;
            (ld.data, Some(ld.labels))
        }
    };
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    if labels.is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (i, row) in data.rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(labels) = &labels {
            cells.push(format!("{}", labels[i]));
        }
        writeln!(out, "{}", cells.join(",")).map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SrmSolution {
    mu: f64,
    cutoff: usize,
    weights: Vec<f64>,
}

fn cmd_srm_solve(args: SrmSolveArgs) -> Result<()> {
    let text =
        std::fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|_| Error::Parse {
            row: lineno,
            column: "r".into(),
            value: line.to_string(),
        })?);
    }
    let profile = AvgDistanceProfile::new(values)?;
    let solution = solve_srm(&profile, args.bags)?;
    let mut weights = vec![0.0; profile.len()];
    weights[..solution.cutoff()].copy_from_slice(solution.weights());
    let out = SrmSolution {
        mu: solution.mu(),
        cutoff: solution.cutoff(),
        weights,
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}
