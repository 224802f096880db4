//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::audio::{compute_mfcc, decode_wav, MfccParams, MfccStack};
use crate::dataset::{validate_splits, GroundTruthTable, SplitManifest, Target};
use crate::error::Error;
use crate::features::{aggregate_frame_features, Aggregation, FeatureTable, Modality};
use crate::harness::{
    render_table, run_experiment, write_synthetic, ExperimentConfig, ReportFormat, ReportTable,
    SyntheticSpec,
};
use crate::metrics::{pearson, spearman};
use crate::ridge::{BayesianRidge, BayesianRidgeConfig};

#[derive(Parser)]
#[command(
    name = "memrank",
    version,
    about = "Feature-based video memorability prediction and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-check a split manifest against a ground-truth table.
    Validate(ValidateArgs),
    /// Turn a WAV file into an MFCC stack tensor and/or a feature row.
    ExtractAudio(ExtractAudioArgs),
    /// Fit a Bayesian ridge model on a feature table.
    Train(TrainArgs),
    /// Predict scores for every video in a feature table.
    Predict(PredictArgs),
    /// Score a prediction file against ground truth.
    Evaluate(EvaluateArgs),
    /// Run a configured experiment and write its report.
    Experiment(ExperimentArgs),
    /// Generate a synthetic fixture from a spec file.
    Synth(SynthArgs),
    /// Re-render a report CSV in another format.
    Report(ReportArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Split manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Ground-truth CSV.
    #[arg(long)]
    ground_truth: PathBuf,
}

#[derive(Args)]
struct ExtractAudioArgs {
    /// Input WAV file (PCM 16-bit).
    #[arg(long)]
    wav: PathBuf,
    /// Write the three-channel stack as a text tensor.
    #[arg(long)]
    tns_out: Option<PathBuf>,
    /// Append the flattened stack as one row of this feature CSV.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Video id for the feature row; required with --csv-out.
    #[arg(long)]
    video_id: Option<String>,
    /// Min-max scale each channel onto [0, 1] before writing.
    #[arg(long)]
    scaled: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature CSVs; several files are aggregated per video.
    #[arg(long, required = true)]
    features: Vec<PathBuf>,
    /// Ground-truth CSV.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Target column to fit.
    #[arg(long)]
    target: String,
    /// Restrict training to the ids in this file (one per line).
    #[arg(long)]
    ids: Option<PathBuf>,
    /// Frame aggregation when several feature files are given.
    #[arg(long, default_value = "mean")]
    aggregation: String,
    /// Output model file.
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Feature CSVs; several files are aggregated per video.
    #[arg(long, required = true)]
    features: Vec<PathBuf>,
    /// Frame aggregation when several feature files are given.
    #[arg(long, default_value = "mean")]
    aggregation: String,
    /// Output prediction CSV (video_id,prediction,stddev).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction CSV written by `predict`.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Target column to score against.
    #[arg(long)]
    target: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment configuration (TOML); data paths resolve relative to it.
    #[arg(long)]
    config: PathBuf,
    /// Report CSV to write.
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Table format printed to stdout: plain, csv, or markdown.
    #[arg(long, default_value = "plain")]
    format: String,
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic data spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; one subdirectory per dataset.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Report CSV written by `experiment`.
    #[arg(long)]
    input: PathBuf,
    /// Output format: plain, csv, or markdown.
    #[arg(long, default_value = "plain")]
    format: String,
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

/// Parse and run; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(args) => validate(args),
        Command::ExtractAudio(args) => extract_audio(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Experiment(args) => experiment(args),
        Command::Synth(args) => synth(args),
        Command::Report(args) => report(args),
    }
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let manifest = SplitManifest::load(&args.manifest)?;
    let ground_truth = GroundTruthTable::load(&args.ground_truth, manifest.dataset_id.clone())?;
    let report = validate_splits(&manifest, &ground_truth)?;
    if report.is_valid() {
        println!("ok: splits of \"{}\" are consistent", manifest.dataset_id);
        Ok(())
    } else {
        for finding in &report.findings {
            println!("{finding}");
        }
        Err(CliError::Data(Error::invalid(format!(
            "{} finding(s) in dataset \"{}\"",
            report.findings.len(),
            manifest.dataset_id
        ))))
    }
}

fn extract_audio(args: ExtractAudioArgs) -> Result<(), CliError> {
    if args.tns_out.is_none() && args.csv_out.is_none() {
        return Err(CliError::Usage(
            "extract-audio needs --tns-out and/or --csv-out".into(),
        ));
    }
    if args.csv_out.is_some() && args.video_id.is_none() {
        return Err(CliError::Usage("--csv-out requires --video-id".into()));
    }

    let params = MfccParams::default();
    let clip = decode_wav(&args.wav)?;
    let mfcc = compute_mfcc(&clip, &params)?;
    let mut stack = MfccStack::from_mfcc(mfcc, params.delta_window);
    if args.scaled {
        stack = stack.scaled();
    }

    if let Some(path) = &args.tns_out {
        stack.write_tns(path)?;
        println!(
            "wrote {} ({} frames x {} coefficients x 3 channels)",
            path.display(),
            stack.n_frames(),
            stack.n_coeffs()
        );
    }
    if let Some(path) = &args.csv_out {
        let video_id = args.video_id.as_deref().unwrap();
        append_feature_row(path, video_id, &stack.flatten())?;
        println!("appended \"{video_id}\" to {}", path.display());
    }
    Ok(())
}

/// Append one row to a feature CSV, creating it (with header) when missing.
fn append_feature_row(path: &Path, video_id: &str, row: &[f64]) -> Result<(), CliError> {
    let mut table = if path.exists() {
        FeatureTable::load(path, Modality::MfccStackFlat, "audio")?
    } else {
        FeatureTable::new("audio", Modality::MfccStackFlat, row.len())
    };
    table.insert(video_id, row.to_vec())?;
    table.save(path)?;
    Ok(())
}

fn parse_aggregation(s: &str) -> Result<Aggregation, CliError> {
    match s {
        "mean" => Ok(Aggregation::Mean),
        "concat" => Ok(Aggregation::Concat),
        other => Err(CliError::Usage(format!(
            "unknown aggregation \"{other}\" (use mean or concat)"
        ))),
    }
}

fn load_aggregated_features(
    paths: &[PathBuf],
    aggregation: Aggregation,
) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let tables: Vec<FeatureTable> = paths
        .iter()
        .map(|p| FeatureTable::load(p, Modality::Visual, "cli"))
        .collect::<Result<_, _>>()?;
    let first = &tables[0];
    let mut rows = Vec::with_capacity(first.len());
    for (id, _) in first.iter() {
        let mut frames = Vec::with_capacity(tables.len());
        for table in &tables {
            match table.get(id) {
                Some(row) => frames.push(row.to_vec()),
                None => {
                    return Err(CliError::Data(Error::invalid(format!(
                        "video \"{id}\" is missing from {} of the feature files",
                        tables.len()
                    ))))
                }
            }
        }
        let vector = if frames.len() == 1 {
            frames.pop().unwrap()
        } else {
            aggregate_frame_features(&frames, aggregation)?
        };
        rows.push((id.to_string(), vector));
    }
    Ok(rows)
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let target = Target::from_str(&args.target)?;
    let aggregation = parse_aggregation(&args.aggregation)?;
    let ground_truth = GroundTruthTable::load(&args.ground_truth, "train")?;
    let rows = load_aggregated_features(&args.features, aggregation)?;

    let keep: Option<std::collections::HashSet<String>> = match &args.ids {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        }
        None => None,
    };

    let mut x_rows = Vec::new();
    let mut y = Vec::new();
    for (id, vector) in &rows {
        if let Some(keep) = &keep {
            if !keep.contains(id) {
                continue;
            }
        }
        let Some(score) = ground_truth.get(id).and_then(|s| s.get(target)) else {
            continue;
        };
        x_rows.push(vector.clone());
        y.push(score);
    }
    if x_rows.is_empty() {
        return Err(CliError::Data(Error::invalid(
            "empty intersection of features and labels",
        )));
    }

    let dim = x_rows[0].len();
    let flat: Vec<f64> = x_rows.iter().flatten().copied().collect();
    let x = DMatrix::from_row_slice(x_rows.len(), dim, &flat);
    let y = DVector::from_vec(y);
    let model = BayesianRidge::fit(&x, &y, &BayesianRidgeConfig::default())?;
    model.save(&args.model_out)?;
    println!(
        "fitted {} rows x {} features: alpha {:.6e}, lambda {:.6e}, {} iteration(s){}",
        x.nrows(),
        dim,
        model.alpha(),
        model.lambda(),
        model.n_iter(),
        if model.converged_by_tol() {
            ", converged"
        } else {
            ""
        }
    );
    Ok(())
}

fn predict(args: PredictArgs) -> Result<(), CliError> {
    let aggregation = parse_aggregation(&args.aggregation)?;
    let model = BayesianRidge::load(&args.model)?;
    let rows = load_aggregated_features(&args.features, aggregation)?;

    let mut out = String::from("video_id,prediction,stddev\n");
    for (id, vector) in &rows {
        let prediction = model.predict(vector)?;
        out.push_str(&format!(
            "{id},{:.9},{:.9}\n",
            prediction.mean, prediction.stddev
        ));
    }
    std::fs::write(&args.out, out).map_err(|e| Error::io(&args.out, e))?;
    println!("wrote {} prediction(s) to {}", rows.len(), args.out.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let target = Target::from_str(&args.target)?;
    let truth = GroundTruthTable::load(&args.truth, "truth")?;

    let mut reader = csv::Reader::from_path(&args.pred)
        .map_err(|e| crate::dataset::csv_error(&args.pred, e))?;
    let mut predicted = Vec::new();
    let mut actual = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| crate::dataset::csv_error(&args.pred, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record.get(0).unwrap_or("").trim();
        let value: f64 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::parse(&args.pred, line, "bad prediction"))?;
        if let Some(score) = truth.get(id).and_then(|s| s.get(target)) {
            predicted.push(value);
            actual.push(score);
        }
    }
    if predicted.len() < 2 {
        return Err(CliError::Data(Error::invalid(format!(
            "only {} prediction(s) matched ground truth for {target}",
            predicted.len()
        ))));
    }
    println!("spearman {:.6}", spearman(&predicted, &actual)?);
    println!("pearson {:.6}", pearson(&predicted, &actual)?);
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let format = ReportFormat::from_str(&args.format).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = ExperimentConfig::load(&args.config)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let report = run_experiment(&config, &base)?;
    report.write_csv(&args.out)?;
    print!("{}", render_table(&report, format));
    eprintln!(
        "wrote {} ({} row(s), config {}, train_dropped {})",
        args.out.display(),
        report.rows.len(),
        &report.config_hash[..12.min(report.config_hash.len())],
        report.train_dropped
    );
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec::load(&args.spec)?;
    write_synthetic(&spec, &args.out)?;
    for dataset in &spec.datasets {
        println!(
            "generated \"{}\" ({}/{}/{} train/dev/test, dim {}) under {}",
            dataset.id,
            spec.train_n,
            spec.dev_n,
            spec.test_n,
            spec.dim,
            args.out.join(&dataset.id).display()
        );
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    let format = ReportFormat::from_str(&args.format).map_err(|e| CliError::Usage(e.to_string()))?;
    let table = ReportTable::read_csv(&args.input)?;
    print!("{}", render_table(&table, format));
    Ok(())
}
