//! Subcommand implementations. Each writes its human-readable summary to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use isorecal_core::diagnostics::{loss_improvement_check, reliability_points};
use isorecal_core::recalibrate::marginal_summary;
use isorecal_core::simulate::complexity_curve;
use isorecal_core::{recalibrate, Error as CoreError, NoiseFamily, SimulationConfig, WeightedSample};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::model::{Metadata, ModelFile};
use crate::report::{loss_table, ModelReport};
use crate::table::{num, write_file, Table};

#[derive(Debug, Parser)]
#[command(name = "isorecal", version, about = "Isotonic recalibration of regression scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an isotonic recalibration of responses on model scores.
    Recalibrate(RecalibrateArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Label rows by price cohort and tabulate covariate levels per cohort.
    Partition(PartitionArgs),
    /// Merge two adjacent blocks of a saved model.
    Edit(EditArgs),
    /// Monte Carlo of the complexity number against the noise scale.
    Simulate(SimulateArgs),
    /// CORP reliability points and losses for predictions against outcomes.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Columns {
    /// Response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Case-weight column; defaults to `w` when present, else unit weights.
    #[arg(long)]
    pub weight: Option<String>,
    /// Candidate-model score column.
    #[arg(long, default_value = "score")]
    pub score: String,
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            response: "y".into(),
            weight: None,
            score: "score".into(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RecalibrateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub columns: Columns,
    /// Where to write the model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Optional JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictMode {
    Step,
    Midpoint,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "score")]
    pub score: String,
    #[arg(long, value_enum, default_value = "step")]
    pub mode: PredictMode,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub columns: Columns,
    /// Covariate columns (comma separated); defaults to every column other
    /// than the response, weight and score columns.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Input rows with `block` and `block_value` appended.
    #[arg(long)]
    pub output: PathBuf,
    /// Long-format table: covariate, level, block, share, level_weight.
    #[arg(long)]
    pub marginal: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EditArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `low`, `high`, or a 1-based block index k (merges k and k+1).
    #[arg(long)]
    pub merge: String,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON config file; replaces all other simulation flags.
    #[arg(long, conflicts_with_all = ["n", "mu", "sigmas", "noise", "replicates", "seed"])]
    pub config: Option<PathBuf>,
    /// Number of observations; taken from the mu file when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// `linear` (mu_i = i) or a CSV path with a `mu` column.
    #[arg(long, default_value = "linear")]
    pub mu: String,
    /// Comma-separated, increasing noise scales.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    /// `gaussian`, `student-t:<df>` or `uniform`.
    #[arg(long, default_value = "gaussian")]
    pub noise: String,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    /// RNG seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Curve CSV: sigma, mean_K, se_K.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional per-replicate CSV: replicate, sigma, K.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "prediction")]
    pub prediction: String,
    #[arg(long, default_value = "y")]
    pub outcome: String,
    #[arg(long)]
    pub weight: Option<String>,
    /// Reliability points CSV: prediction, conditional_mean, weight.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Recalibrate(a) => cmd_recalibrate(&a, out),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Partition(a) => cmd_partition(&a, out),
        Command::Edit(a) => cmd_edit(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Diagnose(a) => cmd_diagnose(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Maps a core sample error back to the data row it came from.
fn row_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidSample { index, reason } => {
            CliError::input(format!("data row {}: {reason}", index + 1))
        }
        other => other.into(),
    }
}

fn read_samples(table: &Table, cols: &Columns) -> CliResult<Vec<WeightedSample>> {
    let y = table.numeric(table.require(&cols.response, "--response")?)?;
    let s = table.numeric(table.require(&cols.score, "--score")?)?;
    let w = table.weights(cols.weight.as_deref(), "w")?;
    Ok((0..table.len())
        .map(|i| WeightedSample::new(y[i], w[i], s[i]))
        .collect())
}

pub fn cmd_recalibrate(args: &RecalibrateArgs, out: &mut dyn Write) -> CliResult<()> {
    let bytes = std::fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let table = Table::from_reader(bytes.as_slice())?;
    if table.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", args.input.display())));
    }
    let raw = read_samples(&table, &args.columns)?;
    let model = recalibrate(&raw).map_err(row_error)?;

    let y: Vec<f64> = raw.iter().map(|s| s.response).collect();
    let w: Vec<f64> = raw.iter().map(|s| s.weight).collect();
    let before: Vec<f64> = raw.iter().map(|s| s.score).collect();
    let after: Vec<f64> = before.iter().map(|&s| model.predict_step(s).0).collect();
    let losses = loss_improvement_check(&y, &w, &before, &after)?;
    let report = ModelReport::new(&model, Some(raw.len()), Some(losses))?;

    ModelFile::from_model(&model, Metadata::new(&bytes)).save(&args.model)?;
    if let Some(path) = &args.report {
        write_file(path, &report.to_json())?;
    }
    emit(out, &report.to_text())
}

pub fn load_model(path: &Path) -> CliResult<(ModelFile, isorecal_core::Recalibrator)> {
    let file = ModelFile::load(path)?;
    let model = file.to_model()?;
    Ok((file, model))
}

pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult<()> {
    let (_, model) = load_model(&args.model)?;
    let table = Table::read(&args.input)?;
    let scores = table.numeric(table.require(&args.score, "--score")?)?;
    let mut result = Table {
        headers: vec!["score".into(), "prediction".into()],
        rows: Vec::with_capacity(scores.len()),
    };
    if args.mode == PredictMode::Step {
        result.headers.push("block".into());
    }
    for &s in &scores {
        let row = match args.mode {
            PredictMode::Step => {
                let (v, k) = model.predict_step(s);
                vec![num(s), num(v), (k + 1).to_string()]
            }
            PredictMode::Midpoint => vec![num(s), num(model.predict_midpoint(s))],
        };
        result.rows.push(row);
    }
    match &args.output {
        Some(path) => result.write(path),
        None => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(&result.headers).expect("in-memory write");
            for row in &result.rows {
                wtr.write_record(row).expect("in-memory write");
            }
            emit(out, &String::from_utf8(wtr.into_inner().expect("flush")).expect("utf8"))
        }
    }
}

pub fn cmd_partition(args: &PartitionArgs, out: &mut dyn Write) -> CliResult<()> {
    let (_, model) = load_model(&args.model)?;
    let table = Table::read(&args.input)?;
    let scores = table.numeric(table.require(&args.columns.score, "--score")?)?;
    let weights = table.weights(args.columns.weight.as_deref(), "w")?;
    let labeling = model.assign_partition(&scores);

    let covariates: Vec<String> = match &args.covariates {
        Some(list) => {
            for c in list {
                table.require(c, "--covariates")?;
            }
            list.clone()
        }
        None => {
            let weight_col = args.columns.weight.clone().unwrap_or_else(|| "w".into());
            let roles = [&args.columns.response, &weight_col, &args.columns.score];
            table
                .headers
                .iter()
                .filter(|h| !roles.contains(h))
                .cloned()
                .collect()
        }
    };

    let mut labelled = table.clone();
    labelled.headers.extend(["block".to_string(), "block_value".to_string()]);
    for (row, &k) in labelled.rows.iter_mut().zip(&labeling.labels) {
        row.push((k + 1).to_string());
        row.push(num(labeling.block_values[k]));
    }
    labelled.write(&args.output)?;

    let mut marginal = Table {
        headers: ["covariate", "level", "block", "share", "level_weight"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for name in &covariates {
        let col = table.require(name, "--covariates")?;
        let levels: Vec<&str> = table.rows.iter().map(|r| r.get(col).map_or("", |s| s.as_str())).collect();
        let summary = marginal_summary(&labeling, &levels, &weights)?;
        for (l, level) in summary.levels.iter().enumerate() {
            for (k, share) in summary.shares[l].iter().enumerate() {
                marginal.rows.push(vec![
                    name.clone(),
                    level.clone(),
                    (k + 1).to_string(),
                    num(*share),
                    num(summary.level_weights[l]),
                ]);
            }
        }
    }
    marginal.write(&args.marginal)?;
    emit(
        out,
        &format!(
            "labelled {} rows into {} blocks; marginal tables for {} covariate(s)\n",
            table.len(),
            model.complexity(),
            covariates.len()
        ),
    )
}

pub fn cmd_edit(args: &EditArgs, out: &mut dyn Write) -> CliResult<()> {
    let (file, model) = load_model(&args.model)?;
    let edited = match args.merge.as_str() {
        "low" => model.merge_low(),
        "high" => model.merge_high(),
        k => {
            let k: usize = k
                .parse()
                .map_err(|_| CliError::input(format!("--merge expects low, high or a block index, got '{k}'")))?;
            if k == 0 {
                return Err(CliError::input("block indices are 1-based"));
            }
            model.merge_blocks(k - 1)
        }
    }
    .map_err(|e| match e {
        CoreError::OutOfRange { complexity, .. } => CliError::input(format!(
            "cannot merge '{}' in a model with K = {complexity}",
            args.merge
        )),
        other => other.into(),
    })?;
    ModelFile::from_model(&edited, file.metadata.clone()).save(&args.output)?;
    let report = ModelReport::new(&edited, None, None)?;
    if let Some(path) = &args.report {
        write_file(path, &report.to_json())?;
    }
    emit(out, &report.to_text())
}

/// Location parameters: `"linear"`, an explicit list, or a CSV column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Named(String),
    Values(Vec<f64>),
    Csv { csv: PathBuf, column: Option<String> },
}

/// On-disk simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub n: Option<usize>,
    pub mu: MuSpec,
    pub sigmas: Vec<f64>,
    pub noise: NoiseFamily,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn resolve_mu(spec: &MuSpec, n: Option<usize>) -> CliResult<Vec<f64>> {
    let mu = match spec {
        MuSpec::Named(name) if name == "linear" => {
            let n = n.ok_or_else(|| CliError::input("n is required for a linear mu"))?;
            return Ok((1..=n).map(|i| i as f64).collect());
        }
        MuSpec::Named(path) => read_mu_csv(Path::new(path), None)?,
        MuSpec::Values(v) => v.clone(),
        MuSpec::Csv { csv, column } => read_mu_csv(csv, column.as_deref())?,
    };
    if let Some(n) = n {
        if n != mu.len() {
            return Err(CliError::input(format!("n = {n} but mu has {} entries", mu.len())));
        }
    }
    Ok(mu)
}

fn read_mu_csv(path: &Path, column: Option<&str>) -> CliResult<Vec<f64>> {
    let table = Table::read(path)?;
    let col = match column {
        Some(c) => table.require(c, "mu column")?,
        None => table.column("mu").unwrap_or(0),
    };
    table.numeric(col)
}

pub fn parse_noise(s: &str) -> CliResult<NoiseFamily> {
    match s {
        "gaussian" | "standard-gaussian" | "normal" => Ok(NoiseFamily::StandardGaussian),
        "uniform" => Ok(NoiseFamily::Uniform),
        other => match other.strip_prefix("student-t:").map(str::parse::<f64>) {
            Some(Ok(df)) => Ok(NoiseFamily::StudentT { df }),
            _ => Err(CliError::input(format!(
                "unknown noise '{other}' (expected gaussian, student-t:<df> or uniform)"
            ))),
        },
    }
}

pub fn simulation_config(args: &SimulateArgs) -> CliResult<SimulationConfig> {
    let config = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            let file: SimulationFile = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let mu = resolve_mu(&file.mu, file.n)?;
            SimulationConfig {
                n: mu.len(),
                mu,
                sigmas: file.sigmas,
                noise: file.noise,
                replicates: file.replicates,
                seed: file.seed,
                weights: file.weights,
            }
        }
        None => {
            let seed = args
                .seed
                .ok_or_else(|| CliError::input("--seed is required (seeds are never implicit)"))?;
            let spec = MuSpec::Named(args.mu.clone());
            let mu = resolve_mu(&spec, args.n)?;
            SimulationConfig {
                n: mu.len(),
                mu,
                sigmas: args.sigmas.clone(),
                noise: parse_noise(&args.noise)?,
                replicates: args.replicates,
                seed,
                weights: None,
            }
        }
    };
    config.validate()?;
    Ok(config)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = simulation_config(args)?;
    let curve = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::input(format!("--threads: {e}")))?
            .install(|| complexity_curve(&config))?,
        None => complexity_curve(&config)?,
    };

    let curve_table = Table {
        headers: ["sigma", "mean_K", "se_K"].map(String::from).to_vec(),
        rows: (0..curve.sigmas.len())
            .map(|s| vec![num(curve.sigmas[s]), num(curve.mean_k[s]), num(curve.se_k[s])])
            .collect(),
    };
    curve_table.write(&args.output)?;
    if let Some(path) = &args.matrix {
        let mut matrix = Table {
            headers: ["replicate", "sigma", "K"].map(String::from).to_vec(),
            rows: Vec::with_capacity(curve.k.len() * curve.sigmas.len()),
        };
        for (r, row) in curve.k.iter().enumerate() {
            for (s, k) in row.iter().enumerate() {
                matrix.rows.push(vec![r.to_string(), num(curve.sigmas[s]), k.to_string()]);
            }
        }
        matrix.write(path)?;
    }

    let violations = curve.pointwise_violations();
    let rows: Vec<Vec<String>> = (0..curve.sigmas.len())
        .map(|s| {
            vec![
                num(curve.sigmas[s]),
                format!("{:.3}", curve.mean_k[s]),
                format!("{:.4}", curve.se_k[s]),
            ]
        })
        .collect();
    let mut text = crate::report::columns(&["sigma", "mean_K", "se_K"], &rows);
    text.push_str(&format!("pointwise violations: {violations}\n"));
    emit(out, &text)?;
    if violations > 0 {
        return Err(CliError::TheoremViolation { violations });
    }
    Ok(())
}

pub fn cmd_diagnose(args: &DiagnoseArgs, out: &mut dyn Write) -> CliResult<()> {
    let table = Table::read(&args.input)?;
    if table.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", args.input.display())));
    }
    let pred = table.numeric(table.require(&args.prediction, "--prediction")?)?;
    let y = table.numeric(table.require(&args.outcome, "--outcome")?)?;
    let w = table.weights(args.weight.as_deref(), "w")?;
    let points = reliability_points(&pred, &y, &w).map_err(row_error)?;

    let raw: Vec<WeightedSample> = (0..y.len()).map(|i| WeightedSample::new(y[i], w[i], pred[i])).collect();
    let model = recalibrate(&raw).map_err(row_error)?;
    let recal: Vec<f64> = pred.iter().map(|&p| model.predict_step(p).0).collect();
    let losses = loss_improvement_check(&y, &w, &pred, &recal)?;

    let pts = Table {
        headers: ["prediction", "conditional_mean", "weight"].map(String::from).to_vec(),
        rows: points
            .iter()
            .map(|p| vec![num(p.prediction), num(p.conditional_mean), num(p.weight)])
            .collect(),
    };
    pts.write(&args.output)?;
    if let Some(path) = &args.report {
        let mut json = serde_json::to_vec_pretty(&DiagnoseReport {
            reliability_points: points.len(),
            max_calibration_deviation: points
                .iter()
                .map(|p| (p.prediction - p.conditional_mean).abs())
                .fold(0.0, f64::max),
            losses: losses.clone(),
        })
        .expect("report serialises");
        json.push(b'\n');
        write_file(path, &json)?;
    }
    let mut text = format!("{} reliability points (CORP)\n\n", points.len());
    text.push_str(&crate::report::columns(&["prediction", "conditional_mean", "weight"], &pts.rows));
    text.push('\n');
    text.push_str("losses: predictions as given (before) vs isotonically recalibrated (after)\n");
    text.push_str(&loss_table(&losses));
    emit(out, &text)
}

#[derive(Debug, Serialize)]
struct DiagnoseReport {
    reliability_points: usize,
    max_calibration_deviation: f64,
    losses: isorecal_core::diagnostics::LossReport,
}
