//! Command-line surface: `labels`, `dataset build`, `train`, `eval`, and
//! `report` subcommands wiring the pipeline stages together.
//!
//! Every run writes a JSON config echo next to its outputs capturing all
//! effective parameters, so any artifact can be regenerated from the echo
//! alone. Exit codes are a stable contract: 0 success, 1 user error,
//! 2 internal error.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::classifier::{
    format_history_csv, load_features, load_model, predict, save_model, train, Model, ModelConfig,
    TrainConfig,
};
use crate::dataset::{
    build_dataset, label_set_checksum, read_manifest, verify_manifest, DatasetSpec, Split,
    MANIFEST_FILE,
};
use crate::eval::{format_per_sample_csv, format_report_csv, format_report_text, report};
use crate::posespace::{generate_labels, read_labels, DiscretizationSpec, LabelSet};
use crate::render::{load_mesh, make_mock_spacecraft, CameraIntrinsics, LightingSpec, TargetModel};

#[derive(Parser, Debug)]
#[command(
    name = "pose-forge",
    about = "Synthetic spacecraft imagery: pose labels, datasets, training, evaluation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Cli {
    pub fn verbosity(&self) -> u8 {
        self.verbose
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a pose-label set from a discretization spec.
    Labels(LabelsArgs),
    /// Dataset operations.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train the classifier on a dataset's train split.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset's test split.
    Eval(EvalArgs),
    /// Merge evaluation summaries into one comparison table.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum DatasetCommand {
    /// Render a labeled dataset into a directory.
    Build(DatasetBuildArgs),
}

#[derive(Args, Debug)]
struct LabelsArgs {
    /// Discretization spec, JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Output label file (text).
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DatasetBuildArgs {
    /// Dataset spec, JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Label file(s) to assign against; the first is the split-stratifying
    /// primary set.
    #[arg(long, required = true)]
    labels: Vec<PathBuf>,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Target mesh (OBJ subset); defaults to the built-in mock spacecraft.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Camera and lighting overrides, JSON.
    #[arg(long)]
    render_config: Option<PathBuf>,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Re-read and re-hash everything after building.
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset manifest to train on.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (model.pfnet, history.csv).
    #[arg(long)]
    out: PathBuf,
    /// Model hyperparameters, JSON (defaults otherwise).
    #[arg(long)]
    model_config: Option<PathBuf>,
    /// Training hyperparameters, JSON (defaults otherwise).
    #[arg(long)]
    train_config: Option<PathBuf>,
    /// Enable horizontal-flip augmentation (overrides the config file).
    #[arg(long)]
    hflip: bool,
    /// Override both config seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Dataset manifest whose test split to evaluate (may differ from the
    /// training dataset for cross-evaluation).
    #[arg(long)]
    manifest: PathBuf,
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Label file the model's classes refer to.
    #[arg(long)]
    labels: PathBuf,
    /// Output directory (report.txt, report.csv, per_sample.csv).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Evaluation summary CSVs (metric,value) to merge.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory (report_summary.csv, report_summary.txt).
    #[arg(long)]
    out: PathBuf,
}

pub fn try_parse() -> clap::error::Result<Cli> {
    Cli::try_parse()
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Labels(args) => cmd_labels(args),
        Command::Dataset(DatasetCommand::Build(args)) => cmd_dataset_build(args, cli.threads),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

fn write_echo(path: &Path, echo: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(echo).expect("echo serializes");
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Deserialize)]
struct LabelSpecFile {
    #[serde(flatten)]
    discretization: DiscretizationSpec,
    #[serde(default)]
    seed: u64,
}

fn cmd_labels(args: LabelsArgs) -> Result<()> {
    let spec: LabelSpecFile = read_json(&args.spec, "label spec")?;
    let seed = args.seed.unwrap_or(spec.seed);
    let labels = generate_labels(&spec.discretization, seed)?;
    let name = args
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "labels".into());
    let set = LabelSet::new(name, labels);
    crate::posespace::write_labels(&set, &args.out)?;
    let checksum = label_set_checksum(&set);
    let checksum_path = sibling(&args.out, "sha256");
    std::fs::write(&checksum_path, format!("{checksum}\n"))
        .with_context(|| format!("writing {}", checksum_path.display()))?;
    write_echo(
        &sibling(&args.out, "config.json"),
        &json!({
            "command": "labels",
            "spec_path": args.spec,
            "discretization": spec.discretization,
            "seed": seed,
            "out": args.out,
        }),
    )?;
    println!(
        "wrote {} labels to {} (sha256 {checksum})",
        set.len(),
        args.out.display()
    );
    Ok(())
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{ext}"));
    path.with_file_name(name)
}

#[derive(Deserialize, Default)]
struct RenderConfigFile {
    #[serde(default)]
    intrinsics: Option<CameraIntrinsics>,
    #[serde(default)]
    lighting: Option<LightingSpec>,
}

fn load_target(mesh: &Option<PathBuf>) -> Result<TargetModel> {
    match mesh {
        Some(path) => Ok(load_mesh(path)?),
        None => Ok(make_mock_spacecraft()),
    }
}

fn cmd_dataset_build(args: DatasetBuildArgs, threads: Option<usize>) -> Result<()> {
    let mut spec: DatasetSpec = read_json(&args.spec, "dataset spec")?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let label_sets: Vec<LabelSet> = args
        .labels
        .iter()
        .map(|p| read_labels(p).map_err(Into::into))
        .collect::<Result<_>>()?;
    let model = load_target(&args.mesh)?;
    let render_cfg: RenderConfigFile = match &args.render_config {
        Some(path) => read_json(path, "render config")?,
        None => RenderConfigFile::default(),
    };
    let intrinsics = render_cfg.intrinsics.unwrap_or_default();
    let lighting = render_cfg.lighting.unwrap_or_default();

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = build_dataset(&spec, &label_sets, &model, &intrinsics, &lighting, &args.out)?;
    log::info!(
        "rendered {} images into {}",
        manifest.entries.len(),
        args.out.display()
    );

    if args.verify {
        let reread = read_manifest(&args.out.join(MANIFEST_FILE))?;
        verify_manifest(&reread, &args.out)?;
        println!("verify: {} images match their manifest hashes", reread.entries.len());
    }

    write_echo(
        &args.out.join("config_echo.json"),
        &json!({
            "command": "dataset build",
            "spec_path": args.spec,
            "spec": spec,
            "labels": args.labels,
            "mesh": args.mesh,
            "intrinsics": intrinsics,
            "lighting": lighting,
            "threads": threads,
            "out": args.out,
        }),
    )?;
    println!(
        "dataset {:?}: {} entries, {} label set(s), manifest {}",
        spec.name,
        manifest.entries.len(),
        manifest.header.label_sets.len(),
        args.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

#[derive(Deserialize, Default)]
struct ModelConfigFile {
    input_side: Option<usize>,
    hidden_units: Option<usize>,
    num_classes: Option<usize>,
    dropout_p: Option<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize, Default)]
struct TrainConfigFile {
    learning_rate: Option<f64>,
    momentum: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    hflip_augment: Option<bool>,
    seed: Option<u64>,
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let manifest = read_manifest(&args.manifest)?;
    let base_dir = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let primary = manifest.primary_label_set().to_string();
    let num_classes = manifest.header.label_sets[0].count;

    let mc: ModelConfigFile = match &args.model_config {
        Some(p) => read_json(p, "model config")?,
        None => ModelConfigFile::default(),
    };
    let tc: TrainConfigFile = match &args.train_config {
        Some(p) => read_json(p, "train config")?,
        None => TrainConfigFile::default(),
    };
    let model_config = ModelConfig {
        input_side: mc.input_side.unwrap_or(64),
        hidden_units: mc.hidden_units.unwrap_or(256),
        num_classes: mc.num_classes.unwrap_or(num_classes),
        dropout_p: mc.dropout_p.unwrap_or(0.5),
        seed: args.seed.or(mc.seed).unwrap_or(0),
    };
    let train_config = TrainConfig {
        learning_rate: tc.learning_rate.unwrap_or(0.01),
        momentum: tc.momentum.unwrap_or(0.9),
        batch_size: tc.batch_size.unwrap_or(32),
        epochs: tc.epochs.unwrap_or(20),
        hflip_augment: args.hflip || tc.hflip_augment.unwrap_or(false),
        seed: args.seed.or(tc.seed).unwrap_or(0),
    };

    let train_set = load_features(
        &manifest,
        &base_dir,
        Split::Train,
        &primary,
        model_config.input_side,
        train_config.hflip_augment,
    )?;
    let val_set = load_features(
        &manifest,
        &base_dir,
        Split::Validation,
        &primary,
        model_config.input_side,
        false,
    )?;
    if train_set.is_empty() {
        bail!("manifest {} has no train split entries", args.manifest.display());
    }
    log::info!(
        "training on {} images ({} classes), validating on {}",
        train_set.len(),
        model_config.num_classes,
        val_set.len()
    );

    let mut model = Model::init(model_config.clone())?;
    let history = train(
        &mut model,
        &train_set,
        (!val_set.is_empty()).then_some(&val_set),
        &train_config,
    )?;
    for row in &history {
        println!(
            "epoch {:>3}: {} samples, train loss {:.4}{}",
            row.epoch,
            row.samples,
            row.train_loss,
            row.val_accuracy_pct
                .map(|v| format!(", val accuracy {v:.2} %"))
                .unwrap_or_default()
        );
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let model_path = args.out.join("model.pfnet");
    save_model(&model, &model_path)?;
    std::fs::write(args.out.join("history.csv"), format_history_csv(&history))
        .context("writing history.csv")?;
    write_echo(
        &args.out.join("config_echo.json"),
        &json!({
            "command": "train",
            "manifest": args.manifest,
            "label_set": primary,
            "model_config": {
                "input_side": model_config.input_side,
                "hidden_units": model_config.hidden_units,
                "num_classes": model_config.num_classes,
                "dropout_p": model_config.dropout_p,
                "seed": model_config.seed,
            },
            "train_config": train_config,
            "out": args.out,
        }),
    )?;
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let manifest = read_manifest(&args.manifest)?;
    let base_dir = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let model = load_model(&args.model)?;
    let labels = read_labels(&args.labels)?;

    let recorded = manifest
        .header
        .label_sets
        .iter()
        .find(|s| s.name == labels.name)
        .ok_or_else(|| {
            anyhow!(
                "manifest {} was not labeled against set {:?}",
                args.manifest.display(),
                labels.name
            )
        })?;
    let checksum = label_set_checksum(&labels);
    if recorded.checksum != checksum {
        bail!(
            "label set {:?} does not match the manifest (checksum {} vs {})",
            labels.name,
            checksum,
            recorded.checksum
        );
    }
    if model.config.num_classes != labels.len() {
        bail!(
            "model has {} classes but label set {:?} has {}",
            model.config.num_classes,
            labels.name,
            labels.len()
        );
    }

    let entries: Vec<_> = manifest.entries_in(Split::Test).collect();
    if entries.is_empty() {
        bail!("manifest {} has no test split entries", args.manifest.display());
    }
    let predictions = entries
        .par_iter()
        .map(|entry| {
            let sample = crate::dataset::load_sample(entry, &base_dir)?;
            Ok(predict(&model, &sample.pixels)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let metrics = report(&entries, &predictions, &labels)?;
    let text = format_report_text(&metrics);
    print!("{text}");

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    std::fs::write(args.out.join("report.txt"), &text).context("writing report.txt")?;
    std::fs::write(args.out.join("report.csv"), format_report_csv(&metrics))
        .context("writing report.csv")?;
    std::fs::write(
        args.out.join("per_sample.csv"),
        format_per_sample_csv(&metrics),
    )
    .context("writing per_sample.csv")?;
    write_echo(
        &args.out.join("config_echo.json"),
        &json!({
            "command": "eval",
            "manifest": args.manifest,
            "model": args.model,
            "labels": args.labels,
            "label_set": labels.name,
            "label_checksum": checksum,
            "out": args.out,
        }),
    )?;
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let mut columns: Vec<(String, std::collections::BTreeMap<String, String>)> = Vec::new();
    for input in &args.inputs {
        let text = std::fs::read_to_string(input)
            .with_context(|| format!("reading {}", input.display()))?;
        let mut metrics = std::collections::BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue; // header
            }
            let (metric, value) = line.split_once(',').ok_or_else(|| {
                anyhow!("{}: line {} is not metric,value", input.display(), i + 1)
            })?;
            metrics.insert(metric.to_string(), value.to_string());
        }
        let name = input
            .parent()
            .and_then(Path::file_name)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| input.display().to_string());
        columns.push((name, metrics));
    }

    let mut metric_names: Vec<String> = Vec::new();
    for (_, metrics) in &columns {
        for name in metrics.keys() {
            if !metric_names.contains(name) {
                metric_names.push(name.clone());
            }
        }
    }

    let mut csv = String::from("metric");
    for (name, _) in &columns {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    let mut text = format!("{:<28}", "metric");
    for (name, _) in &columns {
        text.push_str(&format!(" {name:>14}"));
    }
    text.push('\n');
    for metric in &metric_names {
        csv.push_str(metric);
        text.push_str(&format!("{metric:<28}"));
        for (_, metrics) in &columns {
            let value = metrics.get(metric).cloned().unwrap_or_default();
            csv.push(',');
            csv.push_str(&value);
            let shown: String = value.chars().take(14).collect();
            text.push_str(&format!(" {shown:>14}"));
        }
        csv.push('\n');
        text.push('\n');
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    std::fs::write(args.out.join("report_summary.csv"), &csv)
        .context("writing report_summary.csv")?;
    std::fs::write(args.out.join("report_summary.txt"), &text)
        .context("writing report_summary.txt")?;
    write_echo(
        &args.out.join("config_echo.json"),
        &json!({
            "command": "report",
            "inputs": args.inputs,
            "out": args.out,
        }),
    )?;
    print!("{text}");
    Ok(())
}
