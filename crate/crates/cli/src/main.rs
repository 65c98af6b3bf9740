//! renoscan: kidney-ultrasound feature pipeline and classifier. Subcommands
//! cover each stage (normalize, featmaps, cnn-extract), manifest-scale
//! extraction and modeling (features, train, predict, cv), the full
//! feature-set comparison grid (compare), and synthetic data (phantom-gen).

mod cache;
mod config;
mod manifest;
mod phantom;
mod pipeline;
mod reports;

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use renoscan_core::cnn::{random_archive, Network, NetworkSpec, WeightArchive};
use renoscan_core::error::Error;
use renoscan_core::eval::{
    cross_validate, side_split, CvConfig, Dataset, Sample, SideSelector,
};
use renoscan_core::featuremaps::{build_stack, ChannelStack};
use renoscan_core::features::FeatureSet;
use renoscan_core::imaging::io;
use renoscan_core::normalize::{fit_ellipse, normalize_kidney, NormalizedImage};
use renoscan_core::seeding::derive_seed;
use renoscan_core::svm::{label_from_decision, train, TrainConfig, TrainingSet};

use config::{ConfigOverrides, PipelineConfig, TOOL_VERSION};
use pipeline::{hog_length, tap_length, Pipeline, PipelineRun};
use reports::{
    feature_columns, read_features_csv, CompareCell, CompareReport, CompareSideBlock,
    FeatureTable, ModelFile,
};

/// Failure classes with distinct exit codes: 2 for anything the user can
/// fix in inputs or flags, 3 when manifest rows failed, 4 when a
/// non-finite value surfaced.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    RowFailures { failed: usize, numeric: bool },
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::RowFailures { numeric: false, .. } => 3,
            CliError::RowFailures { numeric: true, .. } => 4,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::RowFailures { failed, .. } => {
                write!(f, "{failed} row(s) failed; rerun with --skip-bad to drop them")
            }
            CliError::Numeric(msg) => write!(f, "non-finite value: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(msg) => CliError::Numeric(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "renoscan",
    version,
    about = "Kidney ultrasound normalization, feature extraction, and CAKUT classification"
)]
struct Cli {
    /// JSON config file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads; overrides RENOSCAN_THREADS; 0 means one per core
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: ConfigOverrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the mask ellipse and resample the kidney to a canonical square
    Normalize {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        /// Output image; the mask and fit sidecar land next to it
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the intensity/gradient/distance pseudo-color planes
    Featmaps {
        /// Normalized grayscale image
        #[arg(long)]
        image: PathBuf,
        /// Normalized mask
        #[arg(long)]
        mask: PathBuf,
        /// Writes <prefix>_r.png, _g.png, _b.png, and _rgb.png
        #[arg(long)]
        out_prefix: String,
    },
    /// Extract descriptor families for every manifest row into a CSV
    Features {
        #[arg(long)]
        manifest: PathBuf,
        /// cnn, hog, geome, any +-joined combination, or all
        #[arg(long)]
        set: String,
        #[arg(long)]
        out: PathBuf,
        /// Stage cache directory (default: .renoscan-cache next to the output)
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Keep going when rows fail; failed rows are dropped from the CSV
        #[arg(long)]
        skip_bad: bool,
    },
    /// Run one pseudo-color stack through the network and dump a tap
    CnnExtract {
        /// Network description JSON; defaults to the built-in topology
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Weight archive directory; defaults to seeded random weights
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Layer to read activations from (default: the configured tap)
        #[arg(long)]
        tap: Option<String>,
        /// Reads <prefix>_r.png, _g.png, and _b.png
        #[arg(long)]
        stack_prefix: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a linear SVM on a feature CSV
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Families to use (default: every family present in the file)
        #[arg(long)]
        set: Option<String>,
        /// left, right, or both
        #[arg(long, default_value = "both")]
        side: String,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score a feature CSV with a trained model
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated stratified cross-validation with ROC/AUC
    Cv {
        #[arg(long)]
        features: PathBuf,
        /// Families to use (default: every family present in the file)
        #[arg(long)]
        set: Option<String>,
        /// left, right, or both
        #[arg(long, default_value = "both")]
        side: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write the pooled ROC curve as CSV
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Cross-validate every feature set on every side and tabulate
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Keep going when rows fail; failed rows are dropped
        #[arg(long)]
        skip_bad: bool,
    },
    /// Generate a synthetic labeled corpus of kidney phantoms
    PhantomGen {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::resolve(cli.config.as_deref(), &cli.overrides)?;
    let threads = resolve_threads(cli.threads)?;
    match &cli.command {
        Command::Normalize { image, mask, out } => cmd_normalize(&cfg, image, mask, out),
        Command::Featmaps { image, mask, out_prefix } => {
            cmd_featmaps(&cfg, image, mask, out_prefix)
        }
        Command::Features { manifest, set, out, cache_dir, skip_bad } => cmd_features(
            &cfg,
            threads,
            manifest,
            set,
            out,
            cache_dir.as_deref(),
            *skip_bad,
        ),
        Command::CnnExtract { spec, weights, tap, stack_prefix, out } => cmd_cnn_extract(
            &cfg,
            spec.as_deref(),
            weights.as_deref(),
            tap.as_deref(),
            stack_prefix,
            out,
        ),
        Command::Train { features, set, side, model } => {
            cmd_train(&cfg, features, set.as_deref(), side, model)
        }
        Command::Predict { model, features, out } => cmd_predict(&cfg, model, features, out),
        Command::Cv { features, set, side, out, roc } => {
            cmd_cv(&cfg, features, set.as_deref(), side, out, roc.as_deref())
        }
        Command::Compare { manifest, out_dir, skip_bad } => {
            cmd_compare(&cfg, threads, manifest, out_dir, *skip_bad)
        }
        Command::PhantomGen { out_dir, count } => {
            phantom::generate(out_dir, *count, cfg.seed)?;
            println!("wrote {count} phantoms under {}", out_dir.display());
            Ok(())
        }
    }
}

/// Thread budget: the flag wins, then RENOSCAN_THREADS, then 0 (one
/// worker per core).
fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("RENOSCAN_THREADS") {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "RENOSCAN_THREADS must be a thread count, got {text:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::Validation(format!("RENOSCAN_THREADS: {e}"))),
    }
}

fn parse_set(text: &str) -> Result<FeatureSet, CliError> {
    text.parse::<FeatureSet>()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn parse_side(text: &str) -> Result<SideSelector, CliError> {
    text.parse::<SideSelector>()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "png".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn cmd_normalize(
    cfg: &PipelineConfig,
    image: &Path,
    mask: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let img = io::load_gray(image)?;
    let mask_img = io::load_mask(mask)?;
    let fit = fit_ellipse(&mask_img)?;
    let norm = normalize_kidney(&img, &mask_img, &fit, cfg.n0, cfg.margin)?;
    io::save_gray(&norm.image, out)?;
    let mask_out = sibling(out, "_mask");
    io::save_mask(&norm.mask, &mask_out)?;
    let sidecar = out.with_extension("json");
    let doc = serde_json::json!({
        "version": TOOL_VERSION,
        "config_hash": cfg.hash(),
        "fit": norm.source_fit,
    });
    cache::write_atomic(&sidecar, format!("{doc:#}\n").as_bytes())?;
    println!(
        "wrote {}, {}, {}",
        out.display(),
        mask_out.display(),
        sidecar.display()
    );
    Ok(())
}

fn cmd_featmaps(
    cfg: &PipelineConfig,
    image: &Path,
    mask: &Path,
    out_prefix: &str,
) -> Result<(), CliError> {
    let image = io::load_gray(image)?;
    let mask = io::load_mask(mask)?;
    let fit = fit_ellipse(&mask)?;
    let norm = NormalizedImage { image, mask, source_fit: fit };
    let stack = build_stack(&norm, &cfg.canny(), cfg.distance_mode)?;
    for (plane, tag) in [(stack.r(), "r"), (stack.g(), "g"), (stack.b(), "b")] {
        io::save_gray(plane, format!("{out_prefix}_{tag}.png"))?;
    }
    io::save_rgb(
        stack.r(),
        stack.g(),
        stack.b(),
        format!("{out_prefix}_rgb.png"),
    )?;
    println!("wrote {out_prefix}_r.png, _g.png, _b.png, _rgb.png");
    Ok(())
}

/// Prints per-row failures; errors out unless `skip_bad` allows dropping
/// them.
fn report_failures(run: &PipelineRun, skip_bad: bool) -> Result<(), CliError> {
    for f in &run.failures {
        eprintln!("row {} failed: {}", f.sample_id, f.message);
    }
    if run.failures.is_empty() {
        return Ok(());
    }
    if skip_bad {
        eprintln!(
            "--skip-bad: continuing without {} failed row(s)",
            run.failures.len()
        );
        Ok(())
    } else {
        Err(CliError::RowFailures {
            failed: run.failures.len(),
            numeric: run.failures.iter().any(|f| f.numeric),
        })
    }
}

fn cmd_features(
    cfg: &PipelineConfig,
    threads: usize,
    manifest_path: &Path,
    set_text: &str,
    out: &Path,
    cache_dir: Option<&Path>,
    skip_bad: bool,
) -> Result<(), CliError> {
    let set = parse_set(set_text)?;
    let rows = manifest::load_manifest(manifest_path)?;
    let cache_root = match cache_dir {
        Some(dir) => dir.to_path_buf(),
        None => out
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(".renoscan-cache"),
    };
    let pipe = Pipeline::new(cfg, &cache_root, set)?;
    let run = pipe.run(&rows, threads)?;
    report_failures(&run, skip_bad)?;
    if run.rows.is_empty() {
        return Err(CliError::Validation(
            "every manifest row failed; nothing to write".into(),
        ));
    }
    let (cnn_len, hog_len, _) = pipe.family_lengths()?;
    reports::write_features_csv(out, &run.rows, set, cfg, cnn_len, hog_len)?;
    for line in &run.cache_summaries {
        println!("{line}");
    }
    println!("wrote {} rows to {}", run.rows.len(), out.display());
    Ok(())
}

fn cmd_cnn_extract(
    cfg: &PipelineConfig,
    spec_path: Option<&Path>,
    weights: Option<&Path>,
    tap: Option<&str>,
    stack_prefix: &str,
    out: &Path,
) -> Result<(), CliError> {
    let spec: NetworkSpec = match spec_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Validation(format!("network spec {}: {e}", path.display()))
            })?
        }
        None => NetworkSpec::caffe_alex(),
    };
    let tap = tap.unwrap_or(&cfg.cnn_tap).to_string();
    if spec.layer(&tap).is_none() {
        return Err(CliError::Validation(format!("unknown tap layer {tap:?}")));
    }
    let archive = match weights {
        Some(dir) => WeightArchive::load(dir)?,
        None => random_archive(&spec, derive_seed(cfg.seed, "cnn-weights", &[]))?,
    };
    let network = Network::new(spec, archive)?;

    let load_plane = |tag: &str| io::load_gray(format!("{stack_prefix}_{tag}.png"));
    let stack = ChannelStack::new(load_plane("r")?, load_plane("g")?, load_plane("b")?)?;
    let values = network.forward(&stack, &tap)?;

    let mut text = format!("# renoscan {TOOL_VERSION} config {}\n", cfg.hash());
    for i in 0..values.len() {
        if i > 0 {
            text.push(',');
        }
        write!(text, "cnn_{i:04}").expect("string write");
    }
    text.push('\n');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            text.push(',');
        }
        write!(text, "{v}").expect("string write");
    }
    text.push('\n');
    cache::write_atomic(out, text.as_bytes())?;
    println!(
        "wrote {} activations from layer {} to {}",
        values.len(),
        tap,
        out.display()
    );
    Ok(())
}

fn family_of(column: &str) -> Option<&'static str> {
    if column.starts_with("cnn_") {
        Some("cnn")
    } else if column.starts_with("hog_") {
        Some("hog")
    } else if column.starts_with("geo_") {
        Some("geome")
    } else {
        None
    }
}

fn infer_set(columns: &[String]) -> Result<FeatureSet, CliError> {
    let mut set = FeatureSet { cnn: false, hog: false, geome: false };
    for column in columns {
        match family_of(column) {
            Some("cnn") => set.cnn = true,
            Some("hog") => set.hog = true,
            Some("geome") => set.geome = true,
            _ => {
                return Err(CliError::Validation(format!(
                    "unrecognized feature column {column}"
                )))
            }
        }
    }
    if !(set.cnn || set.hog || set.geome) {
        return Err(CliError::Validation("feature file has no feature columns".into()));
    }
    Ok(set)
}

/// The column schema is a pure function of (set, n0, HOG cell, CNN tap);
/// the file must agree with the current config before any model sees it.
fn assert_schema(
    table: &FeatureTable,
    set: FeatureSet,
    cfg: &PipelineConfig,
) -> Result<Vec<String>, CliError> {
    let cnn_len = if set.cnn { tap_length(&cfg.cnn_tap)? } else { 0 };
    let hog_len = if set.hog {
        hog_length(cfg.n0, cfg.effective_hog_cell())?
    } else {
        0
    };
    let expected = feature_columns(set, cnn_len, hog_len);
    let selected: Vec<String> = table
        .columns
        .iter()
        .filter(|c| match family_of(c) {
            Some("cnn") => set.cnn,
            Some("hog") => set.hog,
            Some("geome") => set.geome,
            _ => false,
        })
        .cloned()
        .collect();
    if selected != expected {
        return Err(CliError::Validation(format!(
            "feature file does not match the {set} schema for this config: \
             expected {} columns, found {}; re-extract with matching \
             --n0/--hog-cell/--cnn-tap",
            expected.len(),
            selected.len()
        )));
    }
    Ok(expected)
}

/// Reads the feature file and narrows it to one set and side.
fn load_training_view(
    features: &Path,
    set_text: Option<&str>,
    side_text: &str,
    cfg: &PipelineConfig,
) -> Result<(FeatureSet, SideSelector, Vec<String>, Dataset), CliError> {
    let table = read_features_csv(features)?;
    let set = match set_text {
        Some(text) => parse_set(text)?,
        None => infer_set(&table.columns)?,
    };
    let schema = assert_schema(&table, set, cfg)?;
    let selector = parse_side(side_text)?;
    let data = table.project(&schema)?;
    let data = side_split(&data, selector)?;
    Ok((set, selector, schema, data))
}

fn cmd_train(
    cfg: &PipelineConfig,
    features: &Path,
    set_text: Option<&str>,
    side_text: &str,
    model_out: &Path,
) -> Result<(), CliError> {
    let (set, selector, schema, data) = load_training_view(features, set_text, side_text, cfg)?;
    let rows: Vec<Vec<f64>> = data.samples().iter().map(|s| s.features.clone()).collect();
    let training = TrainingSet::new(&rows, &data.labels())?;
    let train_cfg = TrainConfig {
        c: cfg.svm_c,
        eps: cfg.svm_eps,
        max_iter: cfg.svm_max_iter,
        seed: derive_seed(cfg.seed, "train", &[]),
        scaling: cfg.scaling,
    };
    let (model, diagnostics) = train(&training, &train_cfg, schema)?;
    reports::write_model(
        model_out,
        &ModelFile {
            version: TOOL_VERSION.into(),
            config_hash: cfg.hash(),
            feature_set: set.to_string(),
            side: selector.to_string(),
            model,
        },
    )?;
    println!(
        "trained {} on {} samples in {} epoch(s){}; wrote {}",
        set,
        rows.len(),
        diagnostics.epochs,
        if diagnostics.converged { "" } else { " (hit the epoch cap)" },
        model_out.display()
    );
    Ok(())
}

fn cmd_predict(
    cfg: &PipelineConfig,
    model_path: &Path,
    features: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let file = reports::read_model(model_path)?;
    let table = read_features_csv(features)?;
    let idx = table.column_indexes(&file.model.feature_schema)?;

    let mut text = format!("# renoscan {TOOL_VERSION} config {}\n", cfg.hash());
    text.push_str("sample_id,side,label,decision,predicted\n");
    for sample in &table.samples {
        let row: Vec<f64> = idx.iter().map(|&i| sample.features[i]).collect();
        let decision = file.model.decision_value(&row)?;
        writeln!(
            text,
            "{},{},{},{},{}",
            sample.sample_id,
            sample.side,
            sample.label,
            decision,
            label_from_decision(decision)
        )
        .expect("string write");
    }
    cache::write_atomic(out, text.as_bytes())?;
    println!(
        "scored {} rows with the {} model; wrote {}",
        table.samples.len(),
        file.feature_set,
        out.display()
    );
    Ok(())
}

fn cv_config(cfg: &PipelineConfig) -> CvConfig {
    CvConfig {
        k: cfg.cv_k,
        repeats: cfg.cv_repeats,
        seed: cfg.seed,
        c: cfg.svm_c,
        eps: cfg.svm_eps,
        max_iter: cfg.svm_max_iter,
        scaling: cfg.scaling,
    }
}

fn cmd_cv(
    cfg: &PipelineConfig,
    features: &Path,
    set_text: Option<&str>,
    side_text: &str,
    out: &Path,
    roc: Option<&Path>,
) -> Result<(), CliError> {
    let (set, selector, _, data) = load_training_view(features, set_text, side_text, cfg)?;
    let report = cross_validate(&data, &cv_config(cfg))?;
    reports::write_cv_report(out, set, &selector.to_string(), cfg, &report)?;
    if let Some(roc_path) = roc {
        reports::write_roc_csv(roc_path, cfg, &report)?;
    }
    println!(
        "{} on {} ({} samples): accuracy {:.4} ± {:.4}, auc {:.4} ± {:.4} over {} repeat(s)",
        set,
        selector,
        report.samples,
        report.accuracy_mean,
        report.accuracy_std,
        report.auc_mean,
        report.auc_std,
        report.repeats
    );
    Ok(())
}

fn cmd_compare(
    cfg: &PipelineConfig,
    threads: usize,
    manifest_path: &Path,
    out_dir: &Path,
    skip_bad: bool,
) -> Result<(), CliError> {
    let rows = manifest::load_manifest(manifest_path)?;
    std::fs::create_dir_all(out_dir)?;
    let full = FeatureSet { cnn: true, hog: true, geome: true };
    let pipe = Pipeline::new(cfg, &out_dir.join("cache"), full)?;
    let run = pipe.run(&rows, threads)?;
    report_failures(&run, skip_bad)?;
    if run.rows.is_empty() {
        return Err(CliError::Validation(
            "every manifest row failed; nothing to compare".into(),
        ));
    }
    let (cnn_len, hog_len, _) = pipe.family_lengths()?;
    reports::write_features_csv(
        &out_dir.join("features.csv"),
        &run.rows,
        full,
        cfg,
        cnn_len,
        hog_len,
    )?;

    let columns = feature_columns(full, cnn_len, hog_len);
    let samples: Vec<Sample> = run
        .rows
        .iter()
        .map(|r| Sample {
            sample_id: r.row.sample_id.clone(),
            subject_id: r.row.subject_id.clone(),
            side: r.row.side,
            label: r.row.label,
            features: r.cnn.iter().chain(&r.hog).chain(&r.geome).copied().collect(),
        })
        .collect();
    let full_data = Dataset::new(samples)?;

    let cv_cfg = cv_config(cfg);
    let mut blocks = Vec::new();
    for selector in SideSelector::ALL {
        let side_data = side_split(&full_data, selector)?;
        let mut cells = Vec::new();
        for set in FeatureSet::ALL {
            let wanted = feature_columns(set, cnn_len, hog_len);
            let idx: Vec<usize> = wanted
                .iter()
                .map(|name| {
                    columns
                        .iter()
                        .position(|c| c == name)
                        .expect("full schema contains every subset column")
                })
                .collect();
            let projected: Vec<Sample> = side_data
                .samples()
                .iter()
                .map(|s| Sample {
                    sample_id: s.sample_id.clone(),
                    subject_id: s.subject_id.clone(),
                    side: s.side,
                    label: s.label,
                    features: idx.iter().map(|&i| s.features[i]).collect(),
                })
                .collect();
            let data = Dataset::new(projected)?;
            let report = cross_validate(&data, &cv_cfg)?;
            println!(
                "side {selector} set {set}: accuracy {:.4} ± {:.4}, auc {:.4} ± {:.4}",
                report.accuracy_mean, report.accuracy_std, report.auc_mean, report.auc_std
            );
            cells.push(CompareCell {
                feature_set: set.to_string(),
                samples: report.samples,
                accuracy_mean: report.accuracy_mean,
                accuracy_std: report.accuracy_std,
                accuracy_std_e2: report.accuracy_std_e2,
                auc_mean: report.auc_mean,
                auc_std: report.auc_std,
                auc_std_e2: report.auc_std_e2,
            });
        }
        blocks.push(CompareSideBlock { side: selector.to_string(), cells });
    }
    let report = CompareReport {
        version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        k: cfg.cv_k,
        repeats: cfg.cv_repeats,
        feature_sets: FeatureSet::ALL.iter().map(|s| s.to_string()).collect(),
        sides: blocks,
    };
    reports::write_compare_csv(&out_dir.join("compare.csv"), &report)?;
    reports::write_compare_json(&out_dir.join("compare.json"), &report)?;
    for line in &run.cache_summaries {
        println!("{line}");
    }
    if let Some(best) = report.cell("both", "cnn+hog+geome") {
        println!(
            "full stack on both sides: accuracy {:.4} ± {:.4}, auc {:.4} ± {:.4}",
            best.accuracy_mean, best.accuracy_std, best.auc_mean, best.auc_std
        );
    }
    println!("wrote comparison grid to {}", out_dir.display());
    Ok(())
}
