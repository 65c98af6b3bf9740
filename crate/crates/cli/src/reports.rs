//! Output artifacts: the feature CSV, cross-validation reports, ROC
//! curves, and the feature-set comparison grid. Every file carries the
//! tool version and config hash on its first line or in its JSON body.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use renoscan_core::descriptors::GeometricFeatures;
use renoscan_core::eval::{CvReport, Dataset, Sample, Side};
use renoscan_core::features::FeatureSet;

use crate::cache::write_atomic;
use crate::config::{PipelineConfig, TOOL_VERSION};
use crate::pipeline::RowFeatures;
use crate::CliError;

pub const META_COLUMNS: [&str; 3] = ["sample_id", "side", "label"];

/// Column names for the families in `set`, in storage order.
pub fn feature_columns(set: FeatureSet, cnn_len: usize, hog_len: usize) -> Vec<String> {
    let mut names = Vec::new();
    if set.cnn {
        for i in 0..cnn_len {
            names.push(format!("cnn_{i:04}"));
        }
    }
    if set.hog {
        for i in 0..hog_len {
            names.push(format!("hog_{i:04}"));
        }
    }
    if set.geome {
        for i in 0..8 {
            names.push(format!("geo_shape_{i}"));
        }
        for i in 0..GeometricFeatures::LEN - 8 {
            names.push(format!("geo_block_{i}"));
        }
    }
    names
}

fn comment_line(config_hash: &str) -> String {
    format!("# renoscan {TOOL_VERSION} config {config_hash}\n")
}

/// Writes the feature CSV for `set`: a comment line with version and
/// config hash, the header, then one row per sample in input order.
pub fn write_features_csv(
    path: &Path,
    rows: &[RowFeatures],
    set: FeatureSet,
    cfg: &PipelineConfig,
    cnn_len: usize,
    hog_len: usize,
) -> Result<(), CliError> {
    let columns = feature_columns(set, cnn_len, hog_len);
    let mut text = comment_line(&cfg.hash());
    text.push_str(&META_COLUMNS.join(","));
    for name in &columns {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');

    for row in rows {
        for (family, expected) in [
            (&row.cnn, if set.cnn { cnn_len } else { 0 }),
            (&row.hog, if set.hog { hog_len } else { 0 }),
            (&row.geome, if set.geome { GeometricFeatures::LEN } else { 0 }),
        ] {
            if set_uses(family, expected) {
                return Err(CliError::Validation(format!(
                    "{}: feature block length {} does not match schema {}",
                    row.row.sample_id,
                    family.len(),
                    expected
                )));
            }
        }
        write!(text, "{},{},{}", row.row.sample_id, row.row.side, row.row.label)
            .expect("string write");
        let mut push_block = |values: &[f64]| {
            for v in values {
                text.push(',');
                write!(text, "{v}").expect("string write");
            }
        };
        if set.cnn {
            push_block(&row.cnn);
        }
        if set.hog {
            push_block(&row.hog);
        }
        if set.geome {
            push_block(&row.geome);
        }
        text.push('\n');
    }

    write_atomic(path, text.as_bytes()).map_err(|e| {
        CliError::Validation(format!("cannot write {}: {e}", path.display()))
    })
}

fn set_uses(family: &[f64], expected: usize) -> bool {
    expected > 0 && family.len() != expected
}

/// A feature CSV read back: per-row metadata plus the named columns.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub samples: Vec<Sample>,
}

impl FeatureTable {
    /// Positions of `wanted` inside this table's columns; fails naming the
    /// first missing column.
    pub fn column_indexes(&self, wanted: &[String]) -> Result<Vec<usize>, CliError> {
        wanted
            .iter()
            .map(|name| {
                self.columns.iter().position(|c| c == name).ok_or_else(|| {
                    CliError::Validation(format!(
                        "feature file misses column {name}; was it extracted with the same config?"
                    ))
                })
            })
            .collect()
    }

    /// Dataset with features restricted to `wanted`, in `wanted` order.
    pub fn project(&self, wanted: &[String]) -> Result<Dataset, CliError> {
        let idx = self.column_indexes(wanted)?;
        let samples: Vec<Sample> = self
            .samples
            .iter()
            .map(|s| Sample {
                sample_id: s.sample_id.clone(),
                subject_id: s.subject_id.clone(),
                side: s.side,
                label: s.label,
                features: idx.iter().map(|&i| s.features[i]).collect(),
            })
            .collect();
        Dataset::new(samples).map_err(|e| CliError::Validation(e.to_string()))
    }
}

/// Reads a feature CSV produced by [`write_features_csv`]; leading `#`
/// comment lines are skipped.
pub fn read_features_csv(path: &Path) -> Result<FeatureTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read features {}: {e}", path.display()))
    })?;
    let body: String = text
        .lines()
        .filter(|line| !line.starts_with('#'))
        .map(|line| format!("{line}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("feature header: {e}")))?
        .clone();
    for (i, name) in META_COLUMNS.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(CliError::Validation(format!(
                "feature file must start with columns {}",
                META_COLUMNS.join(",")
            )));
        }
    }
    let columns: Vec<String> = headers.iter().skip(META_COLUMNS.len()).map(String::from).collect();

    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Validation(format!("feature row {}: {e}", line + 2)))?;
        if record.len() != META_COLUMNS.len() + columns.len() {
            return Err(CliError::Validation(format!(
                "feature row {}: {} fields, expected {}",
                line + 2,
                record.len(),
                META_COLUMNS.len() + columns.len()
            )));
        }
        let side: Side = record[1]
            .parse()
            .map_err(|e| CliError::Validation(format!("feature row {}: {e}", line + 2)))?;
        let label: i32 = record[2]
            .parse()
            .map_err(|e| CliError::Validation(format!("feature row {}: bad label: {e}", line + 2)))?;
        let features = record
            .iter()
            .skip(META_COLUMNS.len())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| CliError::Validation(format!("feature row {}: {e}", line + 2)))
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        samples.push(Sample {
            sample_id: record[0].to_string(),
            subject_id: record[0].to_string(),
            side,
            label,
            features,
        });
    }
    if samples.is_empty() {
        return Err(CliError::Validation(format!(
            "feature file {} has no rows",
            path.display()
        )));
    }
    Ok(FeatureTable { columns, samples })
}

/// JSON envelope for one cross-validation run.
#[derive(Debug, Serialize, Deserialize)]
pub struct CvReportFile {
    pub version: String,
    pub config_hash: String,
    pub feature_set: String,
    pub side: String,
    pub report: CvReport,
}

pub fn write_cv_report(
    path: &Path,
    set: FeatureSet,
    side: &str,
    cfg: &PipelineConfig,
    report: &CvReport,
) -> Result<(), CliError> {
    let file = CvReportFile {
        version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        feature_set: set.to_string(),
        side: side.to_string(),
        report: report.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

/// threshold,fpr,tpr rows of the pooled ROC curve.
pub fn write_roc_csv(path: &Path, cfg: &PipelineConfig, report: &CvReport) -> Result<(), CliError> {
    let mut text = comment_line(&cfg.hash());
    text.push_str("threshold,fpr,tpr\n");
    for point in &report.roc {
        writeln!(text, "{},{},{}", point.threshold, point.fpr, point.tpr)
            .expect("string write");
    }
    write_atomic(path, text.as_bytes())
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

/// JSON envelope for a trained classifier.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub config_hash: String,
    pub feature_set: String,
    pub side: String,
    pub model: renoscan_core::svm::SvmModel,
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<(), CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(file).map_err(|e| CliError::Validation(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read model {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("model {}: {e}", path.display())))
}

/// One (side, feature set) cell of the comparison grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareCell {
    pub feature_set: String,
    pub samples: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub accuracy_std_e2: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub auc_std_e2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareSideBlock {
    pub side: String,
    pub cells: Vec<CompareCell>,
}

/// The Table-1-shaped comparison: per side, accuracy and AUC for all
/// seven feature sets, mean and std over repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub k: usize,
    pub repeats: usize,
    pub feature_sets: Vec<String>,
    pub sides: Vec<CompareSideBlock>,
}

impl CompareReport {
    pub fn cell(&self, side: &str, set: &str) -> Option<&CompareCell> {
        self.sides
            .iter()
            .find(|b| b.side == side)?
            .cells
            .iter()
            .find(|c| c.feature_set == set)
    }
}

pub fn write_compare_json(path: &Path, report: &CompareReport) -> Result<(), CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(report).map_err(|e| CliError::Validation(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

/// The grid as CSV: 6 metric rows (accuracy and AUC per side) by 7
/// feature-set columns, cells formatted `mean ± std`.
pub fn write_compare_csv(path: &Path, report: &CompareReport) -> Result<(), CliError> {
    let mut text = comment_line(&report.config_hash);
    text.push_str("metric,side");
    for set in &report.feature_sets {
        text.push(',');
        text.push_str(set);
    }
    text.push('\n');
    for block in &report.sides {
        for metric in ["accuracy", "auc"] {
            write!(text, "{metric},{}", block.side).expect("string write");
            for cell in &block.cells {
                let (mean, std) = match metric {
                    "accuracy" => (cell.accuracy_mean, cell.accuracy_std),
                    _ => (cell.auc_mean, cell.auc_std),
                };
                write!(text, ",{mean:.4} ± {std:.4}").expect("string write");
            }
            text.push('\n');
        }
    }
    write_atomic(path, text.as_bytes())
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}
