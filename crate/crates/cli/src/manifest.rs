//! Manifest loading: the CSV that names every sample, its laterality, its
//! label, and where its image and mask live on disk.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use renoscan_core::eval::Side;

use crate::CliError;

pub const MANIFEST_COLUMNS: [&str; 6] = [
    "sample_id",
    "subject_id",
    "side",
    "label",
    "image_path",
    "mask_path",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub sample_id: String,
    pub subject_id: String,
    pub side: Side,
    pub label: i32,
    /// Resolved against the manifest's directory.
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
}

/// `-1`/`+1` plus the clinical aliases.
pub fn parse_label(text: &str) -> Result<i32, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "-1" => Ok(-1),
        "1" | "+1" => Ok(1),
        "normal" => Ok(-1),
        "cakut" => Ok(1),
        other => Err(format!(
            "label {other:?} is not -1, +1, normal, or cakut"
        )),
    }
}

/// Reads and fully validates a manifest; any problem in any row is a
/// validation failure, reported with the offending row ids.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRow>, CliError> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        CliError::Validation(format!("cannot read manifest {}: {e}", path.display()))
    })?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("manifest header: {e}")))?
        .clone();
    let mut column = [0usize; 6];
    for (slot, name) in column.iter_mut().zip(MANIFEST_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("manifest misses column {name}")))?;
    }

    let mut rows = Vec::new();
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {}: {e}", line + 2));
                continue;
            }
        };
        let field = |i: usize| record.get(column[i]).unwrap_or("").trim().to_string();
        let sample_id = field(0);
        if sample_id.is_empty() {
            problems.push(format!("row {}: empty sample_id", line + 2));
            continue;
        }
        if !seen.insert(sample_id.clone()) {
            problems.push(format!("{sample_id}: duplicate sample_id"));
            continue;
        }
        let side = match field(2).parse::<Side>() {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("{sample_id}: {e}"));
                continue;
            }
        };
        let label = match parse_label(&field(3)) {
            Ok(l) => l,
            Err(e) => {
                problems.push(format!("{sample_id}: {e}"));
                continue;
            }
        };
        let resolve = |text: String| -> PathBuf {
            let p = PathBuf::from(text);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let image_path = resolve(field(4));
        let mask_path = resolve(field(5));
        for (kind, p) in [("image", &image_path), ("mask", &mask_path)] {
            if !p.is_file() {
                problems.push(format!("{sample_id}: {kind} {} not found", p.display()));
            }
        }
        rows.push(ManifestRow {
            sample_id,
            subject_id: field(1),
            side,
            label,
            image_path,
            mask_path,
        });
    }

    if !problems.is_empty() {
        return Err(CliError::Validation(format!(
            "manifest {} invalid:\n  {}",
            path.display(),
            problems.join("\n  ")
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "manifest {} has no rows",
            path.display()
        )));
    }
    Ok(rows)
}
