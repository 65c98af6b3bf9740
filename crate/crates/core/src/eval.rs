//! Experimental protocol: stratified repeated k-fold cross-validation with
//! accuracy, ROC, and AUC reporting.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_for};
use crate::svm::{label_from_decision, train, Scaling, TrainConfig, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(Error::InvalidParameter(format!(
                "side must be left or right, got {other}"
            ))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Which sides an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideSelector {
    Left,
    Right,
    Both,
}

impl SideSelector {
    pub const ALL: [SideSelector; 3] = [SideSelector::Left, SideSelector::Right, SideSelector::Both];

    pub fn admits(&self, side: Side) -> bool {
        match self {
            SideSelector::Left => side == Side::Left,
            SideSelector::Right => side == Side::Right,
            SideSelector::Both => true,
        }
    }
}

impl FromStr for SideSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(SideSelector::Left),
            "right" => Ok(SideSelector::Right),
            "both" => Ok(SideSelector::Both),
            other => Err(Error::InvalidParameter(format!(
                "side selector must be left, right, or both, got {other}"
            ))),
        }
    }
}

impl fmt::Display for SideSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SideSelector::Left => "left",
            SideSelector::Right => "right",
            SideSelector::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub subject_id: String,
    pub side: Side,
    pub label: i32,
    pub features: Vec<f64>,
}

/// Samples with unique ids and uniform feature length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::CrossValidation("empty dataset".into()));
        }
        let dim = samples[0].features.len();
        let mut seen = std::collections::HashSet::new();
        for s in &samples {
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::CrossValidation(format!(
                    "duplicate sample id {}",
                    s.sample_id
                )));
            }
            if s.label != 1 && s.label != -1 {
                return Err(Error::CrossValidation(format!(
                    "sample {}: label {} is not +1 or -1",
                    s.sample_id, s.label
                )));
            }
            if s.features.len() != dim {
                return Err(Error::FeatureLength {
                    expected: dim,
                    got: s.features.len(),
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.samples[0].features.len()
    }

    pub fn labels(&self) -> Vec<i32> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

/// Filters samples by side; `both` keeps everything. The result preserves
/// the input order.
pub fn side_split(data: &Dataset, selector: SideSelector) -> Result<Dataset> {
    let samples: Vec<Sample> = data
        .samples
        .iter()
        .filter(|s| selector.admits(s.side))
        .cloned()
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no {selector} samples; check the side column of the manifest"
        )));
    }
    Dataset::new(samples)
}

/// Assigns each sample a fold index in 0..k, stratified by label.
///
/// Per class, indices are shuffled with the seed and dealt round-robin, so
/// fold class counts differ by at most one and the assignment depends only
/// on (label order, k, seed).
pub fn stratified_kfold(labels: &[i32], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::CrossValidation(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut fold = vec![usize::MAX; labels.len()];
    for class in [-1, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::CrossValidation(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        let mut rng = rng_for(seed, "stratified-kfold", &[k as u64, class as u64]);
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            fold[i] = j % k;
        }
    }
    if fold.contains(&usize::MAX) {
        return Err(Error::CrossValidation(
            "labels must be +1 or -1 for stratification".into(),
        ));
    }
    Ok(fold)
}

/// Mann-Whitney AUC over (decision value, label) pairs: concordant pairs
/// count 1, ties count one half.
pub fn auc(decisions: &[(f64, i32)]) -> Result<f64> {
    let n_pos = decisions.iter().filter(|(_, y)| *y == 1).count();
    let n_neg = decisions.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::CrossValidation(
            "area under the curve needs both classes".into(),
        ));
    }
    if let Some((bad, _)) = decisions.iter().find(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite(format!("decision value {bad}")));
    }

    // Midranks: tied scores share the average of their rank range; the
    // rank-sum formulation equals pair counting exactly, half-integers
    // included.
    let mut order: Vec<usize> = (0..decisions.len()).collect();
    order.sort_by(|&a, &b| decisions[a].0.total_cmp(&decisions[b].0));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && decisions[order[j]].0 == decisions[order[i]].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j share the midrank.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if decisions[idx].1 == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve for the rule "positive when score >= threshold", one point
/// per distinct score, descending. A leading anchor repeats the top score
/// with rates (0, 0) so the curve starts at the origin.
pub fn roc_points(decisions: &[(f64, i32)]) -> Result<Vec<RocPoint>> {
    let n_pos = decisions.iter().filter(|(_, y)| *y == 1).count() as f64;
    let n_neg = decisions.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::CrossValidation(
            "an ROC curve needs both classes".into(),
        ));
    }
    let mut sorted: Vec<(f64, i32)> = decisions.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        threshold: sorted[0].0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n_neg,
            tpr: tp as f64 / n_pos,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub c: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub scaling: Scaling,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            repeats: 100,
            seed: 7,
            c: 1.0,
            eps: 0.1,
            max_iter: 1000,
            scaling: Scaling::MinMax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub samples: usize,
    pub per_repeat_accuracy: Vec<f64>,
    pub per_repeat_auc: Vec<f64>,
    pub accuracy_mean: f64,
    /// Sample standard deviation across repeats (0 for a single repeat).
    pub accuracy_std: f64,
    /// accuracy_std * 100, the "e-2" presentation.
    pub accuracy_std_e2: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub auc_std_e2: f64,
    /// fold_assignments[r][i] is the fold of sample i in repeat r.
    pub fold_assignments: Vec<Vec<usize>>,
    /// Pooled over every repeat's test decisions.
    pub roc: Vec<RocPoint>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Repeated stratified k-fold cross-validation.
///
/// Every repeat draws a fresh fold split; per fold, the scaler and model
/// see training rows only, and each test row contributes one pooled
/// decision value. Fold and trainer seeds derive from `cfg.seed` per
/// (repeat, fold), so the report is a pure function of dataset order and
/// config.
pub fn cross_validate(data: &Dataset, cfg: &CvConfig) -> Result<CvReport> {
    if cfg.repeats == 0 {
        return Err(Error::CrossValidation("repeats must be positive".into()));
    }
    let labels = data.labels();
    let n = data.len();

    let mut per_repeat_accuracy = Vec::with_capacity(cfg.repeats);
    let mut per_repeat_auc = Vec::with_capacity(cfg.repeats);
    let mut fold_assignments = Vec::with_capacity(cfg.repeats);
    let mut pooled: Vec<(f64, i32)> = Vec::with_capacity(cfg.repeats * n);

    for r in 0..cfg.repeats {
        let fold_of = stratified_kfold(&labels, cfg.k, derive_seed(cfg.seed, "cv-folds", &[r as u64]))?;
        let mut decisions: Vec<(f64, i32)> = Vec::with_capacity(n);
        let mut correct = 0usize;
        for fold in 0..cfg.k {
            let mut train_rows = Vec::new();
            let mut train_labels = Vec::new();
            for i in 0..n {
                if fold_of[i] != fold {
                    train_rows.push(data.samples[i].features.clone());
                    train_labels.push(labels[i]);
                }
            }
            let train_set = TrainingSet::new(&train_rows, &train_labels)?;
            let train_cfg = TrainConfig {
                c: cfg.c,
                eps: cfg.eps,
                max_iter: cfg.max_iter,
                seed: derive_seed(cfg.seed, "cv-train", &[r as u64, fold as u64]),
                scaling: cfg.scaling,
            };
            let (model, _) = train(&train_set, &train_cfg, vec![])?;
            for i in 0..n {
                if fold_of[i] == fold {
                    let value = model.decision_value(&data.samples[i].features)?;
                    if label_from_decision(value) == labels[i] {
                        correct += 1;
                    }
                    decisions.push((value, labels[i]));
                }
            }
        }
        per_repeat_accuracy.push(correct as f64 / n as f64);
        per_repeat_auc.push(auc(&decisions)?);
        fold_assignments.push(fold_of);
        pooled.extend(decisions);
    }

    let (accuracy_mean, accuracy_std) = mean_std(&per_repeat_accuracy);
    let (auc_mean, auc_std) = mean_std(&per_repeat_auc);
    Ok(CvReport {
        k: cfg.k,
        repeats: cfg.repeats,
        seed: cfg.seed,
        samples: n,
        per_repeat_accuracy,
        per_repeat_auc,
        accuracy_mean,
        accuracy_std,
        accuracy_std_e2: accuracy_std * 100.0,
        auc_mean,
        auc_std,
        auc_std_e2: auc_std * 100.0,
        fold_assignments,
        roc: roc_points(&pooled)?,
    })
}
