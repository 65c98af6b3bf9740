//! Linear support-vector classifier: squared-norm regularizer with hinge
//! loss, trained by dual coordinate descent, predicting by the sign of
//! w . f.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Row-major l x d feature matrix with +-1 labels.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    features: Vec<f64>,
    labels: Vec<f64>,
    l: usize,
    d: usize,
}

impl TrainingSet {
    pub fn new(rows: &[Vec<f64>], labels: &[i32]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::TrainingData(format!(
                "{} feature rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::TrainingData("empty training set".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::TrainingData("zero-length feature vectors".into()));
        }
        let mut features = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::FeatureLength {
                    expected: d,
                    got: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature value {bad} in row {i}")));
            }
            features.extend_from_slice(row);
        }
        for &y in labels {
            if y != 1 && y != -1 {
                return Err(Error::TrainingData(format!("label {y} is not +1 or -1")));
            }
        }
        if labels.iter().all(|&y| y == 1) || labels.iter().all(|&y| y == -1) {
            return Err(Error::TrainingData(
                "training needs both classes present".into(),
            ));
        }
        Ok(Self {
            features,
            labels: labels.iter().map(|&y| f64::from(y)).collect(),
            l: rows.len(),
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
}

/// Per-feature affine rescaling fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    mins: Vec<f64>,
    ranges: Vec<f64>,
}

impl Scaler {
    /// Min-max statistics over the rows; constant features get range 0 and
    /// later transform to 0.
    pub fn fit_min_max(data: &TrainingSet) -> Self {
        let d = data.dim();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for i in 0..data.len() {
            for (j, &v) in data.row(i).iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        let ranges = mins.iter().zip(&maxs).map(|(lo, hi)| hi - lo).collect();
        Self { mins, ranges }
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(self.mins.iter().zip(&self.ranges))
            .map(|(&v, (&min, &range))| {
                if range == 0.0 {
                    0.0
                } else {
                    (v - min) / range
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    None,
    #[default]
    MinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub schema_version: u32,
    pub c: f64,
    pub w: Vec<f64>,
    pub scaler: Option<Scaler>,
    pub feature_schema: Vec<String>,
}

impl SvmModel {
    /// Raw decision value w . f, applying the stored scaler first.
    pub fn decision_value(&self, f: &[f64]) -> Result<f64> {
        let scaled;
        let f = match &self.scaler {
            Some(s) => {
                if f.len() != s.dim() {
                    return Err(Error::FeatureLength {
                        expected: s.dim(),
                        got: f.len(),
                    });
                }
                scaled = s.apply(f);
                &scaled[..]
            }
            None => f,
        };
        if f.len() != self.w.len() {
            return Err(Error::FeatureLength {
                expected: self.w.len(),
                got: f.len(),
            });
        }
        Ok(dot(&self.w, f))
    }

    /// Sign of the decision value; an exact zero counts as +1.
    pub fn predict_label(&self, f: &[f64]) -> Result<i32> {
        Ok(label_from_decision(self.decision_value(f)?))
    }
}

/// The documented tie rule: 0 maps to +1.
pub fn label_from_decision(value: f64) -> i32 {
    if value < 0.0 {
        -1
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub scaling: Scaling,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            eps: 0.1,
            max_iter: 1000,
            seed: 0,
            scaling: Scaling::MinMax,
        }
    }
}

/// Solver byproducts kept for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct TrainDiagnostics {
    pub alphas: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    pub final_violation: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains by dual coordinate descent without shrinking.
///
/// Each epoch visits every example in a fresh seeded random permutation
/// and applies the box-clipped closed-form update; zero-norm rows are
/// skipped. Stops when the largest projected-gradient violation seen in an
/// epoch drops below `eps`, or after `max_iter` epochs.
pub fn train(
    data: &TrainingSet,
    cfg: &TrainConfig,
    feature_schema: Vec<String>,
) -> Result<(SvmModel, TrainDiagnostics)> {
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization constant must be positive, got {}",
            cfg.c
        )));
    }
    if !(cfg.eps.is_finite() && cfg.eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stopping tolerance must be positive, got {}",
            cfg.eps
        )));
    }
    if !feature_schema.is_empty() && feature_schema.len() != data.dim() {
        return Err(Error::FeatureLength {
            expected: data.dim(),
            got: feature_schema.len(),
        });
    }

    let scaler = match cfg.scaling {
        Scaling::None => None,
        Scaling::MinMax => Some(Scaler::fit_min_max(data)),
    };
    let scaled_rows: Option<Vec<Vec<f64>>> = scaler
        .as_ref()
        .map(|s| (0..data.len()).map(|i| s.apply(data.row(i))).collect());
    let row = |i: usize| -> &[f64] {
        match &scaled_rows {
            Some(rows) => &rows[i],
            None => data.row(i),
        }
    };

    let l = data.len();
    let c = cfg.c;
    let q_diag: Vec<f64> = (0..l).map(|i| dot(row(i), row(i))).collect();
    let mut alpha = vec![0.0f64; l];
    let mut w = vec![0.0f64; data.dim()];
    let mut order: Vec<usize> = (0..l).collect();
    let mut rng = rng_for(cfg.seed, "svm-permutation", &[]);

    let mut epochs = 0;
    let mut converged = false;
    let mut final_violation = f64::INFINITY;
    #[cfg(debug_assertions)]
    let mut prev_dual = dual_objective(&alpha, &w);

    for _ in 0..cfg.max_iter {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut max_violation = 0.0f64;
        for &i in &order {
            if q_diag[i] == 0.0 {
                continue;
            }
            let f_i = row(i);
            let y_i = data.label(i);
            let g = y_i * dot(&w, f_i) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg != 0.0 {
                let new_alpha = (alpha[i] - g / q_diag[i]).clamp(0.0, c);
                let delta = (new_alpha - alpha[i]) * y_i;
                if delta != 0.0 {
                    for (wj, fj) in w.iter_mut().zip(f_i) {
                        *wj += delta * fj;
                    }
                    alpha[i] = new_alpha;
                }
            }
        }

        #[cfg(debug_assertions)]
        {
            let dual = dual_objective(&alpha, &w);
            debug_assert!(
                dual >= prev_dual - 1e-6 * (1.0 + prev_dual.abs()),
                "dual objective decreased: {prev_dual} -> {dual}"
            );
            prev_dual = dual;
        }

        final_violation = max_violation;
        if max_violation < cfg.eps {
            converged = true;
            break;
        }
    }

    let model = SvmModel {
        schema_version: 1,
        c,
        w,
        scaler,
        feature_schema,
    };
    let diag = TrainDiagnostics {
        alphas: alpha,
        epochs,
        converged,
        final_violation,
    };
    Ok((model, diag))
}

/// Primal objective: 0.5 w.w + C * sum of hinge losses. Exposed for
/// convergence checks against reference minimizers.
pub fn primal_objective(w: &[f64], data: &TrainingSet, scaler: Option<&Scaler>, c: f64) -> f64 {
    let mut obj = 0.5 * dot(w, w);
    for i in 0..data.len() {
        let f = match scaler {
            Some(s) => s.apply(data.row(i)),
            None => data.row(i).to_vec(),
        };
        let margin = data.label(i) * dot(w, &f);
        obj += c * (1.0 - margin).max(0.0);
    }
    obj
}

#[cfg(debug_assertions)]
fn dual_objective(alpha: &[f64], w: &[f64]) -> f64 {
    alpha.iter().sum::<f64>() - 0.5 * dot(w, w)
}
