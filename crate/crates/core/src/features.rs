//! Feature-set selection: which of the three descriptor families a model
//! consumes, and how full feature rows map to column names and slices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptors::GeometricFeatures;
use crate::error::{Error, Result};

/// One of the seven non-empty combinations of descriptor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet {
    pub cnn: bool,
    pub hog: bool,
    pub geome: bool,
}

impl FeatureSet {
    pub const CNN: FeatureSet = FeatureSet { cnn: true, hog: false, geome: false };
    pub const HOG: FeatureSet = FeatureSet { cnn: false, hog: true, geome: false };
    pub const GEOME: FeatureSet = FeatureSet { cnn: false, hog: false, geome: true };

    /// Every selectable combination, singles first, full stack last.
    pub const ALL: [FeatureSet; 7] = [
        FeatureSet { cnn: true, hog: false, geome: false },
        FeatureSet { cnn: false, hog: true, geome: false },
        FeatureSet { cnn: false, hog: false, geome: true },
        FeatureSet { cnn: true, hog: true, geome: false },
        FeatureSet { cnn: true, hog: false, geome: true },
        FeatureSet { cnn: false, hog: true, geome: true },
        FeatureSet { cnn: true, hog: true, geome: true },
    ];
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.cnn {
            parts.push("cnn");
        }
        if self.hog {
            parts.push("hog");
        }
        if self.geome {
            parts.push("geome");
        }
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    /// Accepts `+`-joined family names in any order, e.g. `geome+cnn`,
    /// and `all` for the full stack.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(FeatureSet { cnn: true, hog: true, geome: true });
        }
        let mut set = FeatureSet { cnn: false, hog: false, geome: false };
        for token in s.split('+') {
            let slot = match token.trim().to_ascii_lowercase().as_str() {
                "cnn" => &mut set.cnn,
                "hog" => &mut set.hog,
                "geome" | "geo" => &mut set.geome,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown feature family {other:?}; expected cnn, hog, or geome"
                    )))
                }
            };
            if *slot {
                return Err(Error::InvalidParameter(format!(
                    "feature family repeated in {s:?}"
                )));
            }
            *slot = true;
        }
        if set == (FeatureSet { cnn: false, hog: false, geome: false }) {
            return Err(Error::InvalidParameter("empty feature set".into()));
        }
        Ok(set)
    }
}

/// Lengths of the descriptor blocks inside a full feature row. Rows are
/// always stored with every family present, ordered CNN, HOG, GEOME;
/// selection slices out the requested blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub cnn_len: usize,
    pub hog_len: usize,
}

impl FeatureLayout {
    pub fn total_len(&self) -> usize {
        self.cnn_len + self.hog_len + GeometricFeatures::LEN
    }

    /// Column names for a full row, in storage order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total_len());
        for i in 0..self.cnn_len {
            names.push(format!("cnn_{i:04}"));
        }
        for i in 0..self.hog_len {
            names.push(format!("hog_{i:04}"));
        }
        for i in 0..8 {
            names.push(format!("geo_shape_{i}"));
        }
        for i in 0..10 {
            names.push(format!("geo_block_{i}"));
        }
        names
    }

    pub fn selected_column_names(&self, set: FeatureSet) -> Vec<String> {
        let all = self.column_names();
        let mut names = Vec::new();
        if set.cnn {
            names.extend_from_slice(&all[..self.cnn_len]);
        }
        if set.hog {
            names.extend_from_slice(&all[self.cnn_len..self.cnn_len + self.hog_len]);
        }
        if set.geome {
            names.extend_from_slice(&all[self.cnn_len + self.hog_len..]);
        }
        names
    }

    pub fn selected_len(&self, set: FeatureSet) -> usize {
        let mut len = 0;
        if set.cnn {
            len += self.cnn_len;
        }
        if set.hog {
            len += self.hog_len;
        }
        if set.geome {
            len += GeometricFeatures::LEN;
        }
        len
    }

    /// Extracts the blocks named by `set` from a full row.
    pub fn select(&self, set: FeatureSet, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.total_len() {
            return Err(Error::FeatureLength {
                expected: self.total_len(),
                got: row.len(),
            });
        }
        let mut out = Vec::with_capacity(self.selected_len(set));
        if set.cnn {
            out.extend_from_slice(&row[..self.cnn_len]);
        }
        if set.hog {
            out.extend_from_slice(&row[self.cnn_len..self.cnn_len + self.hog_len]);
        }
        if set.geome {
            out.extend_from_slice(&row[self.cnn_len + self.hog_len..]);
        }
        Ok(out)
    }

    /// Assembles a full row from the three descriptor blocks.
    pub fn assemble(&self, cnn: &[f64], hog: &[f64], geome: &GeometricFeatures) -> Result<Vec<f64>> {
        if cnn.len() != self.cnn_len {
            return Err(Error::FeatureLength {
                expected: self.cnn_len,
                got: cnn.len(),
            });
        }
        if hog.len() != self.hog_len {
            return Err(Error::FeatureLength {
                expected: self.hog_len,
                got: hog.len(),
            });
        }
        let mut row = Vec::with_capacity(self.total_len());
        row.extend_from_slice(cnn);
        row.extend_from_slice(hog);
        row.extend_from_slice(&geome.concat());
        Ok(row)
    }
}
