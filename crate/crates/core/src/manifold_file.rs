//! JSON manifold descriptions with one-based indices.
//!
//! ```json
//! {
//!   "n": 2,
//!   "g": [[1,0,0,0],[0,1,0,0],[0,0,-1,0],[0,0,0,-1]],
//!   "J": [[0,0,-1,0],[0,0,0,-1],[1,0,0,0],[0,1,0,0]],
//!   "C": [{"i": 1, "j": 4, "k": 1, "value": 1.0}],
//!   "conformal": {"sigma": [1, -2, -2, -1], "factor": 2.0}
//! }
//! ```
//!
//! `J[k][i]` is the `e_k` coefficient of `J e_i`; a `C` entry puts `value·e_k`
//! into `[e_i, e_j]` and requires `i < j`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalShift;
use crate::error::{NordenError, Result};
use crate::manifold::{FrameManifold, MAX_DIM};
use crate::tensor::{Down, Tensor, Up};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalSpec {
    pub sigma: Vec<f64>,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldFile {
    pub n: usize,
    pub g: Vec<Vec<f64>>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    #[serde(rename = "C", default)]
    pub c: Vec<BracketEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<ConformalSpec>,
}

/// A parsed file: the manifold plus the optional conformal block.
#[derive(Debug, Clone)]
pub struct LoadedManifold {
    pub manifold: FrameManifold,
    pub conformal: Option<ConformalShift>,
}

fn schema(msg: String) -> NordenError {
    NordenError::Schema(msg)
}

fn check_matrix(name: &str, rows: &[Vec<f64>], d: usize) -> Result<()> {
    if rows.len() != d {
        return Err(schema(format!("field `{name}`: expected {d} rows, found {}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(schema(format!(
                "field `{name}[{}]`: expected {d} entries, found {}",
                r + 1,
                row.len()
            )));
        }
    }
    Ok(())
}

impl ManifoldFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            schema(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn from_manifold(m: &FrameManifold) -> Self {
        let d = m.dim();
        let rows = |t: &Tensor| (0..d).map(|a| (0..d).map(|b| t[[a, b]]).collect()).collect();
        let cs = m.structure_constants();
        let mut c = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                for k in 0..d {
                    let v = cs[[i, j, k]];
                    if v != 0.0 {
                        c.push(BracketEntry { i: i + 1, j: j + 1, k: k + 1, value: v });
                    }
                }
            }
        }
        Self { n: m.n(), g: rows(m.metric()), j: rows(m.complex_structure()), c, conformal: None }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifold serialization cannot fail")
    }

    /// Shape and index checks; geometric invariants are left to validation.
    pub fn build(&self) -> Result<LoadedManifold> {
        let d = 2 * self.n;
        if self.n == 0 || d > MAX_DIM {
            return Err(schema(format!("field `n`: must be in 1..={}, got {}", MAX_DIM / 2, self.n)));
        }
        check_matrix("g", &self.g, d)?;
        check_matrix("J", &self.j, d)?;
        let mut c = Tensor::zeros(d, &[Down, Down, Up]);
        for (pos, e) in self.c.iter().enumerate() {
            let at = format!("field `C[{pos}]`");
            for (name, v) in [("i", e.i), ("j", e.j), ("k", e.k)] {
                if v == 0 || v > d {
                    return Err(schema(format!("{at}.{name}: index {v} outside 1..={d}")));
                }
            }
            if e.i >= e.j {
                return Err(schema(format!("{at}: requires i < j, got i = {}, j = {}", e.i, e.j)));
            }
            c[[e.i - 1, e.j - 1, e.k - 1]] += e.value;
            c[[e.j - 1, e.i - 1, e.k - 1]] -= e.value;
        }
        let g = Tensor::from_fn(d, &[Down, Down], |ix| self.g[ix[0]][ix[1]]);
        let j = Tensor::from_fn(d, &[Up, Down], |ix| self.j[ix[0]][ix[1]]);
        let manifold = FrameManifold::new(self.n, g, j, c)?;
        let conformal = match &self.conformal {
            None => None,
            Some(spec) => {
                if spec.sigma.len() != d {
                    return Err(schema(format!(
                        "field `conformal.sigma`: expected {d} entries, found {}",
                        spec.sigma.len()
                    )));
                }
                if !(spec.factor > 0.0) {
                    return Err(schema(format!("field `conformal.factor`: must be positive, got {}", spec.factor)));
                }
                Some(ConformalShift::new(&manifold, spec.sigma.clone(), spec.factor).map_err(|e| {
                    schema(format!("field `conformal`: {e}"))
                })?)
            }
        };
        Ok(LoadedManifold { manifold, conformal })
    }
}

pub fn load_str(text: &str) -> Result<LoadedManifold> {
    ManifoldFile::parse(text)?.build()
}

pub fn load(path: &Path) -> Result<LoadedManifold> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
    load_str(&text)
}
