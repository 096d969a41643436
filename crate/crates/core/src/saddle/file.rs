//! JSON problem files.
//!
//! ```json
//! { "n_x": 2, "n_y": 2,
//!   "G": [[0, 0, 1.0], [1, 1, 1.0]],
//!   "L": [1.0, 0.0],
//!   "M": "identity",
//!   "W": "identity",
//!   "blocks": [ {"coords": [0, 1], "kind": "ball", "params": {"radius": 1.0}},
//!               {"coords": [1, 2], "kind": "free"} ] }
//! ```
//!
//! Indices are 0-based and `coords` is the half-open range `[start, end)`. Duplicate
//! triplets are summed.

use std::path::Path;

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AdmissibleBlock, BlockKind, DiscreteSaddleProblem};
use crate::error::{Error, Result};

pub type Triplet = (usize, usize, f64);

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Triplets(Vec<Triplet>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(String),
    Diagonal(Vec<f64>),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BlockParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSpec {
    pub coords: [usize; 2],
    pub kind: String,
    #[serde(default)]
    pub params: BlockParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n_x: usize,
    pub n_y: usize,
    #[serde(rename = "G")]
    pub g: Vec<Triplet>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(rename = "M")]
    pub m: MatrixSpec,
    #[serde(rename = "W")]
    pub w: WeightSpec,
    pub blocks: Vec<BlockSpec>,
}

fn build_sparse(what: &str, rows: usize, cols: usize, triplets: &[Triplet]) -> Result<CsrMatrix<f64>> {
    let mut coo = CooMatrix::new(rows, cols);
    for &(i, j, v) in triplets {
        if i >= rows || j >= cols {
            return Err(Error::Parse(format!("{what} entry ({i}, {j}) outside {rows}×{cols}")));
        }
        if !v.is_finite() {
            return Err(Error::Parse(format!("{what} entry ({i}, {j}) is not finite")));
        }
        coo.push(i, j, v);
    }
    Ok(CsrMatrix::from(&coo))
}

fn missing(kind: &str, name: &str) -> Error {
    Error::Parse(format!("{kind} block needs parameter `{name}`"))
}

impl BlockSpec {
    pub fn to_block(&self) -> Result<AdmissibleBlock> {
        let [start, end] = self.coords;
        if end <= start {
            return Err(Error::Parse(format!("block coords [{start}, {end}) are empty")));
        }
        let p = &self.params;
        let kind = match self.kind.as_str() {
            "ball" => BlockKind::Ball { radius: p.radius.ok_or_else(|| missing("ball", "radius"))? },
            "deviatoric_ball" => BlockKind::DeviatoricBall {
                radius: p.radius.ok_or_else(|| missing("deviatoric_ball", "radius"))?,
                dim: p.dim.ok_or_else(|| missing("deviatoric_ball", "dim"))?,
            },
            "interval" => BlockKind::Interval {
                lo: p.lo.ok_or_else(|| missing("interval", "lo"))?,
                hi: p.hi.ok_or_else(|| missing("interval", "hi"))?,
            },
            "free" => BlockKind::Free,
            "zero" => BlockKind::Zero,
            other => return Err(Error::Parse(format!("unknown block kind `{other}`"))),
        };
        Ok(AdmissibleBlock::new(start, end - start, kind))
    }

    pub fn from_block(b: &AdmissibleBlock) -> Self {
        let mut params = BlockParams::default();
        let kind = match b.kind {
            BlockKind::Ball { radius } => {
                params.radius = Some(radius);
                "ball"
            }
            BlockKind::DeviatoricBall { radius, dim } => {
                params.radius = Some(radius);
                params.dim = Some(dim);
                "deviatoric_ball"
            }
            BlockKind::Interval { lo, hi } => {
                params.lo = Some(lo);
                params.hi = Some(hi);
                "interval"
            }
            BlockKind::Free => "free",
            BlockKind::Zero => "zero",
        };
        BlockSpec { coords: [b.start, b.start + b.len], kind: kind.into(), params }
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("problem file: {e}")))
    }

    pub fn into_problem(self) -> Result<DiscreteSaddleProblem> {
        if self.l.len() != self.n_y {
            return Err(Error::DimensionMismatch { what: "L", expected: self.n_y, got: self.l.len() });
        }
        let g = build_sparse("G", self.n_x, self.n_y, &self.g)?;
        let m = match &self.m {
            MatrixSpec::Named(s) if s == "identity" => CsrMatrix::identity(self.n_y),
            MatrixSpec::Named(s) => return Err(Error::Parse(format!("unknown M specification `{s}`"))),
            MatrixSpec::Triplets(t) => build_sparse("M", self.n_y, self.n_y, t)?,
        };
        let w = match &self.w {
            WeightSpec::Named(s) if s == "identity" => DVector::from_element(self.n_x, 1.0),
            WeightSpec::Named(s) => return Err(Error::Parse(format!("unknown W specification `{s}`"))),
            WeightSpec::Diagonal(d) => {
                if d.len() != self.n_x {
                    return Err(Error::DimensionMismatch { what: "W", expected: self.n_x, got: d.len() });
                }
                DVector::from_column_slice(d)
            }
        };
        let blocks = self.blocks.iter().map(BlockSpec::to_block).collect::<Result<Vec<_>>>()?;
        DiscreteSaddleProblem::new(g, DVector::from_vec(self.l), m, w, blocks)
    }

    /// Serializable description of an existing problem.
    pub fn from_problem(p: &DiscreteSaddleProblem) -> Self {
        let triplets = |a: &CsrMatrix<f64>| -> Vec<Triplet> { a.triplet_iter().map(|(i, j, v)| (i, j, *v)).collect() };
        ProblemFile {
            n_x: p.n_x(),
            n_y: p.n_y(),
            g: triplets(p.strain_map()),
            l: p.load().iter().copied().collect(),
            m: MatrixSpec::Triplets(triplets(p.y_gram())),
            w: WeightSpec::Diagonal(p.x_weights().iter().copied().collect()),
            blocks: p.blocks().iter().map(BlockSpec::from_block).collect(),
        }
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a problem file, returning the problem and the hash of the file contents.
pub fn load_problem(path: &Path) -> Result<(DiscreteSaddleProblem, String)> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let problem = ProblemFile::parse(text)?.into_problem()?;
    Ok((problem, sha256_hex(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const T2: &str = r#"{
        "n_x": 2, "n_y": 2,
        "G": [[0, 0, 1.0], [1, 1, 1.0]],
        "L": [1.0, 0.0],
        "M": "identity",
        "W": "identity",
        "blocks": [{"coords": [0, 1], "kind": "ball", "params": {"radius": 1.0}},
                   {"coords": [1, 2], "kind": "free"}]
    }"#;

    #[test]
    fn parses_t2() {
        let p = ProblemFile::parse(T2).unwrap().into_problem().unwrap();
        assert_eq!(p.n_x(), 2);
        assert_eq!(p.blocks()[0].kind, BlockKind::Ball { radius: 1.0 });
        assert_eq!(p.blocks()[1].kind, BlockKind::Free);
        assert!((p.load_dual_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_blocks_name_both() {
        let text = T2.replace("[1, 2], \"kind\": \"free\"", "[0, 2], \"kind\": \"free\"");
        let err = ProblemFile::parse(&text).unwrap().into_problem().unwrap_err();
        assert_eq!(err.to_string(), "blocks 0 and 1 overlap at coordinate 0");
    }

    #[test]
    fn rejects_unknown_kind_and_out_of_range() {
        let text = T2.replace("\"free\"", "\"cone\"");
        assert!(matches!(ProblemFile::parse(&text).unwrap().into_problem(), Err(Error::Parse(_))));
        let text = T2.replace("[1, 1, 1.0]", "[5, 1, 1.0]");
        assert!(matches!(ProblemFile::parse(&text).unwrap().into_problem(), Err(Error::Parse(_))));
        assert!(matches!(ProblemFile::parse("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn written_description_reads_back() {
        let p = ProblemFile::parse(T2).unwrap().into_problem().unwrap();
        let text = serde_json::to_string(&ProblemFile::from_problem(&p)).unwrap();
        let q = ProblemFile::parse(&text).unwrap().into_problem().unwrap();
        assert_eq!(q.blocks(), p.blocks());
        assert_eq!(q.load(), p.load());
    }
}
