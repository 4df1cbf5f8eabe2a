//! JSON documents for invariant block families and operator matrices.
//!
//! Blocks: `{"blocks": [{"ell": 0, "re": [[..]], "im": [[..]]}]}` with `im`
//! optional. Operators: `{"dim": n, "re": [..], "im": [..]}`, row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::OperatorMatrix;
use crate::linalg::CMat;
use crate::rotinv::InvariantBlocks;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDocument {
    pub ell: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl BlockDocument {
    pub fn from_matrix(ell: usize, m: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        BlockDocument {
            ell,
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.re.len();
        let square = |rows: &[Vec<f64>]| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !square(&self.re) {
            return Err(Error::Format(format!(
                "block ell={} is not square",
                self.ell
            )));
        }
        if let Some(im) = &self.im {
            if !square(im) {
                return Err(Error::Format(format!(
                    "imaginary part of block ell={} has the wrong shape",
                    self.ell
                )));
            }
        }
        Ok(CMat::from_fn(n, n, |r, c| {
            let im = self.im.as_ref().map_or(0.0, |im| im[r][c]);
            C64::new(self.re[r][c], im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksDocument {
    pub blocks: Vec<BlockDocument>,
}

impl BlocksDocument {
    pub fn from_blocks(blocks: &InvariantBlocks) -> Self {
        BlocksDocument {
            blocks: blocks
                .iter()
                .map(|(ell, b)| BlockDocument::from_matrix(ell, b))
                .collect(),
        }
    }

    /// Rejects duplicate `ell` entries.
    pub fn to_blocks(&self) -> Result<InvariantBlocks> {
        blocks_from_documents(&self.blocks)
    }
}

pub fn blocks_from_documents(docs: &[BlockDocument]) -> Result<InvariantBlocks> {
    let mut out = InvariantBlocks::new();
    for doc in docs {
        if out.get(doc.ell).is_some() {
            return Err(Error::Format(format!("block ell={} given twice", doc.ell)));
        }
        out.insert(doc.ell, doc.to_matrix()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl OperatorDocument {
    pub fn from_operator(op: &OperatorMatrix) -> Self {
        let m = op.matrix();
        let n = m.nrows();
        let entries = || (0..n).flat_map(move |r| (0..n).map(move |c| m[(r, c)]));
        OperatorDocument {
            dim: n,
            re: entries().map(|z| z.re).collect(),
            im: entries().map(|z| z.im).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.dim;
        if self.re.len() != n * n || self.im.len() != n * n {
            return Err(Error::Format(format!(
                "operator of dim {n} needs {} entries per part, found {} and {}",
                n * n,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMat::from_fn(n, n, |r, c| {
            C64::new(self.re[r * n + c], self.im[r * n + c])
        }))
    }
}

pub fn parse_blocks(json: &str) -> Result<InvariantBlocks> {
    serde_json::from_str::<BlocksDocument>(json)
        .map_err(|e| Error::Format(e.to_string()))?
        .to_blocks()
}

pub fn parse_operator(json: &str) -> Result<CMat> {
    serde_json::from_str::<OperatorDocument>(json)
        .map_err(|e| Error::Format(e.to_string()))?
        .to_matrix()
}
