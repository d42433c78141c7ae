use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DOperator, DiscreteSurface};
use crate::error::{Error, Result};
use crate::smoothing::SmoothingOperator;

/// Dense kernel with `(D f)_p = sum_q G_pq f_q w_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenKernel {
    pub g: DMatrix<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenReport {
    pub min_entry: f64,
    pub max_entry: f64,
    /// `max |G - G^T| / max |G|`.
    pub asymmetry: f64,
    /// `max_p |sum_q G_pq w_q - 1|`.
    pub row_sum_error: f64,
}

impl GreenReport {
    pub fn passes(&self) -> bool {
        self.min_entry > 0.0 && self.asymmetry <= 1e-8 && self.row_sum_error <= 1e-8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenSidecar {
    pub config_hash: String,
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub layout: String,
    pub node_hash: String,
}

/// Column `q` is `D(e_q) / w_q`, which equals `2 (K + 2M)^{-1} e_q`.
pub fn green_kernel(surface: &DiscreteSurface, op: &DOperator, max_nodes: usize) -> Result<GreenKernel> {
    let n = surface.len();
    if n > max_nodes {
        return Err(Error::KernelBudget { nodes: n, cap: max_nodes });
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|q| {
            let mut e = vec![0.0; n];
            e[q] = 2.0;
            op.factor().solve(&e)
        })
        .collect();
    let g = DMatrix::from_fn(n, n, |p, q| columns[q][p]);
    Ok(GreenKernel { g, weights: surface.weights.clone() })
}

impl GreenKernel {
    pub fn new(g: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        if g.nrows() != weights.len() || g.ncols() != weights.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: g.nrows() });
        }
        Ok(Self { g, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn validate(&self) -> GreenReport {
        let n = self.len();
        let max_abs = self.g.amax();
        let mut asym = 0.0f64;
        for p in 0..n {
            for q in 0..p {
                asym = asym.max((self.g[(p, q)] - self.g[(q, p)]).abs());
            }
        }
        let row_sum_error = (0..n)
            .map(|p| ((0..n).map(|q| self.g[(p, q)] * self.weights[q]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        GreenReport {
            min_entry: self.g.min(),
            max_entry: self.g.max(),
            asymmetry: if max_abs > 0.0 { asym / max_abs } else { 0.0 },
            row_sum_error,
        }
    }

    /// Writes little-endian row-major `f64` data and a JSON sidecar.
    pub fn write(&self, bin: &Path, sidecar: &Path, config_hash: &str, node_hash: &str) -> Result<()> {
        let n = self.len();
        let mut bytes = Vec::with_capacity(8 * n * n);
        for p in 0..n {
            for q in 0..n {
                bytes.extend_from_slice(&self.g[(p, q)].to_le_bytes());
            }
        }
        fs::write(bin, bytes)?;
        let meta = GreenSidecar {
            config_hash: config_hash.to_string(),
            rows: n,
            cols: n,
            dtype: "f64-le".into(),
            layout: "row-major".into(),
            node_hash: node_hash.to_string(),
        };
        fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    /// Reads a kernel written by [`GreenKernel::write`]; the node hash must match.
    pub fn read(bin: &Path, sidecar: &Path, weights: Vec<f64>, node_hash: &str) -> Result<Self> {
        let meta: GreenSidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
        if meta.node_hash != node_hash {
            return Err(Error::InvalidParameter("green kernel node hash does not match the surface".into()));
        }
        let bytes = fs::read(bin)?;
        if bytes.len() != 8 * meta.rows * meta.cols {
            return Err(Error::DimensionMismatch { expected: 8 * meta.rows * meta.cols, found: bytes.len() });
        }
        let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::new(DMatrix::from_row_slice(meta.rows, meta.cols, &vals), weights)
    }
}

impl SmoothingOperator for GreenKernel {
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply_real(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.len() });
        }
        let wf: Vec<f64> = f.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        Ok((0..n).map(|p| (0..n).map(|q| self.g[(p, q)] * wf[q]).sum()).collect())
    }
}
