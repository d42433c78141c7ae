//! Pairings `(ij, kl) = int D(mu_i conj mu_j) mu_k conj mu_l dA` and the curvature tensor
//! `R_{ij kl} = (ij, kl) + (il, kj)` (barred second and fourth slots).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qdiff::{BeltramiField, GramMatrix};
use crate::smoothing::SmoothingOperator;

/// Relative residual above which a tensor symmetry is treated as broken.
pub const SYMMETRY_LIMIT: f64 = 1e-7;

fn idx(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// Dense `n^4` table of complex values indexed `[i][j][k][l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    pub n: usize,
    pub entries: Vec<Complex64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![Complex64::new(0.0, 0.0); n.pow(4)] }
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.entries[idx(self.n, i, j, k, l)]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|f(i,j,k,l)|` over all indices, relative to `max_abs`.
    fn residual(&self, f: impl Fn(usize, usize, usize, usize) -> Complex64) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max(f(i, j, k, l).norm());
                    }
                }
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 { worst / scale } else { worst }
    }
}

pub type PairingTable = Tensor4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingSymmetry {
    /// `(ij, kl)` against `(kl, ij)`.
    pub swap: f64,
    /// `conj (ij, kl)` against `(ji, lk)`.
    pub conjugation: f64,
}

pub fn pairing_symmetry(p: &PairingTable) -> PairingSymmetry {
    PairingSymmetry {
        swap: p.residual(|i, j, k, l| p.get(i, j, k, l) - p.get(k, l, i, j)),
        conjugation: p.residual(|i, j, k, l| p.get(i, j, k, l).conj() - p.get(j, i, l, k)),
    }
}

/// One smoothing solve per unordered product pair; the mirrored pair is its conjugate.
pub fn pairing_table(basis: &[BeltramiField], op: &dyn SmoothingOperator) -> Result<PairingTable> {
    let n = basis.len();
    let w = op.weights();
    for f in basis {
        if f.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: w.len(), found: f.len() });
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let solved: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let prod: Vec<Complex64> = basis[i].values.iter().zip(&basis[j].values).map(|(a, b)| a * b.conj()).collect();
            op.apply_complex(&prod)
        })
        .collect::<Result<_>>()?;
    let mut smoothed = vec![Vec::new(); n * n];
    for (&(i, j), v) in pairs.iter().zip(solved) {
        smoothed[j * n + i] = v.iter().map(|z| z.conj()).collect();
        smoothed[i * n + j] = v;
    }
    let mut table = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let h = &smoothed[i * n + j];
            for k in 0..n {
                for l in 0..n {
                    table.entries[idx(n, i, j, k, l)] = (0..w.len())
                        .map(|p| h[p] * basis[k].values[p] * basis[l].values[p].conj() * w[p])
                        .sum();
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    pub tensor: Tensor4,
    pub symmetry: TensorSymmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSymmetry {
    /// `R_{ij kl}` against `R_{kj il}`.
    pub first_third: f64,
    /// `R_{ij kl}` against `R_{il kj}`.
    pub second_fourth: f64,
    /// `conj R_{ij kl}` against `R_{ji lk}`.
    pub conjugation: f64,
    pub max_abs: f64,
    /// `R_{ii ii}` for each `i`.
    pub diagonal: Vec<Complex64>,
}

impl TensorSymmetry {
    pub fn worst(&self) -> f64 {
        self.first_third.max(self.second_fourth).max(self.conjugation)
    }
}

impl CurvatureTensor {
    pub fn n(&self) -> usize {
        self.tensor.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.tensor.get(i, j, k, l)
    }
}

pub fn tensor_symmetry(r: &Tensor4) -> TensorSymmetry {
    TensorSymmetry {
        first_third: r.residual(|i, j, k, l| r.get(i, j, k, l) - r.get(k, j, i, l)),
        second_fourth: r.residual(|i, j, k, l| r.get(i, j, k, l) - r.get(i, l, k, j)),
        conjugation: r.residual(|i, j, k, l| r.get(i, j, k, l).conj() - r.get(j, i, l, k)),
        max_abs: r.max_abs(),
        diagonal: (0..r.n).map(|i| r.get(i, i, i, i)).collect(),
    }
}

pub fn curvature_tensor(p: &PairingTable) -> Result<CurvatureTensor> {
    let n = p.n;
    let mut r = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    r.entries[idx(n, i, j, k, l)] = p.get(i, j, k, l) + p.get(i, l, k, j);
                }
            }
        }
    }
    let symmetry = tensor_symmetry(&r);
    for (name, v) in [
        ("first/third slot exchange", symmetry.first_third),
        ("second/fourth slot exchange", symmetry.second_fourth),
        ("conjugation", symmetry.conjugation),
    ] {
        if v > SYMMETRY_LIMIT {
            return Err(Error::SymmetryViolation { name: name.into(), residual: v });
        }
    }
    Ok(CurvatureTensor { tensor: r, symmetry })
}

/// `-R_{ii ii} / g_{ii}^2`; negative for every genuine basis vector.
pub fn holomorphic_sectional(r: &CurvatureTensor, gram: &GramMatrix, i: usize) -> f64 {
    let g = gram.entries[(i, i)].re;
    -r.get(i, i, i, i).re / (g * g)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorExport {
    pub config_hash: String,
    pub n: usize,
    /// `[i, j, k, l, re, im]`.
    pub entries: Vec<[f64; 6]>,
    pub symmetry: TensorSymmetry,
    pub holomorphic_sectional: Vec<f64>,
}

impl TensorExport {
    pub fn new(config_hash: &str, r: &CurvatureTensor, sectional: Vec<f64>) -> Self {
        let n = r.n();
        let mut entries = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = r.get(i, j, k, l);
                        entries.push([i as f64, j as f64, k as f64, l as f64, v.re, v.im]);
                    }
                }
            }
        }
        Self { config_hash: config_hash.into(), n, entries, symmetry: r.symmetry.clone(), holomorphic_sectional: sectional }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::GreenKernel;
    use nalgebra::DMatrix;

    fn toy_kernel(n: usize) -> GreenKernel {
        let g = DMatrix::from_fn(n, n, |p, q| (-((p as f64 - q as f64) / 3.0).powi(2)).exp() + if p == q { 0.1 } else { 0.0 });
        GreenKernel::new(g, (0..n).map(|p| 0.5 + 0.1 * p as f64).collect()).unwrap()
    }

    fn field(n: usize, seed: f64) -> BeltramiField {
        BeltramiField { values: (0..n).map(|p| Complex64::new((seed * p as f64).sin(), (seed + p as f64).cos())).collect() }
    }

    #[test]
    fn single_field_gives_twice_the_pairing() {
        let k = toy_kernel(8);
        let p = pairing_table(&[field(8, 0.7)], &k).unwrap();
        let r = curvature_tensor(&p).unwrap();
        assert!((r.get(0, 0, 0, 0) - p.get(0, 0, 0, 0) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn zero_field_zeroes_its_slices() {
        let k = toy_kernel(8);
        let basis = [field(8, 0.7), BeltramiField::zeros(8)];
        let p = pairing_table(&basis, &k).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    assert_eq!(p.get(1, a, b, c).norm(), 0.0);
                    assert_eq!(p.get(a, b, c, 1).norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn diagonal_pairings_are_positive() {
        let k = toy_kernel(10);
        let basis = [field(10, 0.3), field(10, 1.1), field(10, 2.3)];
        let p = pairing_table(&basis, &k).unwrap();
        for i in 0..3 {
            for kk in 0..3 {
                let v = p.get(i, i, kk, kk);
                assert!(v.re > 0.0 && v.im.abs() < 1e-12 * v.re);
            }
        }
        let s = pairing_symmetry(&p);
        assert!(s.swap < 1e-12 && s.conjugation < 1e-12);
    }

    #[test]
    fn broken_table_is_rejected() {
        let mut p = Tensor4::zeros(2);
        p.entries[idx(2, 0, 1, 0, 0)] = Complex64::new(1.0, 0.0);
        assert!(matches!(curvature_tensor(&p), Err(Error::SymmetryViolation { .. })));
    }
}
