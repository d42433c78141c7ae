//! Holomorphic quadratic differentials from truncated Poincaré series, their
//! harmonic Beltrami representatives, and the Petersson Gram matrix.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{enumerate_words, FuchsianGroup, GroupWordSet, WordBudget};
use crate::surface::DiscreteSurface;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Series options. The word set is truncated both by word length and by displacement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub word_length: usize,
    pub max_displacement: Option<f64>,
    pub max_elements: usize,
    pub eps_auto: f64,
    pub max_degree: u32,
    pub probe_count: usize,
    pub probe_seed: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            word_length: 12,
            max_displacement: Some(13.0),
            max_elements: 2_000_000,
            eps_auto: 1e-5,
            max_degree: 8,
            probe_count: 20,
            probe_seed: 0x5eed,
        }
    }
}

/// `theta_k(z) = sum over words of (gz)^k g'(z)^2`.
#[derive(Debug, Clone)]
pub struct QuadDifferential {
    pub degree: u32,
    pub words: Arc<GroupWordSet>,
}

impl QuadDifferential {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        eval_degrees(&self.words, z, &[self.degree], usize::MAX)[0]
    }

    /// Sum restricted to words of length at most `max_len`.
    pub fn eval_truncated(&self, z: Complex64, max_len: usize) -> Complex64 {
        eval_degrees(&self.words, z, &[self.degree], max_len)[0]
    }
}

/// Evaluates several degrees at once, sharing the Möbius work per element.
pub fn eval_degrees(words: &GroupWordSet, z: Complex64, degrees: &[u32], max_len: usize) -> Vec<Complex64> {
    let mut acc = vec![ZERO; degrees.len()];
    for (g, &len) in words.elements.iter().zip(&words.lengths) {
        if len > max_len {
            continue;
        }
        let inv = (g.c * z + g.d).inv();
        let w = (g.a * z + g.b) * inv;
        let dd = inv * inv;
        let base = dd * dd;
        for (slot, &k) in acc.iter_mut().zip(degrees) {
            *slot += base * w.powu(k);
        }
    }
    acc
}

/// Harmonic Beltrami differential sampled on nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltramiField {
    pub values: Vec<Complex64>,
}

impl BeltramiField {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![ZERO; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// `conj(theta(z)) (1 - |z|^2)^2 / 4`.
pub fn beltrami_value(theta: Complex64, z: Complex64) -> Complex64 {
    let s = 1.0 - z.norm_sqr();
    theta.conj() * (s * s / 4.0)
}

pub fn beltrami_at(q: &QuadDifferential, points: &[Complex64]) -> BeltramiField {
    BeltramiField { values: points.par_iter().map(|&z| beltrami_value(q.eval(z), z)).collect() }
}

pub fn beltrami_from_qdiff(q: &QuadDifferential, surface: &DiscreteSurface) -> BeltramiField {
    beltrami_at(q, &surface.nodes)
}

/// All series sampled together on `points`; one field per series.
pub fn beltrami_fields(series: &[QuadDifferential], points: &[Complex64]) -> Vec<BeltramiField> {
    let Some(first) = series.first() else { return Vec::new() };
    let degrees: Vec<u32> = series.iter().map(|q| q.degree).collect();
    let rows: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|&z| eval_degrees(&first.words, z, &degrees, usize::MAX).into_iter().map(|t| beltrami_value(t, z)).collect())
        .collect();
    (0..series.len())
        .map(|i| BeltramiField { values: rows.iter().map(|r| r[i]).collect() })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesReport {
    pub element_count: usize,
    pub degrees: Vec<u32>,
    pub rejected: Vec<RejectedDegree>,
    /// Sup over probes of the relative change from word length `L - 1` to `L`.
    pub tail: f64,
    pub automorphy_residual: f64,
    pub beltrami_invariance_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedDegree {
    pub degree: u32,
    pub reason: String,
    pub probe_norm: f64,
}

#[derive(Debug, Clone)]
pub struct QdiffBasis {
    pub series: Vec<QuadDifferential>,
    pub report: SeriesReport,
}

/// Deterministic probe points, uniform in the Euclidean disk of radius 0.6 (inside the octagon).
pub fn probe_points(count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = 0.6 * rng.random::<f64>().sqrt();
            Complex64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
        })
        .collect()
}

/// Picks `dim` series of increasing monomial degree that are numerically independent on the probes.
pub fn build_qdiff_basis(group: &FuchsianGroup, dim: usize, opts: &SeriesOptions) -> Result<QdiffBasis> {
    let words = series_words(group, opts)?;
    build_qdiff_basis_with(group, words, dim, opts)
}

/// Word set sized by `opts`.
pub fn series_words(group: &FuchsianGroup, opts: &SeriesOptions) -> Result<Arc<GroupWordSet>> {
    if opts.word_length < 4 {
        return Err(Error::InvalidParameter(format!("word length {} < 4", opts.word_length)));
    }
    Ok(Arc::new(enumerate_words(
        group,
        opts.word_length,
        WordBudget { max_elements: opts.max_elements, max_displacement: opts.max_displacement },
    )?))
}

/// As [`build_qdiff_basis`] over a word set already enumerated to `opts.word_length`.
pub fn build_qdiff_basis_with(group: &FuchsianGroup, words: Arc<GroupWordSet>, dim: usize, opts: &SeriesOptions) -> Result<QdiffBasis> {
    if words.max_length != opts.word_length || opts.word_length < 4 {
        return Err(Error::InvalidParameter(format!(
            "word set of length {} does not match requested length {} (minimum 4)",
            words.max_length, opts.word_length
        )));
    }
    let probes = probe_points(opts.probe_count, opts.probe_seed);
    let all: Vec<u32> = (0..=opts.max_degree).collect();
    let samples: Vec<Vec<Complex64>> = probes.par_iter().map(|&z| eval_degrees(&words, z, &all, usize::MAX)).collect();
    let column = |k: usize| -> Vec<Complex64> { samples.iter().map(|s| s[k]).collect() };
    let sup = |v: &[Complex64]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);

    let scale = sup(&column(0)).max(1.0);
    let mut accepted: Vec<(u32, Vec<Complex64>)> = Vec::new();
    let mut ortho: Vec<Vec<Complex64>> = Vec::new();
    let mut rejected = Vec::new();
    for &k in &all {
        if accepted.len() == dim {
            break;
        }
        let v = column(k as usize);
        let norm = sup(&v);
        if norm <= 10.0 * opts.eps_auto * scale {
            rejected.push(RejectedDegree { degree: k, reason: "vanishes on probes".into(), probe_norm: norm });
            continue;
        }
        let mut r = v.clone();
        for e in &ortho {
            let dot: Complex64 = e.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            for (ri, ei) in r.iter_mut().zip(e) {
                *ri -= dot * ei;
            }
        }
        let l2 = |x: &[Complex64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let (rn, vn) = (l2(&r), l2(&v));
        if rn <= 1e-6 * vn {
            rejected.push(RejectedDegree { degree: k, reason: "dependent on lower degrees".into(), probe_norm: norm });
            continue;
        }
        ortho.push(r.iter().map(|x| x / rn).collect());
        accepted.push((k, v));
    }
    if accepted.len() < dim {
        return Err(Error::DegenerateBasis { ratio: 0.0 });
    }
    let degrees: Vec<u32> = accepted.iter().map(|(k, _)| *k).collect();

    let shorter: Vec<Vec<Complex64>> = probes
        .par_iter()
        .map(|&z| eval_degrees(&words, z, &degrees, opts.word_length - 1))
        .collect();
    let mut tail = 0.0f64;
    for (p, short) in shorter.iter().enumerate() {
        for (i, &k) in degrees.iter().enumerate() {
            let full = samples[p][k as usize];
            tail = tail.max((full - short[i]).norm() / full.norm().max(1.0));
        }
    }
    if tail > opts.eps_auto {
        return Err(Error::ConvergenceFailure { tail, tolerance: opts.eps_auto });
    }

    let mut automorphy = 0.0f64;
    let mut invariance = 0.0f64;
    let images: Vec<(Complex64, Complex64)> = probes
        .iter()
        .enumerate()
        .map(|(p, &z)| {
            let g = &group.side_pairings[p % group.side_pairings.len()].map;
            Ok((g.apply(z)?, g.derivative(z)?))
        })
        .collect::<Result<_>>()?;
    let at_images: Vec<Vec<Complex64>> = images.par_iter().map(|&(w, _)| eval_degrees(&words, w, &degrees, usize::MAX)).collect();
    for (p, &z) in probes.iter().enumerate() {
        let (w, dg) = images[p];
        for (i, &k) in degrees.iter().enumerate() {
            let here = samples[p][k as usize];
            let there = at_images[p][i];
            automorphy = automorphy.max((there * dg * dg - here).norm() / here.norm().max(1.0));
            let mu_z = beltrami_value(here, z);
            let mu_w = beltrami_value(there, w);
            invariance = invariance.max((mu_w * dg.conj() / dg - mu_z).norm() / mu_z.norm().max(1.0));
        }
    }
    if automorphy > opts.eps_auto {
        return Err(Error::ConvergenceFailure { tail: automorphy, tolerance: opts.eps_auto });
    }

    let series = degrees.iter().map(|&degree| QuadDifferential { degree, words: Arc::clone(&words) }).collect();
    Ok(QdiffBasis {
        series,
        report: SeriesReport {
            element_count: words.len(),
            degrees,
            rejected,
            tail,
            automorphy_residual: automorphy,
            beltrami_invariance_residual: invariance,
        },
    })
}

/// Hermitian Petersson Gram matrix `g_ij = sum_p w_p mu_i conj(mu_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<Complex64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn gram_matrix(basis: &[BeltramiField], weights: &[f64]) -> Result<GramMatrix> {
    let n = basis.len();
    for f in basis {
        if f.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: f.len() });
        }
    }
    let raw = DMatrix::from_fn(n, n, |i, j| {
        basis[i].values.iter().zip(&basis[j].values).zip(weights).map(|((a, b), w)| a * b.conj() * *w).sum::<Complex64>()
    });
    let entries = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let gram = GramMatrix { entries };
    if n > 0 {
        let ev = gram.eigenvalues();
        let (lo, hi) = (ev[0], ev[n - 1]);
        if hi <= 0.0 || lo <= 1e-10 * hi {
            return Err(Error::DegenerateBasis { ratio: if hi > 0.0 { lo / hi } else { 0.0 } });
        }
    }
    Ok(gram)
}

/// Upper-triangular `C` with `g = C^H C`; new fields are `C^{-H} mu`.
#[derive(Debug, Clone)]
pub struct ChangeOfBasis {
    pub c: DMatrix<Complex64>,
    /// Maps old fields to new ones: `new_i = sum_k transform[i,k] old_k`.
    pub transform: DMatrix<Complex64>,
}

pub fn orthonormalize(basis: &[BeltramiField], gram: &GramMatrix) -> Result<(Vec<BeltramiField>, ChangeOfBasis)> {
    let chol = gram.entries.clone().cholesky().ok_or(Error::DegenerateBasis { ratio: 0.0 })?;
    let lower = chol.l();
    let n = lower.nrows();
    let transform = lower
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateBasis { ratio: 0.0 })?;
    let len = basis.first().map_or(0, |f| f.len());
    let fields = (0..n)
        .map(|i| BeltramiField {
            values: (0..len).map(|p| (0..n).map(|k| transform[(i, k)] * basis[k].values[p]).sum()).collect(),
        })
        .collect();
    Ok((fields, ChangeOfBasis { c: lower.adjoint(), transform }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisExport {
    pub config_hash: String,
    pub degrees: Vec<u32>,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// `fields[i][p] = [re, im]` of field `i` at node `p`.
    pub fields: Vec<Vec<[f64; 2]>>,
}

impl BasisExport {
    pub fn new(config_hash: &str, degrees: &[u32], nodes: &[Complex64], weights: &[f64], fields: &[BeltramiField]) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            degrees: degrees.to_vec(),
            nodes: nodes.iter().map(|z| [z.re, z.im]).collect(),
            weights: weights.to_vec(),
            fields: fields.iter().map(|f| f.values.iter().map(|v| [v.re, v.im]).collect()).collect(),
        }
    }
}
