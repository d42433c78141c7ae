//! Synthetic stand-ins for the surface data: random weighted point clouds with a
//! positive, symmetric, positive-definite Gaussian kernel and random fields.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_tensor, pairing_table};
use crate::error::{Error, Result};
use crate::qdiff::BeltramiField;
use crate::surface::GreenKernel;
use crate::wedge::{analyze_spectrum, assemble_q, j_wedge_matrix, kernel_report, KernelReport, SpectrumReport, WedgeOperator};

/// Diagonal regularization keeping the Gaussian kernel numerically definite.
pub const NUGGET: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub seed: u64,
    pub points: Vec<[f64; 2]>,
    pub kernel: GreenKernel,
    pub mu: Vec<BeltramiField>,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCheck {
    pub min_entry: f64,
    pub asymmetry: f64,
    /// Smallest eigenvalue of `W^{1/2} G W^{1/2}`.
    pub min_operator_eigenvalue: f64,
    pub min_weight: f64,
}

impl ModelCheck {
    pub fn passes(&self) -> bool {
        self.min_entry > 0.0 && self.asymmetry == 0.0 && self.min_operator_eigenvalue > 0.0 && self.min_weight > 0.0
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

pub fn random_surrogate(seed: u64, num_points: usize, n: usize) -> Result<SurrogateModel> {
    if n == 0 || num_points <= 2 * n * n {
        return Err(Error::InvalidParameter(format!("{num_points} points do not exceed 2n^2 = {} for n = {n}", 2 * n * n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 2]> = (0..num_points).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let weights: Vec<f64> = (0..num_points).map(|_| rng.random_range(0.5..1.5)).collect();
    let dist = |p: &[f64; 2], q: &[f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let bandwidth = median(
        (0..num_points).flat_map(|p| (p + 1..num_points).map(move |q| (p, q))).map(|(p, q)| dist(&points[p], &points[q])).collect(),
    );
    let g = DMatrix::from_fn(num_points, num_points, |p, q| {
        let d = dist(&points[p], &points[q]);
        (-d * d / (2.0 * bandwidth * bandwidth)).exp() + if p == q { NUGGET } else { 0.0 }
    });
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mu = (0..n)
        .map(|_| BeltramiField {
            values: (0..num_points)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * scale, im * scale)
                })
                .collect(),
        })
        .collect();
    Ok(SurrogateModel { seed, points, kernel: GreenKernel::new(g, weights)?, mu, bandwidth })
}

impl SurrogateModel {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn check(&self) -> ModelCheck {
        let w = &self.kernel.weights;
        let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let k = self.kernel.len();
        let op = DMatrix::from_fn(k, k, |p, q| s[p] * self.kernel.g[(p, q)] * s[q]);
        let ev = op.symmetric_eigenvalues();
        ModelCheck {
            min_entry: self.kernel.g.min(),
            asymmetry: (&self.kernel.g - self.kernel.g.transpose()).amax(),
            min_operator_eigenvalue: ev.min(),
            min_weight: w.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Same model with `eps` added to the kernel diagonal.
    pub fn with_diagonal_shift(&self, eps: f64) -> Self {
        let mut out = self.clone();
        for p in 0..out.kernel.len() {
            out.kernel.g[(p, p)] += eps;
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateRunReport {
    pub seed: u64,
    pub n: usize,
    pub model: ModelCheck,
    pub spectrum: SpectrumReport,
    pub kernel: KernelReport,
    /// Largest `|sum G L L^T| / sum G |L|^2` over random two-point coefficients.
    pub cauchy_schwarz_ratio: f64,
    /// Largest eigenvalue after shifting the kernel diagonal, relative to its own scale.
    pub shifted_max_eigenvalue_rel: f64,
}

impl SurrogateRunReport {
    pub fn passes(&self) -> bool {
        self.model.passes()
            && self.spectrum.passes()
            && self.kernel.range_residual <= self.spectrum.tau_rel
            && self.kernel.rank == self.kernel.expected_rank
            && self.cauchy_schwarz_ratio <= 1.0 + 1e-12
            && self.shifted_max_eigenvalue_rel <= self.spectrum.tau_rel
    }
}

fn operator_for(model: &SurrogateModel) -> Result<WedgeOperator> {
    let p = pairing_table(&model.mu, &model.kernel)?;
    assemble_q(&curvature_tensor(&p)?)
}

/// Computes every check without asserting.
pub fn analyze_model(model: &SurrogateModel, tau_rel: f64) -> Result<SurrogateRunReport> {
    let n = model.n();
    let q = operator_for(model)?;
    let (spectrum, _) = analyze_spectrum(&q, tau_rel);
    let kernel = kernel_report(&q, &j_wedge_matrix(n), tau_rel)?;

    let form = crate::wedge::IntegralForm::new(&model.mu, &model.kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0xc5);
    let mut cs = 0.0f64;
    for _ in 0..4 {
        let coeff = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let (cross, modulus) = form.cauchy_schwarz(&coeff);
        cs = cs.max(cross / modulus);
    }

    let shifted = operator_for(&model.with_diagonal_shift(0.1))?;
    let ev = shifted.matrix.symmetric_eigenvalues();
    let shifted_max_eigenvalue_rel = ev.max() / ev.amax().max(f64::MIN_POSITIVE);

    Ok(SurrogateRunReport {
        seed: model.seed,
        n,
        model: model.check(),
        spectrum,
        kernel,
        cauchy_schwarz_ratio: cs,
        shifted_max_eigenvalue_rel,
    })
}

/// Asserts the sign and kernel-dimension statements on one model.
pub fn run_property_suite(model: &SurrogateModel, tau_rel: f64) -> Result<SurrogateRunReport> {
    let report = analyze_model(model, tau_rel)?;
    if report.spectrum.positive > 0 {
        return Err(Error::PositiveModeDetected { eigenvalue: report.spectrum.max_eigenvalue, tau: report.spectrum.tau });
    }
    if report.spectrum.zero != report.spectrum.kernel_dim_expected || report.kernel.rank != report.kernel.expected_rank {
        return Err(Error::KernelDimMismatch { found: report.spectrum.zero, expected: report.spectrum.kernel_dim_expected });
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub n: usize,
    pub passed: bool,
    /// `max eigenvalue / max |eigenvalue|`; at most `tau_rel` when passing.
    pub eigenvalue_margin: f64,
    /// Zero count minus the expected kernel dimension.
    pub kernel_excess: i64,
    pub gap_ratio: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub config_hash: String,
    pub num_points: usize,
    pub tau_rel: f64,
    pub runs: Vec<SeedOutcome>,
    pub all_passed: bool,
    pub worst_eigenvalue_margin: f64,
    pub worst_kernel_excess: i64,
    pub min_gap_ratio: f64,
}

/// Runs seeds `0..seeds` for each `n`; parallel across runs, deterministic ordering.
pub fn run_suite(seeds: u64, ns: &[usize], num_points: usize, tau_rel: f64, config_hash: &str) -> SuiteSummary {
    let jobs: Vec<(usize, u64)> = ns.iter().flat_map(|&n| (0..seeds).map(move |s| (n, s))).collect();
    let runs: Vec<SeedOutcome> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let result = random_surrogate(seed, num_points, n).and_then(|m| analyze_model(&m, tau_rel));
            match result {
                Ok(r) => SeedOutcome {
                    seed,
                    n,
                    passed: r.passes() && r.spectrum.gap_ratio >= 1e2,
                    eigenvalue_margin: r.spectrum.max_eigenvalue / r.spectrum.max_abs.max(f64::MIN_POSITIVE),
                    kernel_excess: r.spectrum.zero as i64 - r.spectrum.kernel_dim_expected as i64,
                    gap_ratio: r.spectrum.gap_ratio,
                    error: None,
                },
                Err(e) => SeedOutcome {
                    seed,
                    n,
                    passed: false,
                    eigenvalue_margin: f64::NAN,
                    kernel_excess: 0,
                    gap_ratio: 0.0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    SuiteSummary {
        config_hash: config_hash.into(),
        num_points,
        tau_rel,
        all_passed: runs.iter().all(|r| r.passed),
        worst_eigenvalue_margin: runs.iter().map(|r| r.eigenvalue_margin).fold(f64::NEG_INFINITY, f64::max),
        worst_kernel_excess: runs.iter().map(|r| r.kernel_excess.abs()).max().unwrap_or(0),
        min_gap_ratio: runs.iter().map(|r| r.gap_ratio).fold(f64::INFINITY, f64::min),
        runs,
    }
}

/// Wall-clock seconds of `f`, for runtime budgets.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

/// Unit vector helper used by the kernel complement checks.
pub fn normalized(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 { v / n } else { v }
}
