//! Real curvature operator on the exterior square of the tangent space, the
//! action of the complex structure on 2-vectors, and the kernel-integral
//! evaluation of the same quadratic form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::qdiff::BeltramiField;
use crate::surface::GreenKernel;

/// Real basis `(x_1..x_n, y_1..y_n)`; index `a < n` is `x_a`, otherwise `y_{a-n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WedgeBasis {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl WedgeBasis {
    pub fn new(n: usize) -> Self {
        let pairs = (0..2 * n).flat_map(|a| (a + 1..2 * n).map(move |b| (a, b))).collect();
        Self { n, pairs }
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Position of `e_a ^ e_b` with its orientation sign; `None` when `a == b`.
    pub fn index_of(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        if a == b {
            return None;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let m = 2 * self.n;
        Some((lo * m - lo * (lo + 1) / 2 + (hi - lo - 1), sign))
    }

    pub fn label(&self, k: usize) -> String {
        let name = |a: usize| if a < self.n { format!("x{}", a + 1) } else { format!("y{}", a - self.n + 1) };
        let (a, b) = self.pairs[k];
        format!("{}^{}", name(a), name(b))
    }
}

/// `R(e_a, e_b, e_c, e_d)` from the Hermitian tensor, keeping only type-balanced terms.
pub fn real_curvature(r: &CurvatureTensor, a: usize, b: usize, c: usize, d: usize) -> Result<f64> {
    let n = r.n();
    let split = |e: usize| -> Result<(usize, Complex64, Complex64)> {
        if e >= 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: e + 1 });
        }
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // (holomorphic coefficient, antiholomorphic coefficient)
        Ok(if e < n { (e, one, one) } else { (e - n, i, -i) })
    };
    let (i, ha, aa) = split(a)?;
    let (j, hb, ab) = split(b)?;
    let (k, hc, ac) = split(c)?;
    let (l, hd, ad) = split(d)?;
    let rijkl = r.get(i, j, k, l);
    let rijlk = r.get(i, j, l, k);
    let value = ha * ab * hc * ad * rijkl - ha * ab * ac * hd * rijlk + aa * hb * ac * hd * rijkl.conj()
        - aa * hb * hc * ad * rijlk.conj();
    let scale = r.symmetry.max_abs.max(f64::MIN_POSITIVE);
    if value.im.abs() > 1e-10 * scale {
        return Err(Error::TypeImbalance { residue: value.im.abs() / scale });
    }
    Ok(value.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WedgeOperator {
    pub n: usize,
    pub matrix: DMatrix<f64>,
    /// `max |Q - Q^T| / max |Q|` before symmetrization.
    pub symmetry_residual: f64,
}

impl WedgeOperator {
    pub fn from_matrix(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let m = WedgeBasis::new(n).dim();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: matrix.nrows() });
        }
        let scale = matrix.amax();
        let asym = (&matrix - matrix.transpose()).amax();
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { n, matrix: sym, symmetry_residual: if scale > 0.0 { asym / scale } else { 0.0 } })
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        (v.transpose() * &self.matrix * &v)[(0, 0)]
    }
}

pub fn assemble_q(r: &CurvatureTensor) -> Result<WedgeOperator> {
    let basis = WedgeBasis::new(r.n());
    let m = basis.dim();
    let mut q = DMatrix::zeros(m, m);
    for (s, &(a, b)) in basis.pairs.iter().enumerate() {
        for (t, &(c, d)) in basis.pairs.iter().enumerate() {
            q[(s, t)] = real_curvature(r, a, b, c, d)?;
        }
    }
    WedgeOperator::from_matrix(r.n(), q)
}

/// Induced action `e_a ^ e_b -> A e_a ^ A e_b` on 2-vectors.
pub fn exterior_square(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols());
    let dim = a.nrows();
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|x| (x + 1..dim).map(move |y| (x, y))).collect();
    let mut out = DMatrix::zeros(pairs.len(), pairs.len());
    for (col, &(p, q)) in pairs.iter().enumerate() {
        for (row, &(c, d)) in pairs.iter().enumerate() {
            out[(row, col)] = a[(c, p)] * a[(d, q)] - a[(d, p)] * a[(c, q)];
        }
    }
    out
}

/// Complex structure on the real basis: `J x_i = y_i`, `J y_i = -x_i`.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(n + i, i)] = 1.0;
        j[(i, n + i)] = -1.0;
    }
    j
}

pub fn j_wedge_matrix(n: usize) -> DMatrix<f64> {
    exterior_square(&complex_structure(n))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    pub tau_rel: f64,
    pub tau: f64,
    pub max_abs: f64,
    pub kernel_dim_expected: usize,
    /// Smallest eigenvalue magnitude above `tau`, divided by `tau`.
    pub gap_ratio: f64,
    pub max_eigenvalue: f64,
}

impl SpectrumReport {
    pub fn passes(&self) -> bool {
        self.positive == 0 && self.zero == self.kernel_dim_expected
    }
}

/// Sorted spectrum with zero counts; never fails.
pub fn analyze_spectrum(q: &WedgeOperator, tau_rel: f64) -> (SpectrumReport, DMatrix<f64>) {
    let eig = q.matrix.clone().symmetric_eigen();
    let m = q.matrix.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let max_abs = eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tau = tau_rel * max_abs;
    let negative = eigenvalues.iter().filter(|&&x| x < -tau).count();
    let positive = eigenvalues.iter().filter(|&&x| x > tau).count();
    let smallest_nonzero = eigenvalues.iter().map(|x| x.abs()).filter(|&x| x > tau).fold(f64::INFINITY, f64::min);
    let report = SpectrumReport {
        negative,
        zero: m - negative - positive,
        positive,
        tau_rel,
        tau,
        max_abs,
        kernel_dim_expected: q.n * q.n.saturating_sub(1),
        gap_ratio: if tau > 0.0 && smallest_nonzero.is_finite() { smallest_nonzero / tau } else { 0.0 },
        max_eigenvalue: eigenvalues.last().copied().unwrap_or(0.0),
        eigenvalues,
    };
    (report, vectors)
}

/// Spectrum with the sign and kernel-dimension assertions.
pub fn spectrum(q: &WedgeOperator, tau_rel: f64) -> Result<SpectrumReport> {
    let (report, _) = analyze_spectrum(q, tau_rel);
    if report.positive > 0 {
        return Err(Error::PositiveModeDetected { eigenvalue: report.max_eigenvalue, tau: report.tau });
    }
    if report.zero != report.kernel_dim_expected {
        return Err(Error::KernelDimMismatch { found: report.zero, expected: report.kernel_dim_expected });
    }
    Ok(report)
}

pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let mut out = String::from("index,eigenvalue,class\n");
    for (i, v) in report.eigenvalues.iter().enumerate() {
        let class = if *v > report.tau { "positive" } else if *v < -report.tau { "negative" } else { "zero" };
        out.push_str(&format!("{i},{v:.17e},{class}\n"));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    /// `||Q (I - J)||_F / ||Q||_F`.
    pub range_residual: f64,
    /// `||J^T Q J - Q||_F / ||Q||_F`.
    pub j_invariance: f64,
    pub rank: usize,
    pub expected_rank: usize,
}

impl KernelReport {
    pub fn passes(&self, tau_rel: f64) -> bool {
        self.range_residual <= tau_rel && self.rank == self.expected_rank
    }
}

/// Range and rank figures without asserting.
pub fn kernel_report(q: &WedgeOperator, jmat: &DMatrix<f64>, tau_rel: f64) -> Result<KernelReport> {
    let m = q.matrix.nrows();
    if jmat.nrows() != m || jmat.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, found: jmat.nrows() });
    }
    let norm = q.matrix.norm().max(f64::MIN_POSITIVE);
    let range = (&q.matrix * (DMatrix::identity(m, m) - jmat)).norm() / norm;
    let jinv = (jmat.transpose() * &q.matrix * jmat - &q.matrix).norm() / norm;
    let (spec, _) = analyze_spectrum(q, tau_rel);
    Ok(KernelReport {
        range_residual: range,
        j_invariance: jinv,
        rank: spec.negative + spec.positive,
        expected_rank: m - spec.kernel_dim_expected,
    })
}

pub fn kernel_check(q: &WedgeOperator, jmat: &DMatrix<f64>, tau_rel: f64) -> Result<KernelReport> {
    let report = kernel_report(q, jmat, tau_rel)?;
    if report.rank != report.expected_rank {
        let m = q.matrix.nrows();
        return Err(Error::KernelDimMismatch { found: m - report.rank, expected: m - report.expected_rank });
    }
    Ok(report)
}

/// `sum a_ij x_i^x_j + sum b_ij x_i^y_j + sum c_ij y_i^y_j` with real `n x n` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeElement {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl WedgeElement {
    pub fn zeros(n: usize) -> Self {
        Self { a: DMatrix::zeros(n, n), b: DMatrix::zeros(n, n), c: DMatrix::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut g = || DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self { a: g(), b: g(), c: g() }
    }

    /// Coordinates in the `WedgeBasis` ordering.
    pub fn coords(&self) -> Vec<f64> {
        let n = self.n();
        let basis = WedgeBasis::new(n);
        let mut x = vec![0.0; basis.dim()];
        for i in 0..n {
            for j in 0..n {
                if let Some((k, s)) = basis.index_of(i, j) {
                    x[k] += s * self.a[(i, j)];
                }
                if let Some((k, s)) = basis.index_of(n + i, n + j) {
                    x[k] += s * self.c[(i, j)];
                }
                let (k, s) = basis.index_of(i, n + j).unwrap();
                x[k] += s * self.b[(i, j)];
            }
        }
        x
    }

    /// Inverse of [`coords`](Self::coords) on the canonical representative (upper-triangular `a`, `c`).
    pub fn from_coords(n: usize, x: &[f64]) -> Self {
        let basis = WedgeBasis::new(n);
        let mut e = Self::zeros(n);
        for (k, &(p, q)) in basis.pairs.iter().enumerate() {
            match (p < n, q < n) {
                (true, true) => e.a[(p, q)] = x[k],
                (true, false) => e.b[(p, q - n)] = x[k],
                _ => e.c[(p - n, q - n)] = x[k],
            }
        }
        e
    }
}

/// Kernel-integral evaluation of `Q(A, A)` using the dense kernel for every smoothing step.
pub struct IntegralForm<'a> {
    /// `mu[(p, i)] = mu_i(z_p)`.
    mu: DMatrix<Complex64>,
    /// `w_p w_q G_pq`.
    wg: DMatrix<f64>,
    kernel: &'a GreenKernel,
}

/// Terms of the combined evaluation, kept separate for reporting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegralTerms {
    pub smoothing: f64,
    pub modulus: f64,
    pub exchange: f64,
}

impl IntegralTerms {
    pub fn total(&self) -> f64 {
        self.smoothing + self.modulus + self.exchange
    }
}

/// Node-pair function `L[p, q] = sum_a left[p, a] right[q, a]`.
#[derive(Debug, Clone)]
struct TwoPoint {
    left: DMatrix<Complex64>,
    right: DMatrix<Complex64>,
}

impl TwoPoint {
    fn conj(&self) -> Self {
        Self { left: self.left.map(|z| z.conj()), right: self.right.map(|z| z.conj()) }
    }

    fn transpose(&self) -> Self {
        Self { left: self.right.clone(), right: self.left.clone() }
    }

    fn diagonal(&self) -> Vec<Complex64> {
        (0..self.left.nrows()).map(|p| (0..self.left.ncols()).map(|a| self.left[(p, a)] * self.right[(p, a)]).sum()).collect()
    }

    fn dense(&self) -> DMatrix<Complex64> {
        &self.left * self.right.transpose()
    }
}

impl<'a> IntegralForm<'a> {
    pub fn new(basis: &[BeltramiField], kernel: &'a GreenKernel) -> Result<Self> {
        let np = kernel.len();
        for f in basis {
            if f.len() != np {
                return Err(Error::DimensionMismatch { expected: np, found: f.len() });
            }
        }
        let mu = DMatrix::from_fn(np, basis.len(), |p, i| basis[i].values[p]);
        let w = &kernel.weights;
        let wg = DMatrix::from_fn(np, np, |p, q| w[p] * w[q] * kernel.g[(p, q)]);
        Ok(Self { mu, wg, kernel })
    }

    pub fn kernel(&self) -> &GreenKernel {
        self.kernel
    }

    fn factored(&self, coeff: &DMatrix<Complex64>) -> TwoPoint {
        TwoPoint { left: self.mu.map(|z| z.conj()), right: &self.mu * coeff }
    }

    /// `K[p, q] = K(z_p, z_q) = sum_ij coeff_ij mu_i(z_q) conj(mu_j(z_p))`.
    pub fn two_point(&self, coeff: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.factored(coeff).dense()
    }

    fn real_coeff(m: &DMatrix<f64>) -> DMatrix<Complex64> {
        m.map(|v| Complex64::new(v, 0.0))
    }

    /// `W G` applied to the columns of a complex matrix.
    fn smooth_columns(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let re = &self.wg * m.map(|z| z.re);
        let im = &self.wg * m.map(|z| z.im);
        re.zip_map(&im, Complex64::new)
    }

    /// `int D(f) g dA` for node functions `f`, `g`.
    fn smooth_pair(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        let sf = self.smooth_columns(&DMatrix::from_column_slice(f.len(), 1, f));
        g.iter().zip(sf.iter()).map(|(a, b)| a * b).sum()
    }

    /// `sum_pq w_p w_q G_pq X_pq Y_pq`.
    fn double(&self, x: &TwoPoint, y: &TwoPoint) -> Complex64 {
        let np = x.left.nrows();
        let (nx, ny) = (x.left.ncols(), y.left.ncols());
        let right = DMatrix::from_fn(np, nx * ny, |q, k| x.right[(q, k / ny)] * y.right[(q, k % ny)]);
        let smoothed = self.smooth_columns(&right);
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..nx * ny {
            let (a, b) = (k / ny, k % ny);
            for p in 0..np {
                total += x.left[(p, a)] * y.left[(p, b)] * smoothed[(p, k)];
            }
        }
        total
    }

    /// Combined evaluation for coefficient matrices `d = a + c` and `b`.
    pub fn terms(&self, d: &DMatrix<f64>, b: &DMatrix<f64>) -> IntegralTerms {
        let i = Complex64::new(0.0, 1.0);
        let coeff = Self::real_coeff(d) + Self::real_coeff(b) * i;
        let l = self.factored(&coeff);
        let diag: Vec<Complex64> = l.diagonal().iter().map(|z| Complex64::new(z.im, 0.0)).collect();
        let smoothing = -4.0 * self.smooth_pair(&diag, &diag).re;
        let modulus = -2.0 * self.double(&l, &l.conj()).re;
        let exchange = 2.0 * self.double(&l, &l.transpose()).re;
        IntegralTerms { smoothing, modulus, exchange }
    }

    pub fn evaluate(&self, e: &WedgeElement) -> f64 {
        self.terms(&(&e.a + &e.c), &e.b).total()
    }

    /// Pure `x ^ x` (or `y ^ y`) element in its own closed form.
    pub fn pure_real(&self, a: &DMatrix<f64>) -> f64 {
        let f = self.factored(&Self::real_coeff(a));
        let diag: Vec<Complex64> = f.diagonal().iter().map(|z| z - z.conj()).collect();
        (self.smooth_pair(&diag, &diag) - 2.0 * self.double(&f, &f.conj()) + 2.0 * self.double(&f, &f.transpose())).re
    }

    /// Pure `x ^ y` element in its own closed form.
    pub fn pure_mixed(&self, b: &DMatrix<f64>) -> f64 {
        let h = self.factored(&Self::real_coeff(b));
        let diag: Vec<Complex64> = h.diagonal().iter().map(|z| z + z.conj()).collect();
        (-self.smooth_pair(&diag, &diag) - 2.0 * self.double(&h, &h.conj()) - 2.0 * self.double(&h, &h.transpose())).re
    }

    /// Cross term `Q(sum a x^x, sum b x^y)` from its stand-alone closed form.
    pub fn cross_closed_form(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let i = Complex64::new(0.0, 1.0);
        let f = self.factored(&Self::real_coeff(a));
        let h = self.factored(&Self::real_coeff(b));
        let fd: Vec<Complex64> = f.diagonal().iter().map(|z| z - z.conj()).collect();
        let hd: Vec<Complex64> = h.diagonal().iter().map(|z| z + z.conj()).collect();
        (i * self.smooth_pair(&fd, &hd)).re - 2.0 * self.double(&f, &h.conj()).im - 2.0 * self.double(&f, &h.transpose()).im
    }

    /// Cross term by polarization of the combined evaluation.
    pub fn cross_polarized(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let zero = DMatrix::zeros(a.nrows(), a.ncols());
        (self.terms(a, b).total() - self.terms(a, &zero).total() - self.terms(&zero, b).total()) / 2.0
    }

    /// `(|sum G L(z,w) L(w,z)|, sum G |L(z,w)|^2)` for coefficient matrix `coeff`.
    pub fn cauchy_schwarz(&self, coeff: &DMatrix<Complex64>) -> (f64, f64) {
        let l = self.factored(coeff);
        (self.double(&l, &l.transpose()).norm(), self.double(&l, &l.conj()).re)
    }

    /// Same pair as [`cauchy_schwarz`](Self::cauchy_schwarz) from dense node-pair matrices.
    pub fn cauchy_schwarz_dense(&self, coeff: &DMatrix<Complex64>) -> (f64, f64) {
        let l = self.two_point(coeff);
        let dense = |x: &DMatrix<Complex64>, y: &DMatrix<Complex64>| -> Complex64 {
            self.wg.iter().zip(x.iter()).zip(y.iter()).map(|((w, a), b)| a * b * *w).sum()
        };
        (dense(&l, &l.transpose()).norm(), dense(&l, &l.map(|z| z.conj())).re)
    }
}
