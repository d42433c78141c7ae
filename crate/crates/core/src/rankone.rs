//! Quaternionic hyperbolic curvature and checks on the 2-vector `v^Jv + Kv^Iv`:
//! its curvature value, invariance under the induced action of `J`, and its
//! distance from the range of `I - J` on 2-vectors.
//!
//! The null check is evaluated as stated and is not met by this tensor: on a
//! quaternionic line the curvature is constant `-4`, so `Q(w, w) = -4 |w|^2`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wedge::{complex_structure, j_wedge_matrix, WedgeBasis};

/// Triple of orthogonal complex structures on `R^{4m}` with `IJ = K`.
///
/// Basis order is `(x_1..x_2m, y_1..y_2m)` with `J x_a = y_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionicStructure {
    pub m: usize,
    pub i: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureCheck {
    pub squares: f64,
    pub product: f64,
    pub orthogonality: f64,
}

impl QuaternionicStructure {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("quaternionic dimension m must be at least 1".into()));
        }
        let half = 2 * m;
        let mut i = DMatrix::zeros(2 * half, 2 * half);
        for p in 0..m {
            let (x1, x2) = (2 * p, 2 * p + 1);
            let (y1, y2) = (half + x1, half + x2);
            i[(x2, x1)] = 1.0;
            i[(x1, x2)] = -1.0;
            i[(y2, y1)] = -1.0;
            i[(y1, y2)] = 1.0;
        }
        let j = complex_structure(half);
        let k = &i * &j;
        Ok(Self { m, i, j, k })
    }

    pub fn dim(&self) -> usize {
        4 * self.m
    }

    pub fn check(&self) -> StructureCheck {
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        let all = [&self.i, &self.j, &self.k];
        StructureCheck {
            squares: all.iter().map(|a| (*a * *a + &id).amax()).fold(0.0, f64::max),
            product: (&self.i * &self.j - &self.k).amax(),
            orthogonality: all.iter().map(|a| (a.transpose() * *a - &id).amax()).fold(0.0, f64::max),
        }
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    /// Curvature of the quaternionic space form with sectional curvature in `[-4, -1]`.
    pub fn curvature(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        for v in [x, y, z, w] {
            self.check_len(v)?;
        }
        let mut s = x.dot(z) * y.dot(w) - x.dot(w) * y.dot(z);
        for a in [&self.i, &self.j, &self.k] {
            let (az, aw, ay) = (a * z, a * w, a * y);
            s += x.dot(&az) * y.dot(&aw) - x.dot(&aw) * y.dot(&az) + 2.0 * x.dot(&ay) * z.dot(&aw);
        }
        Ok(-s)
    }

    /// Curvature operator on 2-vectors in the `WedgeBasis(2m)` ordering.
    pub fn wedge_operator(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let basis = WedgeBasis::new(dim / 2);
        let e = |a: usize| DVector::from_fn(dim, |r, _| if r == a { 1.0 } else { 0.0 });
        let m = basis.dim();
        let mut q = DMatrix::zeros(m, m);
        for (s, &(a, b)) in basis.pairs.iter().enumerate() {
            for (t, &(c, d)) in basis.pairs.iter().enumerate() {
                q[(s, t)] = self.curvature(&e(a), &e(b), &e(c), &e(d)).unwrap();
            }
        }
        q
    }
}

/// Coordinates of `u ^ v` in the `WedgeBasis` ordering.
pub fn wedge_of(u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let basis = WedgeBasis::new(u.len() / 2);
    DVector::from_iterator(basis.dim(), basis.pairs.iter().map(|&(a, b)| u[a] * v[b] - u[b] * v[a]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialMargins {
    pub m: usize,
    /// `|Q(w, w)|` through the assembled operator.
    pub null_residual: f64,
    /// `|R(v,Jv,v,Jv) + R(Kv,Iv,Kv,Iv) + 2 R(v,Jv,Kv,Iv)|`.
    pub expansion_residual: f64,
    /// `|R(Kv,Iv,Kv,Iv) - R(v,Jv,v,Jv)|`.
    pub pullback_residual: f64,
    /// `|R(v,Jv,Kv,Iv) + R(v,Jv,v,Jv)|`.
    pub cross_residual: f64,
    /// `||J w - w||`.
    pub fixed_residual: f64,
    /// `min_x ||(I - J) x - w||`.
    pub lsq_residual: f64,
    pub omega_norm: f64,
}

impl TrialMargins {
    pub fn passes(&self) -> bool {
        self.null_residual <= 1e-12
            && self.expansion_residual <= 1e-12
            && self.fixed_residual <= 1e-12
            && self.omega_norm > 0.0
            && self.lsq_residual >= self.omega_norm / 2.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma51Report {
    pub config_hash: String,
    pub structure: Vec<StructureCheck>,
    pub trials: Vec<TrialMargins>,
    pub passed: bool,
}

/// Runs `trials` random unit vectors for each dimension in `ms`.
pub fn lemma51_check(ms: &[usize], trials: usize, seed: u64, config_hash: &str) -> Result<Lemma51Report> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut structure = Vec::new();
    for &m in ms {
        let qs = QuaternionicStructure::new(m)?;
        structure.push(qs.check());
        let qmat = qs.wedge_operator();
        let jw = j_wedge_matrix(2 * m);
        let dim = jw.nrows();
        let lhs = DMatrix::identity(dim, dim) - &jw;
        let svd = lhs.clone().svd(true, true);
        for _ in 0..trials {
            let raw: DVector<f64> = DVector::from_fn(qs.dim(), |_, _| StandardNormal.sample(&mut rng));
            let v: DVector<f64> = &raw / raw.norm();
            let (iv, jv, kv) = (&qs.i * &v, &qs.j * &v, &qs.k * &v);
            let omega = wedge_of(&v, &jv) + wedge_of(&kv, &iv);
            let r = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>| qs.curvature(a, b, c, d);
            let base = r(&v, &jv, &v, &jv)?;
            let pulled = r(&kv, &iv, &kv, &iv)?;
            let cross = r(&v, &jv, &kv, &iv)?;
            let x = svd.solve(&omega, 1e-12).map_err(|e| Error::SolverFailure(e.to_string()))?;
            out.push(TrialMargins {
                m,
                null_residual: (omega.transpose() * &qmat * &omega)[(0, 0)].abs(),
                expansion_residual: (base + pulled + 2.0 * cross).abs(),
                pullback_residual: (pulled - base).abs(),
                cross_residual: (cross + base).abs(),
                fixed_residual: (&jw * &omega - &omega).norm(),
                lsq_residual: (&lhs * x - &omega).norm(),
                omega_norm: omega.norm(),
            });
        }
    }
    let passed = out.iter().all(TrialMargins::passes)
        && structure.iter().all(|s| s.squares <= 1e-12 && s.product <= 1e-12 && s.orthogonality <= 1e-12);
    Ok(Lemma51Report { config_hash: config_hash.into(), structure, trials: out, passed })
}
