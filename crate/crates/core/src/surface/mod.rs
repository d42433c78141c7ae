//! Triangulated octagon with glued sides, lumped hyperbolic mass, flat P1
//! stiffness, and the smoothing operator `D = 2 (K + 2M)^{-1} M`.

mod green;
mod solver;
mod sparse;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use green::{green_kernel, GreenKernel, GreenReport, GreenSidecar};
pub use solver::{reverse_cuthill_mckee, SkylineCholesky};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::fuchsian::FuchsianGroup;
use crate::smoothing::SmoothingOperator;

const GLUE_TOL: f64 = 1e-9;

/// Hyperbolic midpoint of the geodesic segment `[p, q]`.
pub fn hyperbolic_midpoint(p: Complex64, q: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let qq = (q - p) / (one - p.conj() * q);
    let r = qq.norm();
    let m = if r == 0.0 { qq } else { qq * (1.0 / (1.0 + (1.0 - r * r).sqrt())) };
    (m + p) / (one + p.conj() * m)
}

/// Interior angle at `p` of the geodesic triangle `(p, q, r)`.
fn geodesic_angle(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let to = |z: Complex64| (z - p) / (one - p.conj() * z);
    (to(q) / to(r)).arg().abs()
}

/// Area of a geodesic triangle by its angle defect.
pub fn geodesic_triangle_area(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    std::f64::consts::PI - geodesic_angle(p, q, r) - geodesic_angle(q, r, p) - geodesic_angle(r, p, q)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentificationClass {
    pub node: usize,
    /// Raw (pre-gluing) positions merged into this node.
    pub members: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshQuality {
    /// Stiffness off-diagonals with the "wrong" (positive) sign.
    pub positive_offdiag_count: usize,
    pub max_positive_offdiag_ratio: f64,
    pub min_angle_deg: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSurface {
    pub level: u32,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
    /// Corner positions of each triangle in the fundamental-domain chart.
    pub chart: Vec<[Complex64; 3]>,
    pub identification: Vec<IdentificationClass>,
    /// Glued edges; after gluing two distinct edges may share both endpoints.
    pub edges: Vec<[usize; 2]>,
    pub laplacian: Option<CsrMatrix>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Refines the 8 central sectors of the octagon `level` times and glues paired sides.
pub fn build_mesh(group: &FuchsianGroup, level: u32, max_nodes: usize) -> Result<DiscreteSurface> {
    if !(1..=8).contains(&level) {
        return Err(Error::InvalidParameter(format!("mesh level {level} outside [1, 8]")));
    }
    let predicted = 4usize * 4usize.pow(level) - 2;
    if predicted > max_nodes {
        return Err(Error::MeshBudget { nodes: predicted, cap: max_nodes });
    }

    let mut raw = vec![Complex64::new(0.0, 0.0)];
    raw.extend(group.vertices.iter().copied());
    let mut sides: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); raw.len()];
    let mut boundary: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tris = Vec::new();
    for s in 0..8 {
        let (u, v) = (1 + (s + 7) % 8, 1 + s);
        tris.push([0, u, v]);
        boundary.insert((u.min(v), u.max(v)), s);
        sides[u].insert(s);
        sides[v].insert(s);
    }

    for _ in 0..level {
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut split = |a: usize, b: usize, raw: &mut Vec<Complex64>, sides: &mut Vec<BTreeSet<usize>>| -> usize {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                raw.push(hyperbolic_midpoint(raw[a], raw[b]));
                let mut tag = BTreeSet::new();
                if let Some(&s) = boundary.get(&key) {
                    tag.insert(s);
                }
                sides.push(tag);
                raw.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut next_boundary = HashMap::new();
        for &[p, q, r] in &tris {
            let pq = split(p, q, &mut raw, &mut sides);
            let qr = split(q, r, &mut raw, &mut sides);
            let rp = split(r, p, &mut raw, &mut sides);
            next.extend([[p, pq, rp], [q, qr, pq], [r, rp, qr], [pq, qr, rp]]);
            for (a, b, m) in [(p, q, pq), (q, r, qr), (r, p, rp)] {
                if let Some(&s) = boundary.get(&(a.min(b), a.max(b))) {
                    next_boundary.insert((a.min(m), a.max(m)), s);
                    next_boundary.insert((b.min(m), b.max(m)), s);
                }
            }
        }
        tris = next;
        boundary = next_boundary;
    }

    let mut uf = UnionFind((0..raw.len()).collect());
    let on_side = |s: usize| -> Vec<usize> { (0..raw.len()).filter(|&i| sides[i].contains(&s)).collect() };
    for s in 4..8 {
        let map = &group.side_pairings[s].map;
        let targets = on_side(s - 4);
        for i in on_side(s) {
            let w = map.apply(raw[i])?;
            let j = targets
                .iter()
                .copied()
                .find(|&j| (raw[j] - w).norm() <= GLUE_TOL)
                .ok_or_else(|| Error::InvalidParameter(format!("no gluing partner for node on side {s}")))?;
            uf.union(i, j);
        }
    }

    let mut raw_to_node = vec![usize::MAX; raw.len()];
    let mut nodes = Vec::new();
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..raw.len() {
        let root = uf.find(i);
        if raw_to_node[root] == usize::MAX {
            raw_to_node[root] = nodes.len();
            nodes.push(raw[root]);
        }
        raw_to_node[i] = raw_to_node[root];
        classes.entry(root).or_default().push(i);
    }
    if nodes.len() > max_nodes {
        return Err(Error::MeshBudget { nodes: nodes.len(), cap: max_nodes });
    }

    let mut weights = vec![0.0; nodes.len()];
    let mut triangles = Vec::with_capacity(tris.len());
    let mut chart = Vec::with_capacity(tris.len());
    for &[p, q, r] in &tris {
        let t = [raw_to_node[p], raw_to_node[q], raw_to_node[r]];
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::InvalidParameter("triangle with identified corners".into()));
        }
        let area = geodesic_triangle_area(raw[p], raw[q], raw[r]);
        for &v in &t {
            weights[v] += area / 3.0;
        }
        triangles.push(t);
        chart.push([raw[p], raw[q], raw[r]]);
    }
    let mut raw_edges = BTreeSet::new();
    for &[p, q, r] in &tris {
        for (a, b) in [(p, q), (q, r), (r, p)] {
            raw_edges.insert((a.min(b), a.max(b)));
        }
    }
    let edges = raw_edges
        .into_iter()
        .filter(|e| boundary.get(e).is_none_or(|&s| s < 4))
        .map(|(a, b)| [raw_to_node[a], raw_to_node[b]])
        .collect();
    let identification = classes
        .values()
        .filter(|m| m.len() > 1)
        .map(|m| IdentificationClass { node: raw_to_node[m[0]], members: m.iter().map(|&i| raw[i]).collect() })
        .collect();

    Ok(DiscreteSurface { level, nodes, weights, triangles, chart, identification, edges, laplacian: None })
}

/// Flat P1 stiffness of one triangle.
fn local_stiffness(z: &[Complex64; 3]) -> [[f64; 3]; 3] {
    let area2 = (z[1] - z[0]).re * (z[2] - z[0]).im - (z[1] - z[0]).im * (z[2] - z[0]).re;
    let grad = |i: usize| {
        let (a, b) = (z[(i + 1) % 3], z[(i + 2) % 3]);
        (a.im - b.im, b.re - a.re)
    };
    let mut k = [[0.0; 3]; 3];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let (gi, gj) = (grad(i), grad(j));
            *slot = (gi.0 * gj.0 + gi.1 * gj.1) / (2.0 * area2.abs());
        }
    }
    k
}

/// Stores the stiffness matrix `K`; the discrete Laplacian is `-M^{-1} K`.
pub fn assemble_laplacian(surface: &mut DiscreteSurface) -> Result<()> {
    if let Some((node, &weight)) = surface.weights.iter().enumerate().find(|(_, w)| **w <= 0.0) {
        return Err(Error::SingularMass { node, weight });
    }
    let mut trip = Vec::with_capacity(9 * surface.triangles.len());
    for (t, z) in surface.triangles.iter().zip(&surface.chart) {
        let k = local_stiffness(z);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((t[i], t[j], k[i][j]));
            }
        }
    }
    surface.laplacian = Some(CsrMatrix::from_triplets(surface.nodes.len(), trip));
    Ok(())
}

impl DiscreteSurface {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    pub fn stiffness(&self) -> Result<&CsrMatrix> {
        self.laplacian.as_ref().ok_or_else(|| Error::InvalidParameter("laplacian not assembled".into()))
    }

    /// `Delta_h f = -M^{-1} K f`.
    pub fn apply_laplacian(&self, f: &[f64]) -> Result<Vec<f64>> {
        let k = self.stiffness()?;
        if f.len() != k.n {
            return Err(Error::DimensionMismatch { expected: k.n, found: f.len() });
        }
        Ok(k.matvec(f).iter().zip(&self.weights).map(|(v, w)| -v / w).collect())
    }

    /// Eigenvalues of `-Delta_h`, ascending, with eigenvectors as columns (dense).
    pub fn laplacian_eigen(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let k = self.stiffness()?;
        let n = k.n;
        let s: Vec<f64> = self.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in k.row(i) {
                dense[(i, j)] = v * s[i] * s[j];
            }
        }
        let dense = (&dense + dense.transpose()) * 0.5;
        let eig = dense.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])] * s[r]);
        Ok((values, vectors))
    }

    pub fn quality(&self) -> Result<MeshQuality> {
        let k = self.stiffness()?;
        let mut count = 0;
        let mut ratio = 0.0f64;
        for i in 0..k.n {
            let diag = k.get(i, i);
            for (j, v) in k.row(i) {
                if j != i && v > 0.0 {
                    count += 1;
                    ratio = ratio.max(v / diag);
                }
            }
        }
        let mut min_angle = f64::INFINITY;
        for z in &self.chart {
            for i in 0..3 {
                let (a, b) = (z[(i + 1) % 3] - z[i], z[(i + 2) % 3] - z[i]);
                min_angle = min_angle.min((b / a).arg().abs().to_degrees());
            }
        }
        Ok(MeshQuality { positive_offdiag_count: count / 2, max_positive_offdiag_ratio: ratio, min_angle_deg: min_angle })
    }

    /// SHA-256 over node coordinates and weights.
    pub fn node_hash(&self) -> String {
        node_hash(&self.nodes, &self.weights)
    }

    pub fn export(&self, config_hash: &str) -> MeshExport {
        MeshExport {
            config_hash: config_hash.to_string(),
            level: self.level,
            nodes: self.nodes.iter().map(|z| [z.re, z.im]).collect(),
            weights: self.weights.clone(),
            triangles: self.triangles.clone(),
            identification: self
                .identification
                .iter()
                .map(|c| IdentificationExport { node: c.node, members: c.members.iter().map(|z| [z.re, z.im]).collect() })
                .collect(),
        }
    }
}

pub fn node_hash(nodes: &[Complex64], weights: &[f64]) -> String {
    let mut h = Sha256::new();
    for z in nodes {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    for w in weights {
        h.update(w.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentificationExport {
    pub node: usize,
    pub members: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshExport {
    pub config_hash: String,
    pub level: u32,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
    pub identification: Vec<IdentificationExport>,
}

/// `D f = 2 (K + 2M)^{-1} M f`, i.e. the solution `u` of `(Delta_h - 2) u = -2 f`.
#[derive(Debug, Clone)]
pub struct DOperator {
    weights: Vec<f64>,
    stiffness: CsrMatrix,
    factor: SkylineCholesky,
    pub tolerance: f64,
}

impl DOperator {
    pub fn new(surface: &DiscreteSurface) -> Result<Self> {
        let k = surface.stiffness()?.clone();
        let shifted = CsrMatrix::from_triplets(
            k.n,
            (0..k.n).flat_map(|i| k.row(i).map(move |(j, v)| (i, j, v))).chain(surface.weights.iter().enumerate().map(|(i, w)| (i, i, 2.0 * w))),
        );
        let factor = SkylineCholesky::factor(&shifted)?;
        Ok(Self { weights: surface.weights.clone(), stiffness: k, factor, tolerance: 1e-10 })
    }

    pub fn factor(&self) -> &SkylineCholesky {
        &self.factor
    }

    /// Weighted norm of `(Delta_h - 2) u + 2 f`.
    fn residual(&self, u: &[f64], f: &[f64]) -> Vec<f64> {
        let ku = self.stiffness.matvec(u);
        (0..u.len()).map(|p| -ku[p] / self.weights[p] - 2.0 * u[p] + 2.0 * f[p]).collect()
    }

    fn wnorm(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
    }
}

impl SmoothingOperator for DOperator {
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply_real(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.weights.len();
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.len() });
        }
        let rhs: Vec<f64> = f.iter().zip(&self.weights).map(|(v, w)| 2.0 * w * v).collect();
        let mut u = self.factor.solve(&rhs);
        let fnorm = self.wnorm(f);
        for _ in 0..3 {
            let r = self.residual(&u, f);
            let rn = self.wnorm(&r);
            if rn <= self.tolerance * fnorm {
                return Ok(u);
            }
            // (K + 2M) du = M r
            let corr = self.factor.solve(&r.iter().zip(&self.weights).map(|(v, w)| v * w).collect::<Vec<_>>());
            for (a, b) in u.iter_mut().zip(corr) {
                *a += b;
            }
        }
        let rn = self.wnorm(&self.residual(&u, f));
        if rn <= self.tolerance * fnorm {
            Ok(u)
        } else {
            Err(Error::SolverFailure(format!("residual {:e} above {:e}", rn / fnorm, self.tolerance)))
        }
    }
}
