//! Surface group of the regular hyperbolic octagon in the Poincaré disk.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pole guard for `|cz + d|`.
pub const POLE_EPS: f64 = 1e-14;
/// Entrywise radius below which two group elements are identified.
pub const DEDUP_RADIUS: f64 = 1e-9;

/// Element of SU(1,1) acting on the unit disk by `z -> (az + b)/(cz + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self::from_ab(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Builds `[[a, b], [conj b, conj a]]`; the caller supplies `|a|^2 - |b|^2 = 1`.
    pub fn from_ab(a: Complex64, b: Complex64) -> Self {
        Self { a, b, c: b.conj(), d: a.conj() }
    }

    /// Rotation of the disk by `theta` about the origin.
    pub fn rotation(theta: f64) -> Self {
        Self::from_ab(Complex64::from_polar(1.0, theta / 2.0), Complex64::new(0.0, 0.0))
    }

    /// Hyperbolic translation of length `len` along the real diameter.
    pub fn translation(len: f64) -> Self {
        let h = len / 2.0;
        Self::from_ab(Complex64::new(h.cosh(), 0.0), Complex64::new(h.sinh(), 0.0))
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Projects back onto SU(1,1) form with unit determinant.
    pub fn renormalized(&self) -> Self {
        let a = (self.a + self.d.conj()) * 0.5;
        let b = (self.b + self.c.conj()) * 0.5;
        let s = (a.norm_sqr() - b.norm_sqr()).sqrt();
        Self::from_ab(a / s, b / s)
    }

    pub fn conjugate_by(&self, g: &MobiusMap) -> Self {
        *g * *self * g.inverse()
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        let den = self.c * z + self.d;
        let modulus = den.norm();
        if modulus <= POLE_EPS {
            return Err(Error::NearPole { modulus });
        }
        Ok((self.a * z + self.b) / den)
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let den = self.c * z + self.d;
        let modulus = den.norm();
        if modulus <= POLE_EPS {
            return Err(Error::NearPole { modulus });
        }
        Ok((den * den).inv())
    }

    /// Hyperbolic distance from 0 to its image.
    pub fn displacement(&self) -> f64 {
        2.0 * (self.b.norm() / self.d.norm()).atanh()
    }

    /// Image of 0 in hyperboloid coordinates; equal for `M` and `-M`.
    fn orbit_key(&self) -> Complex64 {
        self.a * self.b * 2.0
    }

    fn max_entry(&self) -> f64 {
        [self.a, self.b, self.c, self.d].iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn entry_distance(&self, other: &MobiusMap) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise distance between the classes of `M` and `-M`.
    pub fn projective_distance(&self, other: &MobiusMap) -> f64 {
        let neg = MobiusMap { a: -other.a, b: -other.b, c: -other.c, d: -other.d };
        self.entry_distance(other).min(self.entry_distance(&neg))
    }

    /// Same element of PSU(1,1) up to the dedup radius, scaled by the entry size.
    pub fn same_element(&self, other: &MobiusMap) -> bool {
        self.projective_distance(other) <= DEDUP_RADIUS * self.max_entry().max(1.0)
    }

    pub fn to_reals(&self) -> [f64; 8] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im,
        ]
    }
}

impl Mul for MobiusMap {
    type Output = MobiusMap;

    fn mul(self, r: MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
        .renormalized()
    }
}

/// Hyperbolic distance in the disk model.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let t = (z - w).norm() / (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    2.0 * t.min(1.0 - f64::EPSILON).atanh()
}

/// Hyperbolic area density `4 / (1 - |z|^2)^2`.
pub fn area_density(z: Complex64) -> f64 {
    let s = 1.0 - z.norm_sqr();
    4.0 / (s * s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidePairing {
    pub side: usize,
    pub partner: usize,
    /// Carries side `side` onto side `partner`.
    pub map: MobiusMap,
}

#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    pub genus: u32,
    /// Rotation conjugates of one translation; `generators[k]` carries side `k + 4` to side `k`.
    pub generators: Vec<MobiusMap>,
    pub side_pairings: Vec<SidePairing>,
    /// Octagon corners, counter-clockwise; side `s` runs from `vertices[s - 1]` to `vertices[s]`.
    pub vertices: Vec<Complex64>,
    neighbor_centers: Vec<Complex64>,
}

/// Builds the regular-octagon group. Only genus 2 is implemented.
pub fn octagon_group(genus: u32) -> Result<FuchsianGroup> {
    if genus != 2 {
        return Err(Error::UnsupportedGenus(genus));
    }
    let half_len = (1.0 + 2f64.sqrt()).acosh();
    let base = MobiusMap::translation(2.0 * half_len);
    let generators: Vec<MobiusMap> = (0..4)
        .map(|k| base.conjugate_by(&MobiusMap::rotation(k as f64 * PI / 4.0)))
        .collect();
    let side_pairings = (0..8)
        .map(|s| {
            let map = if s < 4 { generators[s].inverse() } else { generators[s - 4] };
            SidePairing { side: s, partner: (s + 4) % 8, map }
        })
        .collect::<Vec<_>>();
    let circum = (3.0 + 2.0 * 2f64.sqrt()).acosh();
    let rv = (circum / 2.0).tanh();
    let vertices = (0..8)
        .map(|k| Complex64::from_polar(rv, PI / 8.0 + k as f64 * PI / 4.0))
        .collect();
    let neighbor_centers = side_pairings
        .iter()
        .map(|p| p.map.inverse().b / p.map.inverse().d)
        .collect();
    Ok(FuchsianGroup { genus, generators, side_pairings, vertices, neighbor_centers })
}

impl FuchsianGroup {
    /// Generator letters: `x0..x3` followed by their inverses.
    pub fn letters(&self) -> Vec<MobiusMap> {
        let mut out = self.generators.clone();
        out.extend(self.generators.iter().map(|g| g.inverse()));
        out
    }

    /// Symplectic basis `(a1, b1, a2, b2)` whose commutator product is the boundary relator.
    pub fn symplectic_basis(&self) -> [MobiusMap; 4] {
        let [x0, x1, x2, x3] = [0, 1, 2, 3].map(|k| self.generators[k]);
        let (x1i, x3i) = (x1.inverse(), x3.inverse());
        [x0, x1i, x1i * x0 * x2, x3i * x2]
    }

    /// Entrywise distance of `[a1,b1][a2,b2]` from `±I`.
    pub fn relation_residual(&self) -> f64 {
        let [a1, b1, a2, b2] = self.symplectic_basis();
        let comm = |x: MobiusMap, y: MobiusMap| x * y * x.inverse() * y.inverse();
        (comm(a1, b1) * comm(a2, b2)).projective_distance(&MobiusMap::identity())
    }

    /// Entrywise distance of the octagon boundary word from `±I`.
    pub fn boundary_relation_residual(&self) -> f64 {
        let x = &self.generators;
        let w = x[0] * x[1].inverse() * x[2] * x[3].inverse() * x[0].inverse() * x[1] * x[2].inverse() * x[3];
        w.projective_distance(&MobiusMap::identity())
    }

    /// Largest distance between a mapped side endpoint and the partner side endpoint.
    pub fn side_pairing_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.side_pairings {
            let (u, v) = self.side_endpoints(p.side);
            let (pu, pv) = self.side_endpoints(p.partner);
            let iu = p.map.apply(u).unwrap_or(Complex64::new(f64::NAN, 0.0));
            let iv = p.map.apply(v).unwrap_or(Complex64::new(f64::NAN, 0.0));
            // orientation reverses across the gluing
            worst = worst.max((iu - pv).norm().max((iv - pu).norm()));
        }
        worst
    }

    pub fn side_endpoints(&self, side: usize) -> (Complex64, Complex64) {
        (self.vertices[(side + 7) % 8], self.vertices[side % 8])
    }

    /// Dirichlet-domain membership; boundary points belong to the lower-index side of a pair.
    pub fn in_fundamental_domain(&self, z: Complex64) -> bool {
        let d0 = hyperbolic_distance(z, Complex64::new(0.0, 0.0));
        for (s, c) in self.neighbor_centers.iter().enumerate() {
            let delta = d0 - hyperbolic_distance(z, *c);
            if delta > 1e-12 {
                return false;
            }
            if delta >= -1e-12 && s >= self.side_pairings[s].partner {
                return false;
            }
        }
        true
    }

    pub fn export(&self) -> GroupExport {
        GroupExport {
            genus: self.genus,
            generators: self.generators.iter().map(|g| g.to_reals()).collect(),
            symplectic_basis: self.symplectic_basis().iter().map(|g| g.to_reals()).collect(),
            side_pairings: self
                .side_pairings
                .iter()
                .map(|p| SidePairingExport { side: p.side, partner: p.partner, map: p.map.to_reals() })
                .collect(),
            relation_residual: self.relation_residual(),
            boundary_relation_residual: self.boundary_relation_residual(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidePairingExport {
    pub side: usize,
    pub partner: usize,
    pub map: [f64; 8],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupExport {
    pub genus: u32,
    pub generators: Vec<[f64; 8]>,
    pub symplectic_basis: Vec<[f64; 8]>,
    pub side_pairings: Vec<SidePairingExport>,
    pub relation_residual: f64,
    pub boundary_relation_residual: f64,
}

/// Limits applied while enumerating words.
#[derive(Debug, Clone, Copy)]
pub struct WordBudget {
    pub max_elements: usize,
    /// Words whose displacement exceeds this are neither kept nor extended.
    pub max_displacement: Option<f64>,
}

impl Default for WordBudget {
    fn default() -> Self {
        Self { max_elements: 2_000_000, max_displacement: None }
    }
}

/// Deduplicated group elements reachable by reduced words.
#[derive(Debug, Clone, Default)]
pub struct GroupWordSet {
    pub max_length: usize,
    pub max_displacement: Option<f64>,
    pub elements: Vec<MobiusMap>,
    /// Word length at which each element was first reached.
    pub lengths: Vec<usize>,
    index: HashMap<(i64, i64), Vec<usize>>,
}

fn cell_of(key: Complex64) -> (i64, i64) {
    (key.re.floor() as i64, key.im.floor() as i64)
}

impl GroupWordSet {
    fn empty(max_length: usize, max_displacement: Option<f64>) -> Self {
        Self { max_length, max_displacement, elements: Vec::new(), lengths: Vec::new(), index: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of an element equal to `m` up to sign and the dedup radius.
    pub fn find(&self, m: &MobiusMap) -> Option<usize> {
        let (cx, cy) = cell_of(m.orbit_key());
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.index.get(&(cx + dx, cy + dy)) {
                    if let Some(&i) = ids.iter().find(|&&i| self.elements[i].same_element(m)) {
                        return Some(i);
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, m: MobiusMap, len: usize) -> usize {
        let id = self.elements.len();
        self.index.entry(cell_of(m.orbit_key())).or_default().push(id);
        self.elements.push(m);
        self.lengths.push(len);
        id
    }
}

/// All reduced words of length `<= max_length`, deduplicated; also closed under inversion.
pub fn enumerate_words(group: &FuchsianGroup, max_length: usize, budget: WordBudget) -> Result<GroupWordSet> {
    let letters = group.letters();
    let inv = |l: usize| (l + 4) % 8;
    let mut set = GroupWordSet::empty(max_length, budget.max_displacement);
    set.insert(MobiusMap::identity(), 0);
    let mut last: Vec<Option<usize>> = vec![None];
    let mut frontier = vec![0usize];
    let check = |n: usize| if n > budget.max_elements { Err(Error::BudgetExceeded { cap: budget.max_elements }) } else { Ok(()) };

    for len in 1..=max_length {
        let mut next = Vec::new();
        for &idx in &frontier {
            for (l, letter) in letters.iter().enumerate() {
                if last[idx] == Some(inv(l)) {
                    continue;
                }
                let m = set.elements[idx] * *letter;
                if budget.max_displacement.is_some_and(|cap| m.displacement() > cap) {
                    continue;
                }
                if set.find(&m).is_some() {
                    continue;
                }
                let id = set.insert(m, len);
                last.push(Some(l));
                next.push(id);
                check(set.len())?;
            }
        }
        frontier = next;
    }

    // pruning by displacement can reach g without reaching g^-1
    for i in 0..set.len() {
        let m = set.elements[i].inverse();
        if set.find(&m).is_none() {
            let len = set.lengths[i];
            set.insert(m, len);
            check(set.len())?;
        }
    }
    Ok(set)
}
