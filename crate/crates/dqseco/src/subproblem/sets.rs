//! Closed-form Euclidean projections.
//!
//! Every set acts on a contiguous slice. A [`ProductSet`] is a Cartesian
//! product of sets over disjoint slices of one vector; coordinates not
//! covered by any part are free.

use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("box lower bound exceeds upper bound at component {0}")]
    EmptyBox(usize),
    #[error("negative ball radius {0}")]
    NegativeRadius(f64),
    #[error("zero halfspace normal")]
    ZeroNormal,
    #[error("ball requires a uniform scale across its slice")]
    NonUniformBallScale,
    #[error("scale factors must be positive and finite")]
    BadScale,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("affine subspace basis is degenerate")]
    DegenerateBasis,
}

/// `{z : M z = b}` stored both in equation form and as `origin + span(basis)`
/// with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    pub origin: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(cols: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SetError> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        // two passes keep the basis orthogonal to round-off
        for _ in 0..2 {
            for u in &out {
                let t = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= t * ui);
            }
        }
        let n = dot(&v, &v).sqrt();
        if n <= 1e-12 * dot(c, c).sqrt().max(f64::MIN_POSITIVE) {
            return Err(SetError::DegenerateBasis);
        }
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    Ok(out)
}

impl AffineSubspace {
    /// `origin + span(cols)` with equations `m z = b` describing the same set.
    pub fn new(origin: Vec<f64>, cols: &[Vec<f64>], m: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, SetError> {
        let n = origin.len();
        if cols.iter().any(|c| c.len() != n) || m.iter().any(|r| r.len() != n) || m.len() != b.len() {
            return Err(SetError::Dimension("affine subspace".into()));
        }
        Ok(Self { origin, basis: gram_schmidt(cols)?, m, b })
    }

    pub fn residual(&self, z: &[f64]) -> f64 {
        self.m
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| (dot(row, z) - bi).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Set {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `normalᵀ z ≤ offset`
    Halfspace { normal: Vec<f64>, offset: f64 },
    TwoHalfspaces { n1: Vec<f64>, o1: f64, n2: Vec<f64>, o2: f64 },
    Singleton { value: Vec<f64> },
    Affine(AffineSubspace),
}

fn project_halfspace(z: &mut [f64], n: &[f64], o: f64) {
    let v = dot(n, z) - o;
    if v > 0.0 {
        let t = v / dot(n, n);
        z.iter_mut().zip(n).for_each(|(zi, ni)| *zi -= t * ni);
    }
}

fn project_two(z: &mut [f64], n1: &[f64], o1: f64, n2: &[f64], o2: f64) {
    let v1 = dot(n1, z) - o1;
    let v2 = dot(n2, z) - o2;
    if v1 <= 0.0 && v2 <= 0.0 {
        return;
    }
    let nn1 = dot(n1, n1);
    let nn2 = dot(n2, n2);
    let n12 = dot(n1, n2);
    let apply = |z: &mut [f64], l1: f64, l2: f64| {
        for i in 0..z.len() {
            z[i] -= l1 * n1[i] + l2 * n2[i];
        }
    };
    if v1 > 0.0 {
        let t = v1 / nn1;
        if v2 - t * n12 <= 0.0 {
            return apply(z, t, 0.0);
        }
    }
    if v2 > 0.0 {
        let t = v2 / nn2;
        if v1 - t * n12 <= 0.0 {
            return apply(z, 0.0, t);
        }
    }
    let det = nn1 * nn2 - n12 * n12;
    if det <= 1e-14 * nn1 * nn2 {
        // parallel faces
        project_halfspace(z, n1, o1);
        project_halfspace(z, n2, o2);
        return;
    }
    // both faces active: land on face 1, then move along the part of n2
    // orthogonal to n1, evaluating each residual at the current point
    let t1 = v1 / nn1;
    z.iter_mut().zip(n1).for_each(|(zi, ni)| *zi -= t1 * ni);
    let c = n12 / nn1;
    let ww: f64 = n1.iter().zip(n2).map(|(a, b)| (b - c * a) * (b - c * a)).sum();
    let t2 = (dot(n2, z) - o2) / ww;
    for i in 0..z.len() {
        z[i] -= t2 * (n2[i] - c * n1[i]);
    }
}

impl Set {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SetError> {
        if lo.len() != hi.len() {
            return Err(SetError::Dimension("box bounds".into()));
        }
        if let Some(i) = lo.iter().zip(&hi).position(|(l, h)| l > h) {
            return Err(SetError::EmptyBox(i));
        }
        Ok(Set::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, SetError> {
        if !(radius >= 0.0) {
            return Err(SetError::NegativeRadius(radius));
        }
        Ok(Set::Ball { center, radius })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self, SetError> {
        if dot(&normal, &normal) == 0.0 {
            return Err(SetError::ZeroNormal);
        }
        Ok(Set::Halfspace { normal, offset })
    }

    pub fn two_halfspaces(n1: Vec<f64>, o1: f64, n2: Vec<f64>, o2: f64) -> Result<Self, SetError> {
        if dot(&n1, &n1) == 0.0 || dot(&n2, &n2) == 0.0 {
            return Err(SetError::ZeroNormal);
        }
        if n1.len() != n2.len() {
            return Err(SetError::Dimension("halfspace normals".into()));
        }
        Ok(Set::TwoHalfspaces { n1, o1, n2, o2 })
    }

    pub fn dim(&self) -> usize {
        match self {
            Set::Box { lo, .. } => lo.len(),
            Set::Ball { center, .. } => center.len(),
            Set::Halfspace { normal, .. } => normal.len(),
            Set::TwoHalfspaces { n1, .. } => n1.len(),
            Set::Singleton { value } => value.len(),
            Set::Affine(a) => a.origin.len(),
        }
    }

    /// Euclidean projection, in place.
    pub fn project(&self, z: &mut [f64]) {
        match self {
            Set::Box { lo, hi } => {
                for i in 0..z.len() {
                    z[i] = z[i].max(lo[i]).min(hi[i]);
                }
            }
            Set::Ball { center, radius } => {
                let mut n2 = 0.0;
                for i in 0..z.len() {
                    let d = z[i] - center[i];
                    n2 += d * d;
                }
                let n = n2.sqrt();
                if n > *radius {
                    let k = radius / n;
                    for i in 0..z.len() {
                        z[i] = center[i] + (z[i] - center[i]) * k;
                    }
                }
            }
            Set::Halfspace { normal, offset } => project_halfspace(z, normal, *offset),
            Set::TwoHalfspaces { n1, o1, n2, o2 } => project_two(z, n1, *o1, n2, *o2),
            Set::Singleton { value } => z.copy_from_slice(value),
            Set::Affine(a) => {
                const MAXB: usize = 32;
                assert!(a.basis.len() <= MAXB);
                let mut t = [0.0; MAXB];
                for (j, u) in a.basis.iter().enumerate() {
                    t[j] = u.iter().zip(z.iter()).zip(&a.origin).map(|((ui, zi), oi)| ui * (zi - oi)).sum();
                }
                for i in 0..z.len() {
                    z[i] = a.origin[i];
                }
                for (j, u) in a.basis.iter().enumerate() {
                    for i in 0..z.len() {
                        z[i] += t[j] * u[i];
                    }
                }
            }
        }
    }

    /// Largest constraint violation at `z` (zero when inside).
    pub fn violation(&self, z: &[f64]) -> f64 {
        match self {
            Set::Box { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
                .fold(0.0, f64::max),
            Set::Ball { center, radius } => {
                let n = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                (n - radius).max(0.0)
            }
            Set::Halfspace { normal, offset } => (dot(normal, z) - offset).max(0.0),
            Set::TwoHalfspaces { n1, o1, n2, o2 } => {
                (dot(n1, z) - o1).max(dot(n2, z) - o2).max(0.0)
            }
            Set::Singleton { value } => z.iter().zip(value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            Set::Affine(a) => a.residual(z),
        }
    }

    /// Image of the set under `y = k ∘ (x − c)` with `k > 0`.
    pub fn map(&self, c: &[f64], k: &[f64]) -> Result<Set, SetError> {
        let n = self.dim();
        if c.len() != n || k.len() != n {
            return Err(SetError::Dimension(format!("map of {n}-dim set")));
        }
        if k.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(SetError::BadScale);
        }
        let aff = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| k[i] * (v[i] - c[i])).collect() };
        let uniform = k.iter().all(|v| *v == k[0]);
        Ok(match self {
            Set::Box { lo, hi } => Set::Box { lo: aff(lo), hi: aff(hi) },
            Set::Ball { center, radius } => {
                if !uniform {
                    return Err(SetError::NonUniformBallScale);
                }
                Set::Ball { center: aff(center), radius: radius * k[0] }
            }
            Set::Halfspace { normal, offset } => Set::Halfspace {
                normal: (0..n).map(|i| normal[i] / k[i]).collect(),
                offset: offset - dot(normal, c),
            },
            Set::TwoHalfspaces { n1, o1, n2, o2 } => Set::TwoHalfspaces {
                n1: (0..n).map(|i| n1[i] / k[i]).collect(),
                o1: o1 - dot(n1, c),
                n2: (0..n).map(|i| n2[i] / k[i]).collect(),
                o2: o2 - dot(n2, c),
            },
            Set::Singleton { value } => Set::Singleton { value: aff(value) },
            Set::Affine(a) => {
                let basis = if uniform {
                    a.basis.clone()
                } else {
                    let cols: Vec<Vec<f64>> =
                        a.basis.iter().map(|u| (0..n).map(|i| k[i] * u[i]).collect()).collect();
                    gram_schmidt(&cols)?
                };
                Set::Affine(AffineSubspace {
                    origin: aff(&a.origin),
                    basis,
                    m: a.m.iter().map(|row| (0..n).map(|i| row[i] / k[i]).collect()).collect(),
                    b: a.m.iter().zip(&a.b).map(|(row, bi)| bi - dot(row, c)).collect(),
                })
            }
        })
    }
}

/// One factor of a [`ProductSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub range: Range<usize>,
    pub set: Set,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductSet {
    pub dim: usize,
    pub parts: Vec<Part>,
}

impl ProductSet {
    pub fn free(dim: usize) -> Self {
        Self { dim, parts: Vec::new() }
    }

    pub fn singleton(value: &[f64]) -> Self {
        Self {
            dim: value.len(),
            parts: vec![Part { range: 0..value.len(), set: Set::Singleton { value: value.to_vec() } }],
        }
    }

    pub fn with(mut self, range: Range<usize>, set: Set) -> Result<Self, SetError> {
        if range.end > self.dim || set.dim() != range.len() {
            return Err(SetError::Dimension(format!("part {range:?} in {}-dim product", self.dim)));
        }
        if self.parts.iter().any(|p| p.range.start < range.end && range.start < p.range.end) {
            return Err(SetError::Dimension(format!("overlapping part {range:?}")));
        }
        self.parts.push(Part { range, set });
        Ok(self)
    }

    pub fn project(&self, z: &mut [f64]) {
        for p in &self.parts {
            p.set.project(&mut z[p.range.clone()]);
        }
    }

    pub fn violation(&self, z: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.set.violation(&z[p.range.clone()])).fold(0.0, f64::max)
    }

    pub fn map(&self, c: &[f64], k: &[f64]) -> Result<Self, SetError> {
        let parts = self
            .parts
            .iter()
            .map(|p| {
                Ok(Part { range: p.range.clone(), set: p.set.map(&c[p.range.clone()], &k[p.range.clone()])? })
            })
            .collect::<Result<Vec<_>, SetError>>()?;
        Ok(Self { dim: self.dim, parts })
    }

    /// Image under the uniform scaling `y = l x`.
    pub fn scaled(&self, l: f64) -> Result<Self, SetError> {
        self.map(&vec![0.0; self.dim], &vec![l; self.dim])
    }

    /// Image under the shift `y = x − c`.
    pub fn shifted(&self, c: &[f64]) -> Result<Self, SetError> {
        self.map(c, &vec![1.0; self.dim])
    }
}
