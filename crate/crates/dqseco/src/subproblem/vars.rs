//! Decision-variable containers shared by the preconditioner and the solvers.
//!
//! Flat layout: `[x_1..x_N, ξ_1..ξ_N, u_1..u_N, s]` for the primal and
//! `[w_1..w_{N-1}]` for the dual.

use nalgebra::SVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Primal<const NX: usize, const NU: usize> {
    pub x: Vec<SVector<f64, NX>>,
    pub xi: Vec<SVector<f64, NX>>,
    pub u: Vec<SVector<f64, NU>>,
    pub s: f64,
}

impl<const NX: usize, const NU: usize> Primal<NX, NU> {
    pub fn zeros(n: usize) -> Self {
        Self { x: vec![SVector::zeros(); n], xi: vec![SVector::zeros(); n], u: vec![SVector::zeros(); n], s: 0.0 }
    }

    pub fn nodes(&self) -> usize {
        self.x.len()
    }

    pub fn flat_len(n: usize) -> usize {
        n * (2 * NX + NU) + 1
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::flat_len(self.nodes()));
        self.x.iter().chain(&self.xi).for_each(|v| out.extend_from_slice(v.as_slice()));
        self.u.iter().for_each(|v| out.extend_from_slice(v.as_slice()));
        out.push(self.s);
        out
    }

    pub fn from_flat(z: &[f64], n: usize) -> Self {
        assert_eq!(z.len(), Self::flat_len(n));
        let x = (0..n).map(|k| SVector::from_column_slice(&z[k * NX..(k + 1) * NX])).collect();
        let o = n * NX;
        let xi = (0..n).map(|k| SVector::from_column_slice(&z[o + k * NX..o + (k + 1) * NX])).collect();
        let o = 2 * n * NX;
        let u = (0..n).map(|k| SVector::from_column_slice(&z[o + k * NU..o + (k + 1) * NU])).collect();
        Self { x, xi, u, s: z[z.len() - 1] }
    }

    pub fn inf_norm(&self) -> f64 {
        let m = |v: &[SVector<f64, NX>]| v.iter().map(|a| a.amax()).fold(0.0, f64::max);
        let mu = self.u.iter().map(|a| a.amax()).fold(0.0, f64::max);
        m(&self.x).max(m(&self.xi)).max(mu).max(self.s.abs())
    }

    pub fn diff_inf_norm(&self, o: &Self) -> f64 {
        let m = |a: &[SVector<f64, NX>], b: &[SVector<f64, NX>]| {
            a.iter().zip(b).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max)
        };
        let mu = self.u.iter().zip(&o.u).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max);
        m(&self.x, &o.x).max(m(&self.xi, &o.xi)).max(mu).max((self.s - o.s).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dual<const NX: usize> {
    pub w: Vec<SVector<f64, NX>>,
}

impl<const NX: usize> Dual<NX> {
    /// Dual for an `n`-node horizon (`n − 1` blocks).
    pub fn zeros(n: usize) -> Self {
        Self { w: vec![SVector::zeros(); n.saturating_sub(1)] }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().flat_map(|v| v.iter().copied()).collect()
    }

    pub fn from_flat(z: &[f64]) -> Self {
        Self { w: z.chunks(NX).map(SVector::from_column_slice).collect() }
    }

    pub fn inf_norm(&self) -> f64 {
        self.w.iter().map(|a| a.amax()).fold(0.0, f64::max)
    }

    pub fn diff_inf_norm(&self, o: &Self) -> f64 {
        self.w.iter().zip(&o.w).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max)
    }
}
