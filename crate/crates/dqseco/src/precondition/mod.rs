//! Closed-form hypersphere preconditioning of the devectorized subproblem.
//!
//! With `W_state = [[w_tr + w_vse, −w_vse], [−w_vse, w_vse]]` acting on each
//! `(Δx_k, Δξ_k)` pair, the upper Cholesky factor is
//! `R = [[l_x1, l_x2], [0, l_ξ]]`. Hatted variables are `ẑ = L z` with `L`
//! built from `R`, `√w_tr` (controls) and `√w_tr_s` (dilation), so the
//! preconditioned objective is `½ λ ‖ẑ‖² + q̂ᵀ ẑ`.

pub mod dense;
pub mod spectral;

pub use spectral::{power_iteration, shifted_power_iteration, SpectralEstimate, SpectralSettings, SpectralRun};

use crate::audit;
use crate::subproblem::{Dual, Primal, ProductSet, SetError, Subproblem};
use nalgebra::{Matrix2, SMatrix, SVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreconditionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate dynamics: row {row} of interval {interval} is identically zero")]
    DegenerateRow { interval: usize, row: usize },
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Scalar Cholesky factors and their inverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCholesky {
    pub l_x1: f64,
    pub l_x2: f64,
    pub l_xi: f64,
    pub l_u: f64,
    pub l_s: f64,
    pub l_x1_inv: f64,
    pub l_x2_inv: f64,
    pub l_xi_inv: f64,
    pub l_u_inv: f64,
    pub l_s_inv: f64,
}

/// Closed-form factors for weights `w_tr`, `w_vse` (state pairs) and `w_tr_s` (dilation).
pub fn chol_state(w_tr: f64, w_vse: f64, w_tr_s: f64) -> Result<StateCholesky, PreconditionError> {
    for (n, v) in [("w_tr", w_tr), ("w_vse", w_vse), ("w_tr_s", w_tr_s)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(PreconditionError::InvalidConfig(format!("{n} must be positive, got {v}")));
        }
    }
    let l_x1 = (w_tr + w_vse).sqrt();
    let l_x2 = -w_vse / l_x1;
    let l_xi = (w_tr * w_vse).sqrt() / l_x1;
    let l_u = w_tr.sqrt();
    let l_s = w_tr_s.sqrt();
    Ok(StateCholesky {
        l_x1,
        l_x2,
        l_xi,
        l_u,
        l_s,
        l_x1_inv: 1.0 / l_x1,
        l_x2_inv: -l_x2 / (l_x1 * l_xi),
        l_xi_inv: 1.0 / l_xi,
        l_u_inv: 1.0 / l_u,
        l_s_inv: 1.0 / l_s,
    })
}

impl StateCholesky {
    pub fn r(&self) -> Matrix2<f64> {
        Matrix2::new(self.l_x1, self.l_x2, 0.0, self.l_xi)
    }

    pub fn r_inv(&self) -> Matrix2<f64> {
        Matrix2::new(self.l_x1_inv, self.l_x2_inv, 0.0, self.l_xi_inv)
    }

    /// `ẑ = L z`.
    pub fn lift<const NX: usize, const NU: usize>(&self, z: &Primal<NX, NU>) -> Primal<NX, NU> {
        Primal {
            x: z.x.iter().zip(&z.xi).map(|(x, xi)| x * self.l_x1 + xi * self.l_x2).collect(),
            xi: z.xi.iter().map(|xi| xi * self.l_xi).collect(),
            u: z.u.iter().map(|u| u * self.l_u).collect(),
            s: z.s * self.l_s,
        }
    }

    /// `z = L⁻¹ ẑ`.
    pub fn recover<const NX: usize, const NU: usize>(&self, zh: &Primal<NX, NU>) -> Primal<NX, NU> {
        Primal {
            x: zh.x.iter().zip(&zh.xi).map(|(x, xi)| x * self.l_x1_inv + xi * self.l_x2_inv).collect(),
            xi: zh.xi.iter().map(|xi| xi * self.l_xi_inv).collect(),
            u: zh.u.iter().map(|u| u * self.l_u_inv).collect(),
            s: zh.s * self.l_s_inv,
        }
    }
}

/// Preconditioned blocks of one interval. Row normalization is already applied.
///
/// Row `k`: `Â⁻x_k + â⁺∘x_{k+1} + Ê⁻ξ_k + ê⁺∘ξ_{k+1} + B̂⁻u_k + B̂⁺u_{k+1} + Ŝ s + d̂ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatBlocks<const NX: usize, const NU: usize> {
    pub a_minus: SMatrix<f64, NX, NX>,
    pub a_plus: SVector<f64, NX>,
    pub e_minus: SMatrix<f64, NX, NX>,
    pub e_plus: SVector<f64, NX>,
    pub b_minus: SMatrix<f64, NX, NU>,
    pub b_plus: SMatrix<f64, NX, NU>,
    pub s: SVector<f64, NX>,
    pub d: SVector<f64, NX>,
    /// Reciprocal row norms applied to this interval.
    pub row_scale: SVector<f64, NX>,
}

/// Preconditioned subproblem in hatted variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Hatted<const NX: usize, const NU: usize> {
    pub blocks: Vec<HatBlocks<NX, NU>>,
    pub q_x: Vec<SVector<f64, NX>>,
    pub q_xi: Vec<SVector<f64, NX>>,
    pub q_u: Vec<SVector<f64, NU>>,
    pub q_s: f64,
    pub x1_set: ProductSet,
    /// Entry 0 is unused: `ξ̂_1 = 0`.
    pub xi_sets: Vec<ProductSet>,
    pub u_sets: Vec<ProductSet>,
    pub s_set: ProductSet,
    pub chol: StateCholesky,
    pub lambda: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub spectral: Option<SpectralEstimate>,
}

/// How the cost scale `λ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// `λ = √(σ_min / 2)` from the shifted power iteration.
    Auto,
    /// Fixed `λ`; `σ_max` is still estimated.
    Fixed(f64),
}

/// Hatted blocks and sets before spectral estimation (`λ = 1`, costs unscaled by `λ`).
pub fn scale_blocks<const NX: usize, const NU: usize>(
    sub: &Subproblem<NX, NU>,
) -> Result<Hatted<NX, NU>, PreconditionError> {
    const { assert!(NX <= 15 && NU <= 15) };
    audit::record(NX, NX);
    sub.validate().map_err(|e| PreconditionError::InvalidConfig(e.to_string()))?;
    let w = &sub.weights;
    let c = chol_state(w.w_tr, w.w_vse, w.w_tr_s)?;
    let mut blocks = Vec::with_capacity(sub.a.len());
    for k in 0..sub.a.len() {
        let mut b = HatBlocks {
            a_minus: sub.a[k] * c.l_x1_inv,
            a_plus: SVector::repeat(-c.l_x1_inv),
            e_minus: sub.a[k] * c.l_x2_inv,
            e_plus: SVector::repeat(-c.l_x2_inv),
            b_minus: sub.b_minus[k] * c.l_u_inv,
            b_plus: sub.b_plus[k] * c.l_u_inv,
            s: sub.s[k] * c.l_s_inv,
            d: sub.d[k],
            row_scale: SVector::repeat(1.0),
        };
        for i in 0..NX {
            let n = b
                .a_minus
                .row(i)
                .amax()
                .max(b.e_minus.row(i).amax())
                .max(b.a_plus[i].abs())
                .max(b.e_plus[i].abs())
                .max(b.b_minus.row(i).amax())
                .max(b.b_plus.row(i).amax())
                .max(b.s[i].abs());
            if n == 0.0 {
                return Err(PreconditionError::DegenerateRow { interval: k, row: i });
            }
            let r = 1.0 / n;
            b.a_minus.row_mut(i).scale_mut(r);
            b.e_minus.row_mut(i).scale_mut(r);
            b.b_minus.row_mut(i).scale_mut(r);
            b.b_plus.row_mut(i).scale_mut(r);
            b.a_plus[i] *= r;
            b.e_plus[i] *= r;
            b.s[i] *= r;
            b.d[i] *= r;
            b.row_scale[i] = r;
        }
        blocks.push(b);
    }
    let n = sub.nodes();
    let q_x = sub.q_x.iter().map(|q| q * c.l_x1_inv).collect();
    let q_xi = (0..n).map(|k| sub.q_x[k] * c.l_x2_inv + sub.q_xi[k] * c.l_xi_inv).collect();
    let q_u = sub.q_u.iter().map(|q| q * c.l_u_inv).collect();
    Ok(Hatted {
        blocks,
        q_x,
        q_xi,
        q_u,
        q_s: sub.q_s * c.l_s_inv,
        x1_set: sub.x1_set.scaled(c.l_x1)?,
        xi_sets: sub.xi_sets.iter().map(|s| s.scaled(c.l_xi)).collect::<Result<_, _>>()?,
        u_sets: sub.u_sets.iter().map(|s| s.scaled(c.l_u)).collect::<Result<_, _>>()?,
        s_set: sub.s_set.scaled(c.l_s)?,
        chol: c,
        lambda: 1.0,
        sigma_max: 0.0,
        sigma_min: 0.0,
        spectral: None,
    })
}

/// Full preconditioning: block scaling, row normalization, spectral estimates, cost scaling.
pub fn precondition<const NX: usize, const NU: usize>(
    sub: &Subproblem<NX, NU>,
    settings: &SpectralSettings,
    mode: LambdaMode,
) -> Result<Hatted<NX, NU>, PreconditionError> {
    let mut h = scale_blocks(sub)?;
    let est = spectral::estimate_custom(&h, settings, mode)?;
    h.lambda = est.lambda;
    h.sigma_max = est.sigma_max;
    h.sigma_min = est.sigma_min;
    h.spectral = Some(est);
    let l = h.lambda;
    h.q_x.iter_mut().for_each(|q| *q *= l);
    h.q_xi.iter_mut().for_each(|q| *q *= l);
    h.q_u.iter_mut().for_each(|q| *q *= l);
    h.q_s *= l;
    Ok(h)
}

impl<const NX: usize, const NU: usize> Hatted<NX, NU> {
    pub fn nodes(&self) -> usize {
        self.q_x.len()
    }

    /// `Ĥ ẑ` (without `d̂`).
    pub fn apply_h(&self, z: &Primal<NX, NU>) -> Dual<NX> {
        let w = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                b.a_minus * z.x[k]
                    + b.a_plus.component_mul(&z.x[k + 1])
                    + b.e_minus * z.xi[k]
                    + b.e_plus.component_mul(&z.xi[k + 1])
                    + b.b_minus * z.u[k]
                    + b.b_plus * z.u[k + 1]
                    + b.s * z.s
            })
            .collect();
        Dual { w }
    }

    /// `Ĥᵀ η`.
    pub fn apply_ht(&self, eta: &Dual<NX>) -> Primal<NX, NU> {
        let mut z = Primal::zeros(self.nodes());
        for (k, (b, e)) in self.blocks.iter().zip(&eta.w).enumerate() {
            z.x[k] += b.a_minus.tr_mul(e);
            z.x[k + 1] += b.a_plus.component_mul(e);
            z.xi[k] += b.e_minus.tr_mul(e);
            z.xi[k + 1] += b.e_plus.component_mul(e);
            z.u[k] += b.b_minus.tr_mul(e);
            z.u[k + 1] += b.b_plus.tr_mul(e);
            z.s += b.s.dot(e);
        }
        z
    }

    /// `Ĥ ẑ + d̂`.
    pub fn residual(&self, z: &Primal<NX, NU>) -> Dual<NX> {
        let mut r = self.apply_h(z);
        for (r, b) in r.w.iter_mut().zip(&self.blocks) {
            *r += b.d;
        }
        r
    }

    /// Projects `ẑ` onto the hatted sets in place.
    pub fn project(&self, z: &mut Primal<NX, NU>) {
        self.x1_set.project(z.x[0].as_mut_slice());
        z.xi[0].fill(0.0);
        for k in 1..self.nodes() {
            self.xi_sets[k].project(z.xi[k].as_mut_slice());
        }
        for k in 0..self.nodes() {
            self.u_sets[k].project(z.u[k].as_mut_slice());
        }
        let mut s = [z.s];
        self.s_set.project(&mut s);
        z.s = s[0];
    }

    /// Largest violation of the hatted sets at `ẑ`.
    pub fn set_violation(&self, z: &Primal<NX, NU>) -> f64 {
        let mut v = self.x1_set.violation(z.x[0].as_slice()).max(z.xi[0].amax());
        for k in 1..self.nodes() {
            v = v.max(self.xi_sets[k].violation(z.xi[k].as_slice()));
        }
        for k in 0..self.nodes() {
            v = v.max(self.u_sets[k].violation(z.u[k].as_slice()));
        }
        v.max(self.s_set.violation(&[z.s]))
    }

    /// Flat-vector projection in the layout of [`Primal::to_flat`].
    pub fn project_flat(&self, z: &mut [f64]) {
        let mut p = Primal::<NX, NU>::from_flat(z, self.nodes());
        self.project(&mut p);
        z.copy_from_slice(&p.to_flat());
    }
}
