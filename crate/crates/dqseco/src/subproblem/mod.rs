//! Convex subproblem construction: constraint sets, trigger logic,
//! linearized state constraints and assembly in deviation variables.

pub mod sets;
pub mod vars;

pub use sets::{AffineSubspace, Part, ProductSet, Set, SetError};
pub use vars::{Dual, Primal};

use crate::dynamics::{idx, ControlVec, DiscreteDynamics, StateVec, NU, NX};
use crate::quat::{DualQuat, Matrix8, Quat, Vector8};
use crate::seco::Scaling;
use nalgebra::{SMatrix, SVector, Vector3};
use std::f64::consts::{FRAC_PI_2, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible reference at node {node}: {what} window [{lo}, {hi}] is empty")]
    InfeasibleReference { node: usize, what: &'static str, lo: f64, hi: f64 },
    #[error("line of sight undefined at node {0}: vehicle is at the target")]
    UndefinedGeometry(usize),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Path-constraint bounds. Angles in radians, rates in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintParams {
    pub thrust_min: f64,
    pub thrust_max: f64,
    pub thrust_rate_max: f64,
    pub gimbal_max: f64,
    pub gimbal_rate_max: f64,
    pub azimuth_rate_max: f64,
    pub torque_max: f64,
    pub tilt_max: f64,
    pub tilt_stc: f64,
    pub rate_max: f64,
    pub rate_stc: f64,
    pub speed_max: f64,
    pub speed_stc: f64,
    pub altitude_min: f64,
    pub trigger_min: f64,
    pub trigger_max: f64,
    pub los_stc: f64,
    /// Unit sensor boresight in the body frame.
    pub sensor_body: Vector3<f64>,
}

impl ConstraintParams {
    /// Angle between the sensor boresight and the body z-axis (acute).
    pub fn boresight_angle(&self) -> f64 {
        let c = self.sensor_body.z.abs() / self.sensor_body.norm();
        c.min(1.0).acos()
    }

    pub fn validate(&self) -> Result<(), SubproblemError> {
        let fail = |m: &str| Err(SubproblemError::InvalidConfig(m.to_string()));
        let positive = [
            ("thrust_max", self.thrust_max),
            ("thrust_rate_max", self.thrust_rate_max),
            ("gimbal_max", self.gimbal_max),
            ("gimbal_rate_max", self.gimbal_rate_max),
            ("azimuth_rate_max", self.azimuth_rate_max),
            ("torque_max", self.torque_max),
            ("tilt_stc", self.tilt_stc),
            ("rate_stc", self.rate_stc),
            ("speed_stc", self.speed_stc),
            ("los_stc", self.los_stc),
            ("trigger_min", self.trigger_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SubproblemError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.thrust_min >= 0.0 && self.thrust_min <= self.thrust_max) {
            return fail("thrust_min must lie in [0, thrust_max]");
        }
        if !(self.trigger_min < self.trigger_max) {
            return fail("trigger_min must be below trigger_max");
        }
        if !(self.tilt_max > self.tilt_stc && self.rate_max > self.rate_stc && self.speed_max > self.speed_stc) {
            return fail("global tilt, rate and speed bounds must exceed their triggered counterparts");
        }
        if self.tilt_max > std::f64::consts::PI {
            return fail("tilt_max must not exceed 180 degrees");
        }
        if !((self.sensor_body.norm() - 1.0).abs() < 1e-9) {
            return fail("sensor_body must be a unit vector");
        }
        if self.tilt_stc > FRAC_PI_2 - self.los_stc - self.boresight_angle() + 1e-12 {
            return fail("tilt_stc too large for the sensor geometry: the triggered set would admit subsurface poses");
        }
        Ok(())
    }
}

/// Boundary data. Masses come from the vehicle parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub r_i: Vector3<f64>,
    pub v_i: Vector3<f64>,
    pub q_i: Quat,
    pub omega_i: Vector3<f64>,
    pub r_f: Vector3<f64>,
    pub vz_f: f64,
    pub q_f: Quat,
}

/// Quadratic-cost weights in scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub w_m: f64,
    pub w_tr: f64,
    pub w_tr_s: f64,
    pub w_vse: f64,
}

impl Weights {
    pub fn validate(&self) -> Result<(), SubproblemError> {
        for (n, v) in [("w_m", self.w_m), ("w_tr", self.w_tr), ("w_tr_s", self.w_tr_s), ("w_vse", self.w_vse)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SubproblemError::InvalidConfig(format!("weight {n} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `sgn((ρ_max − n)(n − ρ_min))`.
pub fn trigger(position_norm: f64, rho_min: f64, rho_max: f64) -> f64 {
    let p = (rho_max - position_norm) * (position_norm - rho_min);
    if p > 0.0 {
        1.0
    } else if p < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn window(node: usize, what: &'static str, lo: f64, hi: f64) -> Result<(f64, f64), SubproblemError> {
    if lo > hi + 1e-12 {
        return Err(SubproblemError::InfeasibleReference { node, what, lo, hi });
    }
    Ok(if lo > hi { (hi, hi) } else { (lo, hi) })
}

/// Magnitude and rate-window boxes on `(T, δ, φ)` plus the torque box.
///
/// Node 0 gets the magnitude bounds only; node `k` centers its rate window
/// on the reference control at node `k − 1`.
pub fn control_sets(us: &[ControlVec], s_ref: f64, c: &ConstraintParams) -> Result<Vec<ProductSet>, SubproblemError> {
    let n = us.len();
    if n < 2 {
        return Err(SubproblemError::InvalidConfig("need at least two nodes".into()));
    }
    let dt = s_ref / (n - 1) as f64;
    let torque = Set::boxed(vec![-c.torque_max; 3], vec![c.torque_max; 3])?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (mut lo, mut hi) = ([c.thrust_min, 0.0, 0.0], [c.thrust_max, c.gimbal_max, TAU]);
        if k > 0 {
            let p = &us[k - 1];
            let rates = [c.thrust_rate_max, c.gimbal_rate_max, c.azimuth_rate_max];
            let names = ["thrust", "gimbal", "azimuth"];
            for i in 0..3 {
                let (l, h) = window(k, names[i], lo[i].max(p[i] - rates[i] * dt), hi[i].min(p[i] + rates[i] * dt))?;
                lo[i] = l;
                hi[i] = h;
            }
        }
        let set = ProductSet::free(NU)
            .with(0..3, Set::boxed(lo.to_vec(), hi.to_vec())?)?
            .with(3..6, torque.clone())?;
        out.push(set);
    }
    Ok(out)
}

/// `M_g` with `q̂ᵀ M_g q̂` equal to the altitude `r · e_z`.
pub fn altitude_form() -> Matrix8 {
    let blk = Quat::new(0.0, 0.0, 1.0, 0.0).lmat();
    let mut m = Matrix8::zeros();
    m.fixed_view_mut::<4, 4>(4, 0).copy_from(&blk);
    m.fixed_view_mut::<4, 4>(0, 4).copy_from(&blk.transpose());
    m
}

/// `M_l` with `q̂ᵀ M_l q̂` equal to `r · p_I`, the boresight expressed inertially.
pub fn los_form(p_b: &Vector3<f64>) -> Matrix8 {
    let blk = Quat::pure(*p_b).rmat();
    let mut m = Matrix8::zeros();
    m.fixed_view_mut::<4, 4>(4, 0).copy_from(&blk);
    m.fixed_view_mut::<4, 4>(0, 4).copy_from(&blk.transpose());
    m
}

/// Linearized tilt bound `q̄₁₂ᵀ q₁₂ ≤ ‖q̄₁₂‖ sin(θ/2)`; `None` when `q̄₁₂ = 0`.
pub fn tilt_halfspace(dq: &DualQuat, sin_half: f64) -> Option<(Vec<f64>, f64)> {
    let a = [dq.real.v.x, dq.real.v.y];
    let n = (a[0] * a[0] + a[1] * a[1]).sqrt();
    if n == 0.0 {
        return None;
    }
    Some((a.to_vec(), n * sin_half))
}

/// Halfspace `nᵀ q̂ ≤ o` linearizing `q̂ᵀ M_g q̂ / ‖q‖² ≥ h_min` about `dq`.
///
/// The altitude is written as a degree-0 homogeneous function of `q̂` so that
/// the halfspace cannot be relaxed by scaling the pose off the unit manifold.
pub fn linearize_min_altitude(dq: &DualQuat, h_min: f64) -> (Vector8, f64) {
    let q = dq.to_vec8();
    let n2 = dq.real.norm().powi(2);
    let mg = altitude_form();
    let h = q.dot(&(mg * q)) / n2;
    let mut grad = mg * q * (2.0 / n2);
    for i in 0..4 {
        grad[i] -= 2.0 * h * q[i] / n2;
    }
    (-grad, h - h_min)
}

/// Halfspace `nᵀ q̂ ≤ 0` linearizing `q̂ᵀ M_l q̂ / ‖q‖ + ‖2 d‖ cos μ ≤ 0` about `dq`.
///
/// On unit dual quaternions this is the line-of-sight cone. Both terms are
/// degree-1 homogeneous, so the linearization is exact along `dq` itself.
pub fn linearize_los(dq: &DualQuat, mu: f64, p_b: &Vector3<f64>) -> Option<(Vector8, f64)> {
    let q = dq.to_vec8();
    let d = dq.dual.to_vec4();
    let dn = d.norm();
    let qn = dq.real.norm();
    if dn == 0.0 || qn == 0.0 {
        return None;
    }
    let ml = los_form(p_b);
    let f = q.dot(&(ml * q));
    let mut n = ml * q * (2.0 / qn);
    for i in 0..4 {
        n[i] -= f * q[i] / (qn * qn * qn);
        n[4 + i] += 2.0 * mu.cos() * d[i] / dn;
    }
    Some((n, 0.0))
}

/// Sets on the virtual state at an interior node, in physical units.
pub fn state_set(node: usize, x_ref: &StateVec, c: &ConstraintParams) -> Result<ProductSet, SubproblemError> {
    let dq = DualQuat::from_slice(&x_ref.as_slice()[idx::Q..idx::W]);
    let psi = trigger(2.0 * dq.dual.norm(), c.trigger_min, c.trigger_max);
    let rate = (-psi * c.rate_max).max(c.rate_stc);
    let speed = (-psi * c.speed_max).max(c.speed_stc);
    let tilt = if psi >= 0.0 { c.tilt_stc } else { c.tilt_max };

    let (n2, o2) = if psi >= 0.0 {
        linearize_los(&dq, c.los_stc, &c.sensor_body).ok_or(SubproblemError::UndefinedGeometry(node))?
    } else {
        linearize_min_altitude(&dq, c.altitude_min)
    };
    let pose = match tilt_halfspace(&dq, (0.5 * tilt).sin()) {
        Some((n1, o1)) => {
            let mut n1_8 = vec![0.0; 8];
            n1_8[..2].copy_from_slice(&n1);
            Set::two_halfspaces(n1_8, o1, n2.as_slice().to_vec(), o2)?
        }
        None => {
            log::debug!("node {node}: tilt bound dropped, reference is upright");
            Set::halfspace(n2.as_slice().to_vec(), o2)?
        }
    };
    Ok(ProductSet::free(NX)
        .with(idx::Q..idx::W, pose)?
        .with(idx::W..idx::V, Set::boxed(vec![-rate; 3], vec![rate; 3])?)?
        .with(idx::V..NX, Set::ball(vec![0.0; 3], speed)?)?)
}

/// Terminal set: `m ≥ m_f`, upright attitude, position `r_f`, velocity `(0, 0, vz_f)`.
pub fn terminal_set(m_f: f64, r_f: &Vector3<f64>, vz_f: f64) -> Result<ProductSet, SubproblemError> {
    // dual = ½ r̃_f ⊗ (0, 0, q_z, q_w)
    let k = Quat::pure(*r_f).lmat() * 0.5;
    let cols: Vec<Vec<f64>> = (0..2)
        .map(|j| {
            let mut c = vec![0.0; 6];
            c[j] = 1.0;
            for i in 0..4 {
                c[2 + i] = k[(i, 2 + j)];
            }
            c
        })
        .collect();
    let m: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let mut r = vec![0.0; 6];
            r[0] = -k[(i, 2)];
            r[1] = -k[(i, 3)];
            r[2 + i] = 1.0;
            r
        })
        .collect();
    let pose = AffineSubspace::new(vec![0.0; 6], &cols, m, vec![0.0; 4])?;
    Ok(ProductSet::free(NX)
        .with(0..1, Set::halfspace(vec![-1.0], -m_f)?)?
        .with(1..3, Set::Singleton { value: vec![0.0; 2] })?
        .with(3..9, Set::Affine(pose))?
        .with(9..15, Set::Singleton { value: vec![0.0, 0.0, 0.0, 0.0, 0.0, vz_f] })?)
}

/// Discretized subproblem in scaled deviation variables.
///
/// Variables are `Δx_k, Δξ_k, Δu_k, Δs`. Objective:
/// `qᵀz + ½ w_tr Σ(‖Δx_k‖² + ‖Δu_k‖²) + ½ w_tr_s Δs² + ½ w_vse Σ‖Δx_k − Δξ_k‖²`.
/// Dynamics: `A_k Δx_k − Δx_{k+1} + B⁻_k Δu_k + B⁺_k Δu_{k+1} + S_k Δs + d_k = 0`.
/// Sets: `Δx_1 ∈ x1_set`, `Δξ_1 = 0`, `Δξ_k ∈ xi_sets[k]`, `Δu_k ∈ u_sets[k]`, `Δs ∈ s_set`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem<const NX_: usize, const NU_: usize> {
    pub a: Vec<SMatrix<f64, NX_, NX_>>,
    pub b_minus: Vec<SMatrix<f64, NX_, NU_>>,
    pub b_plus: Vec<SMatrix<f64, NX_, NU_>>,
    pub s: Vec<SVector<f64, NX_>>,
    pub d: Vec<SVector<f64, NX_>>,
    pub q_x: Vec<SVector<f64, NX_>>,
    pub q_xi: Vec<SVector<f64, NX_>>,
    pub q_u: Vec<SVector<f64, NU_>>,
    pub q_s: f64,
    pub weights: Weights,
    pub x1_set: ProductSet,
    /// Entry 0 is unused: the first virtual state is pinned to its reference.
    pub xi_sets: Vec<ProductSet>,
    pub u_sets: Vec<ProductSet>,
    pub s_set: ProductSet,
}

impl<const NX_: usize, const NU_: usize> Subproblem<NX_, NU_> {
    pub fn nodes(&self) -> usize {
        self.q_x.len()
    }

    pub fn validate(&self) -> Result<(), SubproblemError> {
        let n = self.nodes();
        let bad = |m: &str| Err(SubproblemError::InvalidConfig(m.to_string()));
        if n < 2 {
            return bad("need at least two nodes");
        }
        if [self.a.len(), self.b_minus.len(), self.b_plus.len(), self.s.len(), self.d.len()]
            .iter()
            .any(|&l| l != n - 1)
        {
            return bad("dynamics blocks must cover N − 1 intervals");
        }
        if self.q_xi.len() != n || self.q_u.len() != n || self.xi_sets.len() != n || self.u_sets.len() != n {
            return bad("per-node data must cover N nodes");
        }
        if self.x1_set.dim != NX_ || self.u_sets.iter().any(|s| s.dim != NU_) || self.s_set.dim != 1 {
            return bad("set dimensions do not match variables");
        }
        self.weights.validate()
    }

    /// Objective value at `z`.
    pub fn cost(&self, z: &Primal<NX_, NU_>) -> f64 {
        let w = &self.weights;
        let mut c = self.q_s * z.s + 0.5 * w.w_tr_s * z.s * z.s;
        for k in 0..self.nodes() {
            c += self.q_x[k].dot(&z.x[k]) + self.q_xi[k].dot(&z.xi[k]) + self.q_u[k].dot(&z.u[k]);
            c += 0.5 * w.w_tr * (z.x[k].norm_squared() + z.u[k].norm_squared());
            c += 0.5 * w.w_vse * (z.x[k] - z.xi[k]).norm_squared();
        }
        c
    }

    /// Dynamics residual `∞`-norm at `z`.
    pub fn dynamics_residual(&self, z: &Primal<NX_, NU_>) -> f64 {
        (0..self.nodes() - 1)
            .map(|k| {
                let r = self.a[k] * z.x[k] - z.x[k + 1]
                    + self.b_minus[k] * z.u[k]
                    + self.b_plus[k] * z.u[k + 1]
                    + self.s[k] * z.s
                    + self.d[k];
                r.amax()
            })
            .fold(0.0, f64::max)
    }

    /// Largest set violation at `z`.
    pub fn set_violation(&self, z: &Primal<NX_, NU_>) -> f64 {
        let mut v = self.x1_set.violation(z.x[0].as_slice()).max(z.xi[0].amax());
        for k in 1..self.nodes() {
            v = v.max(self.xi_sets[k].violation(z.xi[k].as_slice()));
        }
        for k in 0..self.nodes() {
            v = v.max(self.u_sets[k].violation(z.u[k].as_slice()));
        }
        v.max(self.s_set.violation(&[z.s]))
    }
}

/// Linearization reference: node states, node controls and time of flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Vec<StateVec>,
    pub u: Vec<ControlVec>,
    pub s: f64,
}

/// Everything fixed across SCP iterations that assembly needs.
#[derive(Debug, Clone)]
pub struct AssemblyContext<'a> {
    pub x_init: &'a StateVec,
    pub weights: &'a Weights,
    pub constraints: &'a ConstraintParams,
    /// Terminal set in physical units.
    pub terminal: &'a ProductSet,
    pub scaling: &'a Scaling,
    pub s_bounds: (f64, f64),
}

/// Builds the scaled deviation-form subproblem about `reference`.
pub fn assemble(
    disc: &DiscreteDynamics<NX, NU>,
    reference: &Reference,
    ctx: &AssemblyContext,
) -> Result<Subproblem<NX, NU>, SubproblemError> {
    let n = reference.x.len();
    if n < 2 || reference.u.len() != n || disc.intervals.len() != n - 1 {
        return Err(SubproblemError::InvalidConfig("reference and discretization sizes disagree".into()));
    }
    ctx.weights.validate()?;
    crate::audit::record(NX, NX);
    let sc = ctx.scaling;
    let kx: Vec<f64> = sc.x_scale.iter().map(|d| 1.0 / d).collect();
    let ku: Vec<f64> = sc.u_scale.iter().map(|d| 1.0 / d).collect();

    let mut a = Vec::with_capacity(n - 1);
    let mut b_minus = Vec::with_capacity(n - 1);
    let mut b_plus = Vec::with_capacity(n - 1);
    let mut s = Vec::with_capacity(n - 1);
    let mut d = Vec::with_capacity(n - 1);
    for iv in &disc.intervals {
        a.push(SMatrix::<f64, NX, NX>::from_fn(|i, j| iv.a[(i, j)] * sc.x_scale[j] * kx[i]));
        b_minus.push(SMatrix::<f64, NX, NU>::from_fn(|i, j| iv.b_minus[(i, j)] * sc.u_scale[j] * kx[i]));
        b_plus.push(SMatrix::<f64, NX, NU>::from_fn(|i, j| iv.b_plus[(i, j)] * sc.u_scale[j] * kx[i]));
        s.push(SVector::<f64, NX>::from_fn(|i, _| iv.s[i] * sc.s_scale * kx[i]));
        d.push(SVector::<f64, NX>::from_fn(|i, _| iv.d[i] * kx[i]));
    }

    let mut q_x = vec![SVector::<f64, NX>::zeros(); n];
    q_x[n - 1][idx::M] = -ctx.weights.w_m;

    let x1_set = ProductSet::singleton(ctx.x_init.as_slice()).map(reference.x[0].as_slice(), &kx)?;
    let mut xi_sets = Vec::with_capacity(n);
    xi_sets.push(ProductSet::singleton(&[0.0; NX]));
    for k in 1..n - 1 {
        xi_sets.push(state_set(k, &reference.x[k], ctx.constraints)?.map(reference.x[k].as_slice(), &kx)?);
    }
    xi_sets.push(ctx.terminal.map(reference.x[n - 1].as_slice(), &kx)?);

    let u_sets = control_sets(&reference.u, reference.s, ctx.constraints)?
        .into_iter()
        .enumerate()
        .map(|(k, set)| set.map(reference.u[k].as_slice(), &ku))
        .collect::<Result<Vec<_>, _>>()?;

    let (smin, smax) = ctx.s_bounds;
    let s_set = ProductSet::free(1)
        .with(0..1, Set::boxed(vec![smin], vec![smax])?)?
        .map(&[reference.s], &[1.0 / sc.s_scale])?;

    let sub = Subproblem {
        a,
        b_minus,
        b_plus,
        s,
        d,
        q_x,
        q_xi: vec![SVector::zeros(); n],
        q_u: vec![SVector::zeros(); n],
        q_s: 0.0,
        weights: *ctx.weights,
        x1_set,
        xi_sets,
        u_sets,
        s_set,
    };
    sub.validate()?;
    Ok(sub)
}
