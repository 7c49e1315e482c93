//! Vehicle equations of motion, linearization and exact FOH discretization.
//!
//! State layout (15): `[m, q(4), d(4), ω_B(3), v_B(3)]`.
//! Control layout (6): `[T, δ, φ, τ(3)]`.
//!
//! Time is normalized to `[0, 1]` over the horizon and the dilation factor `s`
//! (time of flight) multiplies the right-hand side.

use crate::quat::{rotate_to_body, skew, DualQuat, DualVelocity, Quat};
use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector3};
use thiserror::Error;

pub const NX: usize = 15;
pub const NU: usize = 6;

pub type StateVec = SVector<f64, NX>;
pub type ControlVec = SVector<f64, NU>;
pub type MatA = SMatrix<f64, NX, NX>;
pub type MatB = SMatrix<f64, NX, NU>;

pub mod idx {
    pub const M: usize = 0;
    pub const Q: usize = 1;
    pub const D: usize = 5;
    pub const W: usize = 9;
    pub const V: usize = 12;
    pub const T: usize = 0;
    pub const DELTA: usize = 1;
    pub const PHI: usize = 2;
    pub const TAU: usize = 3;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("mass must be positive, got {0}")]
    SingularMass(f64),
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration failed on interval {interval}: {reason}")]
    Integration { interval: usize, reason: String },
}

/// Mass-normalized vehicle model.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub g: f64,
    pub alpha_me: f64,
    pub alpha_rcs: f64,
    pub l_cm: f64,
    pub inertia: Matrix3<f64>,
    pub inertia_inv: Matrix3<f64>,
    pub m_i: f64,
    pub m_f: f64,
}

impl VehicleParams {
    pub fn new(
        g: f64,
        alpha_me: f64,
        alpha_rcs: f64,
        l_cm: f64,
        inertia: Matrix3<f64>,
        m_i: f64,
        m_f: f64,
    ) -> Result<Self, DynamicsError> {
        let bad = |s: &str| Err(DynamicsError::InvalidParams(s.to_string()));
        if !(l_cm > 0.0) {
            return bad("l_cm must be positive");
        }
        if !(m_f > 0.0 && m_i > m_f) {
            return bad("masses must satisfy m_i > m_f > 0");
        }
        if !(alpha_me >= 0.0 && alpha_rcs >= 0.0) {
            return bad("fuel consumption parameters must be nonnegative");
        }
        if (inertia - inertia.transpose()).amax() > 1e-12 * inertia.amax() {
            return bad("inertia must be symmetric");
        }
        // Sylvester's criterion
        let m1 = inertia[(0, 0)];
        let m2 = inertia[(0, 0)] * inertia[(1, 1)] - inertia[(0, 1)] * inertia[(1, 0)];
        let det = inertia.determinant();
        if !(m1 > 0.0 && m2 > 0.0 && det > 0.0) {
            return bad("inertia must be positive definite");
        }
        Ok(Self {
            g,
            alpha_me,
            alpha_rcs,
            l_cm,
            inertia,
            inertia_inv: adjugate_inverse(&inertia),
            m_i,
            m_f,
        })
    }

    /// Thrust application point relative to the center of mass.
    pub fn lever(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.l_cm)
    }
}

/// Closed-form 3x3 inverse via the adjugate.
pub fn adjugate_inverse(a: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = a.column(1).cross(&a.column(2));
    let c1 = a.column(2).cross(&a.column(0));
    let c2 = a.column(0).cross(&a.column(1));
    let det = a.column(0).dot(&c0);
    Matrix3::from_rows(&[c0.transpose(), c1.transpose(), c2.transpose()]) / det
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub m: f64,
    pub dq: DualQuat,
    pub dv: DualVelocity,
}

impl VehicleState {
    pub fn to_vec(&self) -> StateVec {
        let mut x = StateVec::zeros();
        x[idx::M] = self.m;
        x.fixed_rows_mut::<8>(idx::Q).copy_from(&self.dq.to_vec8());
        x.fixed_rows_mut::<3>(idx::W).copy_from(&self.dv.omega);
        x.fixed_rows_mut::<3>(idx::V).copy_from(&self.dv.v);
        x
    }

    pub fn from_vec(x: &StateVec) -> Self {
        Self {
            m: x[idx::M],
            dq: DualQuat::from_slice(&x.as_slice()[idx::Q..idx::W]),
            dv: DualVelocity::new(
                x.fixed_rows::<3>(idx::W).into_owned(),
                x.fixed_rows::<3>(idx::V).into_owned(),
            ),
        }
    }

    /// State at inertial position `r`, inertial velocity `v_i`, body rate `omega`.
    pub fn from_inertial(
        m: f64,
        q: &Quat,
        r: &Vector3<f64>,
        omega: &Vector3<f64>,
        v_i: &Vector3<f64>,
    ) -> Result<Self, crate::quat::QuatError> {
        Ok(Self {
            m,
            dq: DualQuat::from_pose(q, r)?,
            dv: DualVelocity::new(*omega, rotate_to_body(q, v_i)),
        })
    }

    pub fn position(&self) -> Vector3<f64> {
        self.dq.position()
    }

    pub fn velocity_inertial(&self) -> Vector3<f64> {
        crate::quat::rotate_to_inertial(&self.dq.real, &self.dv.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub thrust: f64,
    pub delta: f64,
    pub phi: f64,
    pub torque: Vector3<f64>,
}

impl ControlInput {
    pub fn to_vec(&self) -> ControlVec {
        ControlVec::from_column_slice(&[
            self.thrust,
            self.delta,
            self.phi,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        ])
    }

    pub fn from_vec(u: &ControlVec) -> Self {
        Self {
            thrust: u[idx::T],
            delta: u[idx::DELTA],
            phi: u[idx::PHI],
            torque: Vector3::new(u[3], u[4], u[5]),
        }
    }

    /// Body-frame thrust force.
    pub fn force(&self) -> Vector3<f64> {
        thrust_direction(self.delta, self.phi) * self.thrust
    }
}

fn thrust_direction(delta: f64, phi: f64) -> Vector3<f64> {
    let (sd, cd) = delta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(sd * cp, sd * sp, cd)
}

/// Restore a unit dual quaternion inside a state vector.
pub fn renormalize(x: &mut StateVec) {
    let dq = DualQuat::from_slice(&x.as_slice()[idx::Q..idx::W]);
    if let Ok(n) = dq.normalize() {
        x.fixed_rows_mut::<8>(idx::Q).copy_from(&n.to_vec8());
    }
}

/// A time-invariant control-affine-or-not system `ẋ = f(x, u)`.
pub trait Dynamics<const N: usize, const M: usize> {
    fn f(&self, x: &SVector<f64, N>, u: &SVector<f64, M>)
        -> Result<SVector<f64, N>, DynamicsError>;

    /// `(f, ∂f/∂x, ∂f/∂u)` at `(x, u)`.
    #[allow(clippy::type_complexity)]
    fn linearize(
        &self,
        x: &SVector<f64, N>,
        u: &SVector<f64, M>,
    ) -> Result<(SVector<f64, N>, SMatrix<f64, N, N>, SMatrix<f64, N, M>), DynamicsError>;
}

/// The six-degree-of-freedom lander.
#[derive(Debug, Clone)]
pub struct Vehicle {
    pub params: VehicleParams,
}

impl Vehicle {
    pub fn new(params: VehicleParams) -> Self {
        Self { params }
    }
}

struct Unpacked {
    m: f64,
    q: Quat,
    d: Quat,
    w: Vector3<f64>,
    v: Vector3<f64>,
    thrust: f64,
    delta: f64,
    phi: f64,
    tau: Vector3<f64>,
}

fn unpack(x: &StateVec, u: &ControlVec) -> Result<Unpacked, DynamicsError> {
    let m = x[idx::M];
    if !(m > 0.0) {
        return Err(DynamicsError::SingularMass(m));
    }
    Ok(Unpacked {
        m,
        q: Quat::from_slice(&x.as_slice()[idx::Q..idx::D]),
        d: Quat::from_slice(&x.as_slice()[idx::D..idx::W]),
        w: x.fixed_rows::<3>(idx::W).into_owned(),
        v: x.fixed_rows::<3>(idx::V).into_owned(),
        thrust: u[idx::T],
        delta: u[idx::DELTA],
        phi: u[idx::PHI],
        tau: u.fixed_rows::<3>(idx::TAU).into_owned(),
    })
}

impl Dynamics<NX, NU> for Vehicle {
    fn f(&self, x: &StateVec, u: &ControlVec) -> Result<StateVec, DynamicsError> {
        let p = &self.params;
        let s = unpack(x, u)?;
        let wq = Quat::pure(s.w);
        let vq = Quat::pure(s.v);
        let force = thrust_direction(s.delta, s.phi) * s.thrust;
        let jw = p.inertia * s.w;

        let mut out = StateVec::zeros();
        out[idx::M] = -(p.alpha_me * s.thrust + p.alpha_rcs * s.tau.norm() / p.l_cm);
        let qdot = (s.q * wq).scale(0.5);
        let ddot = (s.q * vq + s.d * wq).scale(0.5);
        let wdot = p.inertia_inv * ((p.lever().cross(&force) + s.tau) / s.m - s.w.cross(&jw));
        let g_b = (s.q.conj() * Quat::pure(Vector3::new(0.0, 0.0, -p.g)) * s.q).v;
        let vdot = force / s.m + g_b - s.w.cross(&s.v);
        out.fixed_rows_mut::<4>(idx::Q).copy_from(&qdot.to_vec4());
        out.fixed_rows_mut::<4>(idx::D).copy_from(&ddot.to_vec4());
        out.fixed_rows_mut::<3>(idx::W).copy_from(&wdot);
        out.fixed_rows_mut::<3>(idx::V).copy_from(&vdot);
        Ok(out)
    }

    fn linearize(&self, x: &StateVec, u: &ControlVec) -> Result<(StateVec, MatA, MatB), DynamicsError> {
        let f = self.f(x, u)?;
        let p = &self.params;
        let s = unpack(x, u)?;
        let wq = Quat::pure(s.w);
        let vq = Quat::pure(s.v);
        let dir = thrust_direction(s.delta, s.phi);
        let force = dir * s.thrust;
        let (sd, cd) = s.delta.sin_cos();
        let (sp, cp) = s.phi.sin_cos();
        let f_delta = Vector3::new(cd * cp, cd * sp, -sd) * s.thrust;
        let f_phi = Vector3::new(-sd * sp, sd * cp, 0.0) * s.thrust;
        let lever = skew(&p.lever());

        let mut a = MatA::zeros();
        let mut b = MatB::zeros();

        // mass
        b[(idx::M, idx::T)] = -p.alpha_me;
        let tn = s.tau.norm();
        if tn > 0.0 {
            let g = s.tau * (-p.alpha_rcs / (tn * p.l_cm));
            b.fixed_view_mut::<1, 3>(idx::M, idx::TAU).copy_from(&g.transpose());
        }

        // attitude: q̇ = ½ [ω̃]⊗* q = ½ [q]⊗ ω̃
        let w_r = wq.rmat() * 0.5;
        let q_l = s.q.lmat() * 0.5;
        a.fixed_view_mut::<4, 4>(idx::Q, idx::Q).copy_from(&w_r);
        a.fixed_view_mut::<4, 3>(idx::Q, idx::W).copy_from(&q_l.fixed_columns::<3>(0));

        // dual part: ḋ = ½ (q ⊗ ṽ + d ⊗ ω̃)
        a.fixed_view_mut::<4, 4>(idx::D, idx::Q).copy_from(&(vq.rmat() * 0.5));
        a.fixed_view_mut::<4, 4>(idx::D, idx::D).copy_from(&w_r);
        a.fixed_view_mut::<4, 3>(idx::D, idx::W)
            .copy_from(&(s.d.lmat() * 0.5).fixed_columns::<3>(0));
        a.fixed_view_mut::<4, 3>(idx::D, idx::V).copy_from(&q_l.fixed_columns::<3>(0));

        // angular rate
        let jinv = p.inertia_inv;
        let wrench = p.lever().cross(&force) + s.tau;
        let m2 = s.m * s.m;
        a.fixed_view_mut::<3, 1>(idx::W, idx::M).copy_from(&(jinv * wrench * (-1.0 / m2)));
        let gyro = skew(&s.w) * p.inertia - skew(&(p.inertia * s.w));
        a.fixed_view_mut::<3, 3>(idx::W, idx::W).copy_from(&(-(jinv * gyro)));
        let jl = jinv * lever / s.m;
        b.fixed_view_mut::<3, 1>(idx::W, idx::T).copy_from(&(jl * dir));
        b.fixed_view_mut::<3, 1>(idx::W, idx::DELTA).copy_from(&(jl * f_delta));
        b.fixed_view_mut::<3, 1>(idx::W, idx::PHI).copy_from(&(jl * f_phi));
        b.fixed_view_mut::<3, 3>(idx::W, idx::TAU).copy_from(&(jinv / s.m));

        // linear velocity
        a.fixed_view_mut::<3, 1>(idx::V, idx::M).copy_from(&(force * (-1.0 / m2)));
        let g_i = Quat::pure(Vector3::new(0.0, 0.0, -p.g));
        let gjac = gravity_jacobian(&s.q, &g_i);
        a.fixed_view_mut::<3, 4>(idx::V, idx::Q).copy_from(&gjac.fixed_rows::<3>(0));
        a.fixed_view_mut::<3, 3>(idx::V, idx::W).copy_from(&skew(&s.v));
        a.fixed_view_mut::<3, 3>(idx::V, idx::V).copy_from(&(-skew(&s.w)));
        b.fixed_view_mut::<3, 1>(idx::V, idx::T).copy_from(&(dir / s.m));
        b.fixed_view_mut::<3, 1>(idx::V, idx::DELTA).copy_from(&(f_delta / s.m));
        b.fixed_view_mut::<3, 1>(idx::V, idx::PHI).copy_from(&(f_phi / s.m));

        Ok((f, a, b))
    }
}

/// Derivative of `q* ⊗ g ⊗ q` with respect to `q`.
fn gravity_jacobian(q: &Quat, g: &Quat) -> Matrix4<f64> {
    let conj = Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, -1.0, -1.0, 1.0));
    (q.conj() * *g).lmat() + (*g * *q).rmat() * conj
}

/// Equations of motion in physical time.
pub fn eom(x: &VehicleState, u: &ControlInput, p: &VehicleParams) -> Result<StateVec, DynamicsError> {
    Vehicle::new(p.clone()).f(&x.to_vec(), &u.to_vec())
}

/// Right-hand side in normalized time: `s · f(x, u)`.
pub fn dilated_eom<D: Dynamics<N, M>, const N: usize, const M: usize>(
    dynamics: &D,
    x: &SVector<f64, N>,
    u: &SVector<f64, M>,
    s: f64,
) -> Result<SVector<f64, N>, DynamicsError> {
    if !(s > 0.0) {
        return Err(DynamicsError::InvalidInput(format!("dilation factor must be positive, got {s}")));
    }
    Ok(dynamics.f(x, u)? * s)
}

/// Jacobians of the dilated dynamics: `(s ∂f/∂x, s ∂f/∂u, f)`.
#[allow(clippy::type_complexity)]
pub fn jacobians<D: Dynamics<N, M>, const N: usize, const M: usize>(
    dynamics: &D,
    x: &SVector<f64, N>,
    u: &SVector<f64, M>,
    s: f64,
) -> Result<(SMatrix<f64, N, N>, SMatrix<f64, N, M>, SVector<f64, N>), DynamicsError> {
    let (f, a, b) = dynamics.linearize(x, u)?;
    Ok((a * s, b * s, f))
}

/// First-order-hold interpolation on `[tau_k, tau_k1]`.
pub fn foh<const M: usize>(
    u_k: &SVector<f64, M>,
    u_k1: &SVector<f64, M>,
    tau: f64,
    tau_k: f64,
    tau_k1: f64,
) -> Result<SVector<f64, M>, DynamicsError> {
    if !(tau_k1 > tau_k) || tau < tau_k || tau > tau_k1 {
        return Err(DynamicsError::InvalidInput(format!(
            "tau {tau} outside interval [{tau_k}, {tau_k1}]"
        )));
    }
    let sp = (tau - tau_k) / (tau_k1 - tau_k);
    Ok(u_k * (1.0 - sp) + u_k1 * sp)
}

/// Blocks of one discretized interval:
/// `x_{k+1} ≈ A x_k + B⁻ u_k + B⁺ u_{k+1} + S s` about the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<const N: usize, const M: usize> {
    pub a: SMatrix<f64, N, N>,
    pub b_minus: SMatrix<f64, N, M>,
    pub b_plus: SMatrix<f64, N, M>,
    pub s: SVector<f64, N>,
    pub d: SVector<f64, N>,
    pub x_prop: SVector<f64, N>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDynamics<const N: usize, const M: usize> {
    pub intervals: Vec<Interval<N, M>>,
}

#[derive(Clone, Copy)]
struct Aug<const N: usize, const M: usize> {
    x: SVector<f64, N>,
    pa: SMatrix<f64, N, N>,
    pbm: SMatrix<f64, N, M>,
    pbp: SMatrix<f64, N, M>,
    ps: SVector<f64, N>,
}

impl<const N: usize, const M: usize> Aug<N, M> {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        Self {
            x: self.x + k.x * h,
            pa: self.pa + k.pa * h,
            pbm: self.pbm + k.pbm * h,
            pbp: self.pbp + k.pbp * h,
            ps: self.ps + k.ps * h,
        }
    }
}

fn finite<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Exact discretization about `(xs, us, s)` on a uniform grid.
///
/// Integrates the state together with its sensitivities to the initial state,
/// both control nodes and the dilation factor, using fixed-step RK4.
pub fn discretize<D: Dynamics<N, M>, const N: usize, const M: usize>(
    dynamics: &D,
    xs: &[SVector<f64, N>],
    us: &[SVector<f64, M>],
    s: f64,
    substeps: usize,
) -> Result<DiscreteDynamics<N, M>, DynamicsError> {
    let n = xs.len();
    if n < 2 || us.len() != n {
        return Err(DynamicsError::InvalidInput(format!(
            "need matching node counts >= 2, got {} states and {} controls",
            n,
            us.len()
        )));
    }
    if !(s >= 0.0) || substeps == 0 {
        return Err(DynamicsError::InvalidInput("s must be nonnegative and substeps positive".into()));
    }
    crate::audit::record(N, N.max(M));
    let dtau = 1.0 / (n - 1) as f64;
    let h = dtau / substeps as f64;
    let mut intervals = Vec::with_capacity(n - 1);

    for k in 0..n - 1 {
        let (u0, u1) = (us[k], us[k + 1]);
        let rhs = |t: f64, y: &Aug<N, M>| -> Result<Aug<N, M>, DynamicsError> {
            let sp = t / dtau;
            let sm = 1.0 - sp;
            let u = u0 * sm + u1 * sp;
            let (f, a, b) = dynamics.linearize(&y.x, &u)?;
            let a = a * s;
            let b = b * s;
            Ok(Aug {
                x: f * s,
                pa: a * y.pa,
                pbm: a * y.pbm + b * sm,
                pbp: a * y.pbp + b * sp,
                ps: a * y.ps + f,
            })
        };
        let mut y = Aug {
            x: xs[k],
            pa: SMatrix::identity(),
            pbm: SMatrix::zeros(),
            pbp: SMatrix::zeros(),
            ps: SVector::zeros(),
        };
        let fail = |e: DynamicsError| DynamicsError::Integration { interval: k, reason: e.to_string() };
        for i in 0..substeps {
            let t = i as f64 * h;
            let k1 = rhs(t, &y).map_err(fail)?;
            let k2 = rhs(t + 0.5 * h, &y.axpy(0.5 * h, &k1)).map_err(fail)?;
            let k3 = rhs(t + 0.5 * h, &y.axpy(0.5 * h, &k2)).map_err(fail)?;
            let k4 = rhs(t + h, &y.axpy(h, &k3)).map_err(fail)?;
            y = y.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
        }
        if !(finite(&y.x) && finite(&y.pa) && finite(&y.pbm) && finite(&y.pbp) && finite(&y.ps)) {
            return Err(DynamicsError::Integration { interval: k, reason: "non-finite result".into() });
        }
        intervals.push(Interval {
            a: y.pa,
            b_minus: y.pbm,
            b_plus: y.pbp,
            s: y.ps,
            d: y.x - xs[k + 1],
            x_prop: y.x,
        });
    }
    Ok(DiscreteDynamics { intervals })
}

/// Integrates the nonlinear dynamics from `x1` under FOH controls.
pub fn single_shot<D: Dynamics<N, M>, const N: usize, const M: usize>(
    dynamics: &D,
    x1: &SVector<f64, N>,
    us: &[SVector<f64, M>],
    s: f64,
    substeps: usize,
) -> Result<Vec<SVector<f64, N>>, DynamicsError> {
    let n = us.len();
    if n < 2 || substeps == 0 {
        return Err(DynamicsError::InvalidInput("need >= 2 nodes and positive substeps".into()));
    }
    if !(s > 0.0) {
        return Err(DynamicsError::InvalidInput(format!("dilation factor must be positive, got {s}")));
    }
    let dtau = 1.0 / (n - 1) as f64;
    let h = dtau / substeps as f64;
    let mut out = Vec::with_capacity(n);
    let mut x = *x1;
    out.push(x);
    for k in 0..n - 1 {
        let (u0, u1) = (us[k], us[k + 1]);
        let rhs = |t: f64, x: &SVector<f64, N>| -> Result<SVector<f64, N>, DynamicsError> {
            let sp = t / dtau;
            Ok(dynamics.f(x, &(u0 * (1.0 - sp) + u1 * sp))? * s)
        };
        let fail = |e: DynamicsError| DynamicsError::Integration { interval: k, reason: e.to_string() };
        for i in 0..substeps {
            let t = i as f64 * h;
            let k1 = rhs(t, &x).map_err(fail)?;
            let k2 = rhs(t + 0.5 * h, &(x + k1 * (0.5 * h))).map_err(fail)?;
            let k3 = rhs(t + 0.5 * h, &(x + k2 * (0.5 * h))).map_err(fail)?;
            let k4 = rhs(t + h, &(x + k3 * h)).map_err(fail)?;
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        if !finite(&x) {
            return Err(DynamicsError::Integration { interval: k, reason: "non-finite state".into() });
        }
        out.push(x);
    }
    Ok(out)
}
