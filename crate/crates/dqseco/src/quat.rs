//! Quaternion and dual-quaternion algebra.
//!
//! Quaternions are stored scalar-last: `(x, y, z, w)`. A unit dual quaternion
//! `(q, d)` encodes a pose with `d = ½ (r, 0) ⊗ q`, so `q` maps body-frame
//! vectors into the inertial frame.
//!
//! Index mapping for 8-vectors: slots `0..4` hold the real part and `4..8`
//! the dual part. The attitude components that tilt the body z-axis are slots
//! `0..2`, and the position-carrying dual part is `4..8`.

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3, Vector4};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

pub type Vector8 = nalgebra::SVector<f64, 8>;
pub type Matrix8 = SMatrix<f64, 8, 8>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuatError {
    #[error("quaternion is not unit (norm {0})")]
    NonUnit(f64),
    #[error("quaternion has zero norm")]
    ZeroNorm,
}

/// Skew-symmetric matrix with `skew(v) * u == v × u`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub v: Vector3<f64>,
    pub w: f64,
}

impl Quat {
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { v: Vector3::new(x, y, z), w }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion `(v, 0)`.
    pub fn pure(v: Vector3<f64>) -> Self {
        Self { v, w: 0.0 }
    }

    pub fn from_vec4(a: &Vector4<f64>) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_vec4(&self) -> Vector4<f64> {
        Vector4::new(self.v.x, self.v.y, self.v.z, self.w)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    /// Left multiplication operator: `a ⊗ b == a.lmat() * b`.
    pub fn lmat(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        let top = Matrix3::identity() * self.w + skew(&self.v);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.v);
        m.fixed_view_mut::<1, 3>(3, 0).copy_from(&(-self.v.transpose()));
        m[(3, 3)] = self.w;
        m
    }

    /// Right multiplication operator: `a ⊗ b == b.rmat() * a`.
    pub fn rmat(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        let top = Matrix3::identity() * self.w - skew(&self.v);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.v);
        m.fixed_view_mut::<1, 3>(3, 0).copy_from(&(-self.v.transpose()));
        m[(3, 3)] = self.w;
        m
    }

    pub fn conj(&self) -> Self {
        Self { v: -self.v, w: self.w }
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.v.dot(&o.v) + self.w * o.w
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { v: self.v * k, w: self.w * k }
    }

    pub fn normalize(&self) -> Result<Self, QuatError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QuatError::ZeroNorm);
        }
        Ok(self.scale(1.0 / n))
    }

    /// Quaternion cross product; the scalar part is zero by definition.
    pub fn cross(&self, b: &Self) -> Self {
        Self::pure(self.v * b.w + b.v * self.w + self.v.cross(&b.v))
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, b: Quat) -> Quat {
        Quat {
            v: b.v * self.w + self.v * b.w + self.v.cross(&b.v),
            w: self.w * b.w - self.v.dot(&b.v),
        }
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, b: Quat) -> Quat {
        Quat { v: self.v + b.v, w: self.w + b.w }
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, b: Quat) -> Quat {
        Quat { v: self.v - b.v, w: self.w - b.w }
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat { v: -self.v, w: -self.w }
    }
}

/// `q* ⊗ (v, 0) ⊗ q`: expresses an inertial vector in the body frame.
pub fn rotate_to_body(q: &Quat, v_i: &Vector3<f64>) -> Vector3<f64> {
    (q.conj() * Quat::pure(*v_i) * *q).v
}

/// `q ⊗ (v, 0) ⊗ q*`: the inverse of [`rotate_to_body`].
pub fn rotate_to_inertial(q: &Quat, v_b: &Vector3<f64>) -> Vector3<f64> {
    (*q * Quat::pure(*v_b) * q.conj()).v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuat {
    pub real: Quat,
    pub dual: Quat,
}

impl DualQuat {
    pub fn new(real: Quat, dual: Quat) -> Self {
        Self { real, dual }
    }

    pub fn identity() -> Self {
        Self::new(Quat::identity(), Quat::zero())
    }

    pub fn from_vec8(a: &Vector8) -> Self {
        Self::new(
            Quat::new(a[0], a[1], a[2], a[3]),
            Quat::new(a[4], a[5], a[6], a[7]),
        )
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(Quat::from_slice(&s[0..4]), Quat::from_slice(&s[4..8]))
    }

    pub fn to_vec8(&self) -> Vector8 {
        let mut out = Vector8::zeros();
        out.fixed_rows_mut::<4>(0).copy_from(&self.real.to_vec4());
        out.fixed_rows_mut::<4>(4).copy_from(&self.dual.to_vec4());
        out
    }

    /// Pose with attitude `q` and inertial position `r`.
    pub fn from_pose(q: &Quat, r: &Vector3<f64>) -> Result<Self, QuatError> {
        let n = q.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(QuatError::NonUnit(n));
        }
        Ok(Self::new(*q, (Quat::pure(*r) * *q).scale(0.5)))
    }

    /// Inertial position `vec(2 d ⊗ q*)`.
    pub fn position(&self) -> Vector3<f64> {
        (self.dual * self.real.conj()).v * 2.0
    }

    pub fn conj(&self) -> Self {
        Self::new(self.real.conj(), self.dual.conj())
    }

    pub fn cross(&self, b: &Self) -> Self {
        Self::new(
            self.real.cross(&b.real),
            self.real.cross(&b.dual) + self.dual.cross(&b.real),
        )
    }

    pub fn lmat(&self) -> Matrix8 {
        let mut m = Matrix8::zeros();
        let a1 = self.real.lmat();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&a1);
        m.fixed_view_mut::<4, 4>(4, 0).copy_from(&self.dual.lmat());
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(&a1);
        m
    }

    pub fn rmat(&self) -> Matrix8 {
        let mut m = Matrix8::zeros();
        let b1 = self.real.rmat();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&b1);
        m.fixed_view_mut::<4, 4>(4, 0).copy_from(&self.dual.rmat());
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(&b1);
        m
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.real.scale(k), self.dual.scale(k))
    }

    /// Unit real part and dual part orthogonal to it.
    pub fn normalize(&self) -> Result<Self, QuatError> {
        let n = self.real.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QuatError::ZeroNorm);
        }
        let real = self.real.scale(1.0 / n);
        let dual = self.dual.scale(1.0 / n);
        let dual = dual - real.scale(real.dot(&dual));
        Ok(Self::new(real, dual))
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        self.real.is_unit(tol) && self.real.dot(&self.dual).abs() <= tol
    }

    /// Screw linear interpolation from `a` (t = 0) to `b` (t = 1).
    pub fn sclerp(a: &Self, b: &Self, t: f64) -> Self {
        if t == 0.0 {
            return *a;
        }
        if t == 1.0 {
            return *b;
        }
        let b = if a.real.dot(&b.real) < 0.0 { b.scale(-1.0) } else { *b };
        let delta = a.conj() * b;
        *a * delta.powf(t)
    }

    /// Screw power of a unit dual quaternion.
    fn powf(&self, t: f64) -> Self {
        let rv = self.real.v;
        let s = rv.norm();
        if s < 1e-9 {
            // no rotation: scale the translation only
            let p = (self.dual * self.real.conj()).v * 2.0;
            let real = Quat::identity();
            return Self::new(real, Quat::pure(p * (0.5 * t)));
        }
        let c = self.real.w;
        let theta = 2.0 * s.atan2(c);
        let l = rv / s;
        let dist = -2.0 * self.dual.w / s;
        let m = (self.dual.v - l * (0.5 * dist * c)) / s;

        let (st, ct) = (0.5 * t * theta).sin_cos();
        let dt = t * dist;
        let real = Quat { v: l * st, w: ct };
        let dual = Quat { v: l * (0.5 * dt * ct) + m * st, w: -0.5 * dt * st };
        Self::new(real, dual)
    }
}

impl Mul for DualQuat {
    type Output = DualQuat;
    fn mul(self, b: DualQuat) -> DualQuat {
        DualQuat::new(self.real * b.real, self.real * b.dual + self.dual * b.real)
    }
}

/// Body angular and linear velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualVelocity {
    pub omega: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl DualVelocity {
    pub fn new(omega: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self { omega, v }
    }

    /// 8-vector form with zero scalar slots.
    pub fn lift(&self) -> DualQuat {
        DualQuat::new(Quat::pure(self.omega), Quat::pure(self.v))
    }
}
