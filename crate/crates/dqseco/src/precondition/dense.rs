//! Dense reference implementation: explicit vectorization of the subproblem
//! and generic preconditioning with a general Cholesky factorization.
//!
//! Used only as a test oracle and by the verification suite.

use super::spectral::{finish, random_start, SpectralEstimate, SpectralSettings};
use super::{Hatted, LambdaMode, PreconditionError};
use crate::subproblem::{Primal, Subproblem};
use nalgebra::{DMatrix, DVector};

/// Column offsets of each block in the flat primal layout.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub n: usize,
    pub nx: usize,
    pub nu: usize,
}

impl Layout {
    pub fn x(&self, k: usize) -> usize {
        k * self.nx
    }
    pub fn xi(&self, k: usize) -> usize {
        (self.n + k) * self.nx
    }
    pub fn u(&self, k: usize) -> usize {
        2 * self.n * self.nx + k * self.nu
    }
    pub fn s(&self) -> usize {
        self.len() - 1
    }
    pub fn len(&self) -> usize {
        self.n * (2 * self.nx + self.nu) + 1
    }
    pub fn rows(&self) -> usize {
        (self.n - 1) * self.nx
    }
}

/// `min ½ zᵀPz + qᵀz  s.t.  Hz = h` in flat deviation variables (sets excluded).
#[derive(Debug, Clone)]
pub struct DenseRaw {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub h: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Rows per interval.
    pub nx: usize,
}

pub fn vectorize_raw<const NX: usize, const NU: usize>(sub: &Subproblem<NX, NU>) -> DenseRaw {
    let l = Layout { n: sub.nodes(), nx: NX, nu: NU };
    let w = &sub.weights;
    let mut p = DMatrix::zeros(l.len(), l.len());
    let mut h = DMatrix::zeros(l.rows(), l.len());
    let mut rhs = DVector::zeros(l.rows());
    let mut q = DVector::zeros(l.len());
    for k in 0..l.n {
        for i in 0..NX {
            let (a, b) = (l.x(k) + i, l.xi(k) + i);
            p[(a, a)] = w.w_tr + w.w_vse;
            p[(a, b)] = -w.w_vse;
            p[(b, a)] = -w.w_vse;
            p[(b, b)] = w.w_vse;
            q[a] = sub.q_x[k][i];
            q[b] = sub.q_xi[k][i];
        }
        for i in 0..NU {
            p[(l.u(k) + i, l.u(k) + i)] = w.w_tr;
            q[l.u(k) + i] = sub.q_u[k][i];
        }
    }
    p[(l.s(), l.s())] = w.w_tr_s;
    q[l.s()] = sub.q_s;
    for k in 0..l.n - 1 {
        let r = k * NX;
        h.view_mut((r, l.x(k)), (NX, NX)).copy_from(&sub.a[k]);
        for i in 0..NX {
            h[(r + i, l.x(k + 1) + i)] = -1.0;
        }
        h.view_mut((r, l.u(k)), (NX, NU)).copy_from(&sub.b_minus[k]);
        h.view_mut((r, l.u(k + 1)), (NX, NU)).copy_from(&sub.b_plus[k]);
        for i in 0..NX {
            h[(r + i, l.s())] = sub.s[k][i];
            rhs[r + i] = -sub.d[k][i];
        }
    }
    DenseRaw { p, q, h, rhs, nx: NX }
}

/// Explicit `Ĥ`, `ĥ = −d̂` and `q̂` of a preconditioned subproblem.
#[derive(Debug, Clone)]
pub struct DenseHatted {
    pub h: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub q: DVector<f64>,
}

pub fn vectorize_hatted<const NX: usize, const NU: usize>(hat: &Hatted<NX, NU>) -> DenseHatted {
    let l = Layout { n: hat.nodes(), nx: NX, nu: NU };
    let mut h = DMatrix::zeros(l.rows(), l.len());
    let mut rhs = DVector::zeros(l.rows());
    for (k, b) in hat.blocks.iter().enumerate() {
        let r = k * NX;
        h.view_mut((r, l.x(k)), (NX, NX)).copy_from(&b.a_minus);
        h.view_mut((r, l.xi(k)), (NX, NX)).copy_from(&b.e_minus);
        h.view_mut((r, l.u(k)), (NX, NU)).copy_from(&b.b_minus);
        h.view_mut((r, l.u(k + 1)), (NX, NU)).copy_from(&b.b_plus);
        for i in 0..NX {
            h[(r + i, l.x(k + 1) + i)] = b.a_plus[i];
            h[(r + i, l.xi(k + 1) + i)] = b.e_plus[i];
            h[(r + i, l.s())] = b.s[i];
            rhs[r + i] = -b.d[i];
        }
    }
    let q = Primal::<NX, NU> { x: hat.q_x.clone(), xi: hat.q_xi.clone(), u: hat.q_u.clone(), s: hat.q_s };
    DenseHatted { h, rhs, q: DVector::from_vec(q.to_flat()) }
}

/// Generic preconditioning of an explicit problem.
#[derive(Debug, Clone)]
pub struct DensePreconditioned {
    /// Upper factor with `P = LᵀL`.
    pub l: DMatrix<f64>,
    pub l_inv: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// `λ L⁻ᵀ q`.
    pub q: DVector<f64>,
    pub spectral: SpectralEstimate,
}

pub fn precondition_dense(
    raw: &DenseRaw,
    settings: &SpectralSettings,
    mode: LambdaMode,
) -> Result<DensePreconditioned, PreconditionError> {
    let chol = raw
        .p
        .clone()
        .cholesky()
        .ok_or_else(|| PreconditionError::InvalidConfig("objective matrix is not positive definite".into()))?;
    let l = chol.l().transpose();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| PreconditionError::InvalidConfig("singular Cholesky factor".into()))?;
    let mut h = &raw.h * &l_inv;
    let mut rhs = raw.rhs.clone();
    for i in 0..h.nrows() {
        let n = h.row(i).amax();
        if n == 0.0 {
            return Err(PreconditionError::DegenerateRow { interval: i / raw.nx, row: i % raw.nx });
        }
        h.row_mut(i).scale_mut(1.0 / n);
        rhs[i] /= n;
    }
    let spectral = estimate_dense(&h, settings, mode)?;
    let q = l_inv.transpose() * &raw.q * spectral.lambda;
    Ok(DensePreconditioned { l, l_inv, h, rhs, q, spectral })
}

/// Spectral estimates for an explicit matrix with the same start vectors as
/// the blockwise routine.
pub fn estimate_dense(
    h: &DMatrix<f64>,
    settings: &SpectralSettings,
    mode: LambdaMode,
) -> Result<SpectralEstimate, PreconditionError> {
    let fwd = |z: &[f64]| (h * DVector::from_column_slice(z)).as_slice().to_vec();
    let adj = |w: &[f64]| (h.tr_mul(&DVector::from_column_slice(w))).as_slice().to_vec();
    let z0 = random_start(h.ncols(), settings.seed);
    let w0 = random_start(h.nrows(), settings.seed.wrapping_add(1));
    finish(fwd, adj, z0, w0, settings, mode)
}
