//! Devectorized PIPG on a preconditioned subproblem.
//!
//! Each iteration touches only per-interval blocks of size at most `n_x × n_x`.

use super::{step_sizes, stopping, CheckRecord, PipgError, PipgSettings};
use crate::audit;
use crate::precondition::Hatted;
use crate::subproblem::{Dual, Primal};
use nalgebra::SVector;

/// Warm start: primal in deviation coordinates, dual in hatted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart<const NX: usize, const NU: usize> {
    pub z: Primal<NX, NU>,
    pub w: Dual<NX>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomOutcome<const NX: usize, const NU: usize> {
    /// Solution in deviation coordinates (`L⁻¹ ẑ`).
    pub z: Primal<NX, NU>,
    pub z_hat: Primal<NX, NU>,
    pub w: Dual<NX>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<CheckRecord>,
}

impl<const NX: usize, const NU: usize> CustomOutcome<NX, NU> {
    pub fn warm_start(&self) -> WarmStart<NX, NU> {
        WarmStart { z: self.z.clone(), w: self.w.clone() }
    }
}

/// Runs PIPG on `hat`; `observer` sees `(j, ẑ^j, w^j)` after every iteration.
pub fn pipg_custom<const NX: usize, const NU: usize>(
    hat: &Hatted<NX, NU>,
    settings: &PipgSettings,
    warm: Option<&WarmStart<NX, NU>>,
    mut observer: Option<&mut dyn FnMut(usize, &Primal<NX, NU>, &Dual<NX>)>,
) -> Result<CustomOutcome<NX, NU>, PipgError> {
    const { assert!(NX <= 15 && NU <= 15) };
    audit::record(NX, NX);
    settings.validate()?;
    let n = hat.nodes();
    let (alpha, beta) = step_sizes(hat.lambda, hat.sigma_max, settings.omega)?;
    let (lambda, rho) = (hat.lambda, settings.rho);
    let t = &settings.tol;

    let (mut z, mut w) = match warm {
        Some(ws) => {
            if ws.z.nodes() != n || ws.w.w.len() != n - 1 {
                return Err(PipgError::InvalidInput("warm start horizon does not match".into()));
            }
            (hat.chol.lift(&ws.z), ws.w.clone())
        }
        None => (Primal::zeros(n), Dual::zeros(n)),
    };
    let mut zeta = z.clone();
    let mut eta = w.clone();
    let mut zn = z.clone();
    let mut wn = w.clone();
    let mut trace = Vec::new();
    let blocks = &hat.blocks;

    for j in 1..=t.j_max {
        // primal projected-gradient step
        let mut gs = hat.q_s + lambda * zeta.s;
        for k in 0..n {
            let mut gx = hat.q_x[k] + zeta.x[k] * lambda;
            let mut gxi = hat.q_xi[k] + zeta.xi[k] * lambda;
            let mut gu = hat.q_u[k] + zeta.u[k] * lambda;
            if k + 1 < n {
                let (b, e) = (&blocks[k], &eta.w[k]);
                gx += b.a_minus.tr_mul(e);
                gxi += b.e_minus.tr_mul(e);
                gu += b.b_minus.tr_mul(e);
                gs += b.s.dot(e);
            }
            if k > 0 {
                let (b, e) = (&blocks[k - 1], &eta.w[k - 1]);
                gx += b.a_plus.component_mul(e);
                gxi += b.e_plus.component_mul(e);
                gu += b.b_plus.tr_mul(e);
            }
            zn.x[k] = zeta.x[k] - gx * alpha;
            zn.xi[k] = zeta.xi[k] - gxi * alpha;
            zn.u[k] = zeta.u[k] - gu * alpha;
        }
        zn.s = zeta.s - alpha * gs;
        hat.project(&mut zn);

        // dual update on the extrapolated primal 2ẑ⁺ − ζ
        let bar = |a: &SVector<f64, NX>, b: &SVector<f64, NX>| a * 2.0 - b;
        let s_bar = 2.0 * zn.s - zeta.s;
        for (k, b) in blocks.iter().enumerate() {
            let r = b.a_minus * bar(&zn.x[k], &zeta.x[k])
                + b.a_plus.component_mul(&bar(&zn.x[k + 1], &zeta.x[k + 1]))
                + b.e_minus * bar(&zn.xi[k], &zeta.xi[k])
                + b.e_plus.component_mul(&bar(&zn.xi[k + 1], &zeta.xi[k + 1]))
                + b.b_minus * (zn.u[k] * 2.0 - zeta.u[k])
                + b.b_plus * (zn.u[k + 1] * 2.0 - zeta.u[k + 1])
                + b.s * s_bar
                + b.d;
            wn.w[k] = eta.w[k] + r * beta;
        }

        // extrapolation
        for k in 0..n {
            zeta.x[k] = zeta.x[k] * (1.0 - rho) + zn.x[k] * rho;
            zeta.xi[k] = zeta.xi[k] * (1.0 - rho) + zn.xi[k] * rho;
            zeta.u[k] = zeta.u[k] * (1.0 - rho) + zn.u[k] * rho;
        }
        zeta.s = zeta.s * (1.0 - rho) + zn.s * rho;
        for k in 0..n - 1 {
            eta.w[k] = eta.w[k] * (1.0 - rho) + wn.w[k] * rho;
        }

        if let Some(obs) = observer.as_mut() {
            obs(j, &zn, &wn);
        }
        if j % t.j_check == 0 {
            let dz = zn.diff_inf_norm(&z);
            let dw = wn.diff_inf_norm(&w);
            trace.push(CheckRecord { iteration: j, primal_change: dz, dual_change: dw });
            if stopping(dz, zn.inf_norm(), z.inf_norm(), dw, wn.inf_norm(), w.inf_norm(), t.eps_abs, t.eps_rel) {
                return Ok(finish(hat, zn, wn, j, true, trace));
            }
        }
        std::mem::swap(&mut z, &mut zn);
        std::mem::swap(&mut w, &mut wn);
    }
    log::debug!("PIPG reached {} iterations without meeting the stopping test", t.j_max);
    Ok(finish(hat, z, w, t.j_max, false, trace))
}

fn finish<const NX: usize, const NU: usize>(
    hat: &Hatted<NX, NU>,
    z_hat: Primal<NX, NU>,
    w: Dual<NX>,
    iterations: usize,
    converged: bool,
    trace: Vec<CheckRecord>,
) -> CustomOutcome<NX, NU> {
    CustomOutcome { z: hat.chol.recover(&z_hat), z_hat, w, iterations, converged, trace }
}
