//! PIPG on an explicit constraint matrix.

use super::{step_sizes, stopping, CheckRecord, PipgError, PipgSettings};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct GenericOutcome {
    pub z: DVector<f64>,
    pub w: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<CheckRecord>,
}

/// Runs PIPG from `(z0, w0)`; `observer` sees `(j, ẑ^j, w^j)` after every iteration.
#[allow(clippy::too_many_arguments)]
pub fn pipg_generic(
    q: &DVector<f64>,
    h: &DMatrix<f64>,
    rhs: &DVector<f64>,
    project: &dyn Fn(&mut [f64]),
    lambda: f64,
    sigma: f64,
    settings: &PipgSettings,
    warm: Option<(&DVector<f64>, &DVector<f64>)>,
    mut observer: Option<&mut dyn FnMut(usize, &[f64], &[f64])>,
) -> Result<GenericOutcome, PipgError> {
    settings.validate()?;
    if h.ncols() != q.len() || h.nrows() != rhs.len() {
        return Err(PipgError::InvalidInput("dimension mismatch".into()));
    }
    let (alpha, beta) = step_sizes(lambda, sigma, settings.omega)?;
    let rho = settings.rho;
    let t = &settings.tol;
    let (mut z, mut w) = match warm {
        Some((z0, w0)) => (z0.clone(), w0.clone()),
        None => (DVector::zeros(h.ncols()), DVector::zeros(h.nrows())),
    };
    let mut zeta = z.clone();
    let mut eta = w.clone();
    let mut trace = Vec::new();
    for j in 1..=t.j_max {
        let mut zn = &zeta - (&zeta * lambda + q + h.tr_mul(&eta)) * alpha;
        project(zn.as_mut_slice());
        let wn = &eta + (h * (&zn * 2.0 - &zeta) - rhs) * beta;
        zeta = &zeta * (1.0 - rho) + &zn * rho;
        eta = &eta * (1.0 - rho) + &wn * rho;
        if let Some(obs) = observer.as_mut() {
            obs(j, zn.as_slice(), wn.as_slice());
        }
        if j % t.j_check == 0 {
            let dz = (&zn - &z).amax();
            let dw = (&wn - &w).amax();
            trace.push(CheckRecord { iteration: j, primal_change: dz, dual_change: dw });
            if stopping(dz, zn.amax(), z.amax(), dw, wn.amax(), w.amax(), t.eps_abs, t.eps_rel) {
                return Ok(GenericOutcome { z: zn, w: wn, iterations: j, converged: true, trace });
            }
        }
        z = zn;
        w = wn;
    }
    Ok(GenericOutcome { z, w, iterations: t.j_max, converged: false, trace })
}
