//! Power and shifted power iterations over an abstract linear operator.
//!
//! The operator is supplied as a pair of closures on flat vectors, so the same
//! routine serves the blockwise operator and the dense oracle.

use super::{Hatted, LambdaMode, PreconditionError};
use crate::subproblem::{Dual, Primal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_buff: f64,
    pub j_max: usize,
    pub seed: u64,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self { eps_abs: 1e-9, eps_rel: 1e-6, eps_buff: 0.05, j_max: 500, seed: 0 }
    }
}

/// Outcome of one (shifted) power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRun {
    /// Buffered estimate.
    pub value: f64,
    /// Estimate before buffering.
    pub raw: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub lambda: f64,
    pub power: SpectralRun,
    pub shifted: Option<SpectralRun>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Uniform random start vector in `[−1, 1)`, filled in order.
pub fn random_start(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn converged(a: f64, b: f64, s: &SpectralSettings) -> bool {
    (a - b).abs() <= s.eps_abs + s.eps_rel * a.max(b)
}

/// Buffered estimate of `‖H‖²` from the start vector `z`.
pub fn power_iteration(
    mut apply_h: impl FnMut(&[f64]) -> Vec<f64>,
    mut apply_ht: impl FnMut(&[f64]) -> Vec<f64>,
    mut z: Vec<f64>,
    s: &SpectralSettings,
) -> SpectralRun {
    let mut sigma = norm(&z);
    assert!(sigma > 0.0, "power iteration needs a nonzero start vector");
    let mut sigma_new = sigma;
    for j in 1..=s.j_max {
        let mut w = apply_h(&z);
        w.iter_mut().for_each(|a| *a /= sigma);
        z = apply_ht(&w);
        sigma_new = norm(&z);
        if sigma_new == 0.0 || converged(sigma_new, sigma, s) {
            return SpectralRun { value: (1.0 + s.eps_buff) * sigma_new, raw: sigma_new, iterations: j, converged: true };
        }
        sigma = sigma_new;
    }
    log::debug!("power iteration reached {} iterations", s.j_max);
    SpectralRun { value: (1.0 + s.eps_buff) * sigma_new, raw: sigma_new, iterations: s.j_max, converged: false }
}

/// Buffered estimate of the smallest eigenvalue of `H Hᵀ`, given `σ_max ≥ ‖H‖²`.
pub fn shifted_power_iteration(
    mut apply_h: impl FnMut(&[f64]) -> Vec<f64>,
    mut apply_ht: impl FnMut(&[f64]) -> Vec<f64>,
    mut w: Vec<f64>,
    sigma_max: f64,
    s: &SpectralSettings,
) -> SpectralRun {
    let mut st = norm(&w);
    assert!(st > 0.0, "shifted power iteration needs a nonzero start vector");
    let mut st_new = st;
    for j in 1..=s.j_max {
        let z = apply_ht(&w);
        let hz = apply_h(&z);
        w = hz.iter().zip(&w).map(|(a, b)| (a - sigma_max * b) / st).collect();
        st_new = norm(&w);
        if st_new == 0.0 || converged(st_new, st, s) {
            let raw = sigma_max - st_new;
            return SpectralRun { value: (1.0 - s.eps_buff) * raw, raw, iterations: j, converged: true };
        }
        st = st_new;
    }
    log::debug!("shifted power iteration reached {} iterations", s.j_max);
    let raw = sigma_max - st_new;
    SpectralRun { value: (1.0 - s.eps_buff) * raw, raw, iterations: s.j_max, converged: false }
}

/// Estimates for the blockwise operator of `h`; the start vectors are seeded
/// from `settings.seed` (primal) and `settings.seed + 1` (dual).
pub fn estimate_custom<const NX: usize, const NU: usize>(
    h: &Hatted<NX, NU>,
    settings: &SpectralSettings,
    mode: LambdaMode,
) -> Result<SpectralEstimate, PreconditionError> {
    let n = h.nodes();
    let fwd = |z: &[f64]| h.apply_h(&Primal::<NX, NU>::from_flat(z, n)).to_flat();
    let adj = |w: &[f64]| h.apply_ht(&Dual::<NX>::from_flat(w)).to_flat();
    let z0 = random_start(Primal::<NX, NU>::flat_len(n), settings.seed);
    let w0 = random_start((n - 1) * NX, settings.seed.wrapping_add(1));
    finish(fwd, adj, z0, w0, settings, mode)
}

pub(crate) fn finish(
    fwd: impl Fn(&[f64]) -> Vec<f64>,
    adj: impl Fn(&[f64]) -> Vec<f64>,
    z0: Vec<f64>,
    w0: Vec<f64>,
    settings: &SpectralSettings,
    mode: LambdaMode,
) -> Result<SpectralEstimate, PreconditionError> {
    let power = power_iteration(&fwd, &adj, z0, settings);
    if !(power.value > 0.0 && power.value.is_finite()) {
        return Err(PreconditionError::InvalidConfig(format!("operator norm estimate {} is not positive", power.value)));
    }
    match mode {
        LambdaMode::Fixed(l) => {
            if !(l > 0.0 && l.is_finite()) {
                return Err(PreconditionError::InvalidConfig(format!("lambda must be positive, got {l}")));
            }
            Ok(SpectralEstimate { sigma_max: power.value, sigma_min: 2.0 * l * l, lambda: l, power, shifted: None })
        }
        LambdaMode::Auto => {
            let shifted = shifted_power_iteration(&fwd, &adj, w0, power.value, settings);
            if !(shifted.value > 0.0) {
                return Err(PreconditionError::InvalidConfig(format!(
                    "smallest singular value estimate {} is not positive; the dynamics rows are dependent",
                    shifted.value
                )));
            }
            Ok(SpectralEstimate {
                sigma_max: power.value,
                sigma_min: shifted.value,
                lambda: (shifted.value / 2.0).sqrt(),
                power,
                shifted: Some(shifted),
            })
        }
    }
}
