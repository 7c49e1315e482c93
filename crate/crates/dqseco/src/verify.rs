//! Self-checks run against a mission configuration.
//!
//! Each check compares a solve-path routine against an independent reference:
//! finite differences for the Jacobians, plain propagation for the
//! discretization, dense matrices for the preconditioner and the solver.

use crate::dynamics::{discretize, idx, renormalize, single_shot, ControlVec, Dynamics, StateVec, Vehicle, NU, NX};
use crate::pipg::{pipg_custom, pipg_generic, PipgSettings, StopTolerances};
use crate::precondition::dense::{precondition_dense, vectorize_hatted, vectorize_raw};
use crate::precondition::{chol_state, Hatted};
use crate::seco::{initial_guess, subproblem_at, Problem, SecoConfig, SecoError};
use crate::subproblem::{Dual, Primal};
use nalgebra::{DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Fewer samples and iterations.
    pub quick: bool,
    /// Corrupt each solve-path result before comparison; every check must then fail.
    pub inject_fault: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { quick: false, inject_fault: false, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed discrepancy, in the units of `tolerance`.
    pub error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, error: f64, tolerance: f64, detail: String) -> Self {
        Self { name, passed: error <= tolerance, error, tolerance, detail }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run(p: &Problem, cfg: &SecoConfig, opts: &VerifyOptions) -> Result<VerifyReport, SecoError> {
    p.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let small = SecoConfig { nodes: 4, ..cfg.clone() };
    let guess = initial_guess(p, small.nodes, small.s_guess)?;
    let (_, hat) = subproblem_at(p, &small, &guess)?;
    let checks = vec![
        jacobians(p, cfg, opts, &mut rng)?,
        discretization(p, cfg, opts)?,
        cholesky(opts, &mut rng)?,
        preconditioner(p, &small, &guess, opts)?,
        solver_oracle(&hat, opts)?,
        projections(&hat, opts, &mut rng),
    ];
    Ok(VerifyReport { checks })
}

/// Random state near the initial guess and a random admissible control.
pub fn sample_point(p: &Problem, base: &StateVec, rng: &mut impl Rng) -> (StateVec, ControlVec) {
    let c = &p.constraints;
    let mut x = *base;
    x[idx::M] += rng.random_range(-50.0..50.0);
    for i in idx::Q..idx::D {
        x[i] += rng.random_range(-0.1..0.1);
    }
    for i in idx::D..idx::W {
        x[i] += rng.random_range(-20.0..20.0);
    }
    for i in idx::W..idx::V {
        x[i] = rng.random_range(-c.rate_max..c.rate_max);
    }
    for i in idx::V..NX {
        x[i] += rng.random_range(-5.0..5.0);
    }
    renormalize(&mut x);
    let mut u = ControlVec::zeros();
    u[idx::T] = rng.random_range(c.thrust_min..c.thrust_max);
    u[idx::DELTA] = rng.random_range(-c.gimbal_max..c.gimbal_max);
    u[idx::PHI] = rng.random_range(0.0..TAU);
    for i in idx::TAU..NU {
        u[i] = rng.random_range(-c.torque_max..c.torque_max);
    }
    (x, u)
}

/// Largest `|analytic − fd| / max(1e-6, 1e-4 |fd|)` over `A` and `B`.
pub fn jacobian_error(vehicle: &Vehicle, x: &StateVec, u: &ControlVec, fault: bool) -> Result<f64, SecoError> {
    let (_, mut a, b) = vehicle.linearize(x, u)?;
    if fault {
        a[(idx::Q, idx::W)] += 1e-2;
    }
    let scale = |fd: f64| (1e-4 * fd.abs()).max(1e-6);
    let mut worst: f64 = 0.0;
    for j in 0..NX {
        let h = 1e-6 * x[j].abs().max(1.0);
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let fd = (vehicle.f(&xp, u)? - vehicle.f(&xm, u)?) / (2.0 * h);
        for i in 0..NX {
            worst = worst.max((a[(i, j)] - fd[i]).abs() / scale(fd[i]));
        }
    }
    for j in 0..NU {
        let h = 1e-6 * u[j].abs().max(1.0);
        let (mut up, mut um) = (*u, *u);
        up[j] += h;
        um[j] -= h;
        let fd = (vehicle.f(x, &up)? - vehicle.f(x, &um)?) / (2.0 * h);
        for i in 0..NX {
            worst = worst.max((b[(i, j)] - fd[i]).abs() / scale(fd[i]));
        }
    }
    Ok(worst)
}

fn jacobians(p: &Problem, cfg: &SecoConfig, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<CheckResult, SecoError> {
    let samples = if opts.quick { 20 } else { 100 };
    let vehicle = Vehicle::new(p.params.clone());
    let guess = initial_guess(p, cfg.nodes, cfg.s_guess)?;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let (x, u) = sample_point(p, &guess.x[i % guess.nodes()], rng);
        worst = worst.max(jacobian_error(&vehicle, &x, &u, opts.inject_fault)?);
    }
    Ok(CheckResult::new("jacobians", worst, 1.0, format!("{samples} samples, central differences")))
}

fn discretization(p: &Problem, cfg: &SecoConfig, opts: &VerifyOptions) -> Result<CheckResult, SecoError> {
    let vehicle = Vehicle::new(p.params.clone());
    let guess = initial_guess(p, cfg.nodes, cfg.s_guess)?;
    let disc = discretize(&vehicle, &guess.x, &guess.u, guess.s, cfg.substeps)?;
    let mut worst: f64 = 0.0;
    for (k, iv) in disc.intervals.iter().enumerate() {
        // the LTV recurrence at zero deviation is x̄_{k+1} + d_k
        let mut lin = guess.x[k + 1] + iv.d;
        if opts.inject_fault {
            lin[idx::V] += 1e-6;
        }
        let span = [guess.u[k], guess.u[k + 1]];
        let seg = single_shot(&vehicle, &guess.x[k], &span, guess.s / (guess.nodes() - 1) as f64, cfg.substeps)?;
        let prop = seg[1];
        let rel = (lin - prop).amax() / prop.amax().max(1.0);
        worst = worst.max(rel);
    }
    Ok(CheckResult::new(
        "discretization",
        worst,
        1e-10,
        format!("{} intervals, stitching against direct propagation", disc.intervals.len()),
    ))
}

fn cholesky(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<CheckResult, SecoError> {
    let pairs = if opts.quick { 100 } else { 1000 };
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let w_tr = 10f64.powf(rng.random_range(-3.0..3.0));
        let w_vse = 10f64.powf(rng.random_range(-3.0..5.0));
        let c = chol_state(w_tr, w_vse, 1.0)?;
        let w = Matrix2::new(w_tr + w_vse, -w_vse, -w_vse, w_vse);
        let mut r = c.r();
        if opts.inject_fault {
            r[(0, 1)] *= 1.0 + 1e-6;
        }
        let e1 = (r.transpose() * r - w).amax() / w.amax();
        let e2 = (r * c.r_inv() - Matrix2::identity()).amax();
        worst = worst.max(e1).max(e2);
    }
    Ok(CheckResult::new("cholesky", worst, 1e-12, format!("{pairs} weight pairs")))
}

fn preconditioner(p: &Problem, cfg: &SecoConfig, guess: &crate::seco::Trajectory, opts: &VerifyOptions) -> Result<CheckResult, SecoError> {
    let (sub, hat) = subproblem_at(p, cfg, guess)?;
    let raw = vectorize_raw(&sub);
    let dense = precondition_dense(&raw, &cfg.spectral, cfg.lambda)?;
    let mut custom = vectorize_hatted(&hat);
    if opts.inject_fault {
        custom.h[(0, 0)] += 1e-6;
    }
    let eh = (&custom.h - &dense.h).amax();
    let er = (&custom.rhs - &dense.rhs).amax();
    let eq = (&custom.q - &dense.q).amax() / dense.q.amax().max(1.0);
    let el = (hat.lambda - dense.spectral.lambda).abs() / dense.spectral.lambda;
    Ok(CheckResult::new(
        "preconditioner",
        eh.max(er).max(eq).max(el),
        1e-10,
        format!("N = {}, {} × {} constraint matrix", cfg.nodes, dense.h.nrows(), dense.h.ncols()),
    ))
}

fn solver_oracle(hat: &Hatted<NX, NU>, opts: &VerifyOptions) -> Result<CheckResult, SecoError> {
    let iterations = if opts.quick { 50 } else { 300 };
    let settings = PipgSettings {
        tol: StopTolerances { eps_abs: 0.0, eps_rel: 0.0, j_check: iterations, j_max: iterations },
        ..PipgSettings::default()
    };
    let n = hat.nodes();
    let mut custom: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(iterations);
    let mut record = |_: usize, z: &Primal<NX, NU>, w: &Dual<NX>| custom.push((z.to_flat(), w.to_flat()));
    pipg_custom(hat, &settings, None, Some(&mut record))?;

    let mut dense = vectorize_hatted(hat);
    if opts.inject_fault {
        dense.rhs[0] += 1e-6;
    }
    let mut worst: f64 = 0.0;
    let mut j_seen = 0;
    let mut compare = |j: usize, z: &[f64], w: &[f64]| {
        let (cz, cw) = &custom[j - 1];
        let scale = DVector::from_column_slice(z).amax().max(1.0);
        let ez = z.iter().zip(cz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ew = w.iter().zip(cw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(ez.max(ew) / scale);
        j_seen = j;
    };
    let project = |z: &mut [f64]| hat.project_flat(z);
    pipg_generic(&dense.q, &dense.h, &dense.rhs, &project, hat.lambda, hat.sigma_max, &settings, None, Some(&mut compare))?;
    Ok(CheckResult::new(
        "solver_oracle",
        worst,
        1e-12,
        format!("N = {n}, {j_seen} iterations, blockwise against dense PIPG"),
    ))
}

fn projections(hat: &Hatted<NX, NU>, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> CheckResult {
    let samples = if opts.quick { 200 } else { 2000 };
    let n = hat.nodes();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let flat: Vec<f64> = (0..Primal::<NX, NU>::flat_len(n)).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut z = Primal::<NX, NU>::from_flat(&flat, n);
        hat.project(&mut z);
        if opts.inject_fault {
            z.x[0][0] += 1e-3;
        }
        let once = z.clone();
        hat.project(&mut z);
        worst = worst.max(z.diff_inf_norm(&once)).max(hat.set_violation(&once));
    }
    CheckResult::new("projections", worst, 1e-9, format!("{samples} random points, idempotence and membership"))
}
