mod common;

use common::{kkt_solve, max_abs_diff, rng, toy_subproblem};
use dqseco::pipg::{pipg_custom, pipg_generic, PipgSettings, StopTolerances};
use dqseco::precondition::dense::vectorize_hatted;
use dqseco::precondition::{precondition, Hatted, LambdaMode, SpectralSettings};
use dqseco::subproblem::{Dual, Primal};

const NX: usize = 6;
const NU: usize = 2;

fn fixed_iterations(j: usize) -> PipgSettings {
    PipgSettings { tol: StopTolerances { eps_abs: 0.0, eps_rel: 0.0, j_check: j, j_max: j }, ..Default::default() }
}

/// Largest per-iterate gap between the blockwise and the dense solver.
pub fn iterate_gap(hat: &Hatted<NX, NU>, settings: &PipgSettings) -> (f64, usize) {
    let mut custom: Vec<Vec<f64>> = Vec::new();
    let mut rec = |_: usize, z: &Primal<NX, NU>, w: &Dual<NX>| {
        let mut v = z.to_flat();
        v.extend(w.to_flat());
        custom.push(v);
    };
    pipg_custom(hat, settings, None, Some(&mut rec)).unwrap();
    let dense = vectorize_hatted(hat);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut cmp = |j: usize, z: &[f64], w: &[f64]| {
        let mut v = z.to_vec();
        v.extend_from_slice(w);
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(max_abs_diff(&v, &custom[j - 1]) / scale);
        count = j;
    };
    let project = |z: &mut [f64]| hat.project_flat(z);
    pipg_generic(&dense.q, &dense.h, &dense.rhs, &project, hat.lambda, hat.sigma_max, settings, None, Some(&mut cmp)).unwrap();
    assert_eq!(count, custom.len());
    (worst, count)
}

#[test]
fn custom_matches_generic_iterates_on_random_toys() {
    let mut r = rng(11);
    for instance in 0..24 {
        let sub = toy_subproblem::<NX, NU>(&mut r, 4, instance % 3 != 0);
        let hat = precondition(&sub, &SpectralSettings { seed: instance, ..Default::default() }, LambdaMode::Auto).unwrap();
        let (gap, iters) = iterate_gap(&hat, &fixed_iterations(400));
        assert_eq!(iters, 400);
        assert!(gap <= 1e-12, "instance {instance}: iterate gap {gap:e}");
    }
}

#[test]
fn custom_matches_generic_with_stopping_rule() {
    let mut r = rng(12);
    let sub = toy_subproblem::<NX, NU>(&mut r, 4, true);
    let hat = precondition(&sub, &SpectralSettings::default(), LambdaMode::Auto).unwrap();
    let s = PipgSettings::default();
    let c = pipg_custom(&hat, &s, None, None).unwrap();
    let d = vectorize_hatted(&hat);
    let project = |z: &mut [f64]| hat.project_flat(z);
    let g = pipg_generic(&d.q, &d.h, &d.rhs, &project, hat.lambda, hat.sigma_max, &s, None, None).unwrap();
    assert_eq!(c.iterations, g.iterations);
    assert_eq!(c.converged, g.converged);
    assert!(max_abs_diff(&c.z_hat.to_flat(), g.z.as_slice()) <= 1e-12 * g.z.amax().max(1.0));
}

#[test]
fn converged_primal_matches_dense_kkt_solution() {
    let mut r = rng(13);
    let tight = PipgSettings {
        tol: StopTolerances { eps_abs: 1e-13, eps_rel: 1e-13, j_check: 50, j_max: 400_000 },
        ..Default::default()
    };
    for instance in 0..5 {
        let sub = toy_subproblem::<NX, NU>(&mut r, 4, false);
        let hat = precondition(&sub, &SpectralSettings::default(), LambdaMode::Auto).unwrap();
        let out = pipg_custom(&hat, &tight, None, None).unwrap();
        let dense = vectorize_hatted(&hat);
        let z_kkt = kkt_solve(&dense.h, &dense.rhs, &dense.q, &hat);
        let err = max_abs_diff(&out.z_hat.to_flat(), z_kkt.as_slice()) / z_kkt.amax().max(1.0);
        assert!(err <= 1e-6, "instance {instance}: PIPG vs KKT {err:e} after {} iterations", out.iterations);

        // and in deviation coordinates
        let z = hat.chol.recover(&Primal::<NX, NU>::from_flat(z_kkt.as_slice(), 4));
        assert!(out.z.diff_inf_norm(&z) <= 1e-6 * z.inf_norm().max(1.0));
        assert!(sub.dynamics_residual(&out.z) <= 1e-6);
    }
}

#[test]
fn warm_start_from_solution_stops_at_first_check() {
    let mut r = rng(14);
    let sub = toy_subproblem::<NX, NU>(&mut r, 4, true);
    let hat = precondition(&sub, &SpectralSettings::default(), LambdaMode::Auto).unwrap();
    let s = PipgSettings::default();
    let cold = pipg_custom(&hat, &s, None, None).unwrap();
    assert!(cold.converged);
    let warm = pipg_custom(&hat, &s, Some(&cold.warm_start()), None).unwrap();
    assert!(warm.converged);
    assert!(warm.iterations < cold.iterations, "{} vs {}", warm.iterations, cold.iterations);
}

#[test]
fn mismatched_warm_start_is_rejected() {
    let mut r = rng(15);
    let sub = toy_subproblem::<NX, NU>(&mut r, 4, true);
    let hat = precondition(&sub, &SpectralSettings::default(), LambdaMode::Auto).unwrap();
    let bad = dqseco::pipg::WarmStart { z: Primal::<NX, NU>::zeros(5), w: Dual::<NX>::zeros(5) };
    assert!(pipg_custom(&hat, &PipgSettings::default(), Some(&bad), None).is_err());
}
