//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Tolerances are fixed below.

mod common;

use common::{foh_expm, foh_expm_state, gaussian_matrix, kkt_solve, lunar, max_abs_diff, rng, toy_subproblem, two_halfspace_oracle, uniform, Lti};
use dqseco::audit;
use dqseco::dynamics::{dilated_eom, discretize, idx, jacobians, single_shot, ControlVec, StateVec, Vehicle};
use dqseco::pipg::{pipg_custom, pipg_generic, PipgSettings, StopTolerances};
use dqseco::precondition::dense::{precondition_dense, vectorize_hatted, vectorize_raw};
use dqseco::precondition::spectral::random_start;
use dqseco::precondition::{chol_state, power_iteration, precondition, shifted_power_iteration, Hatted, LambdaMode, SpectralSettings};
use dqseco::seco::{initial_guess, solve, solve_observed, Problem};
use dqseco::subproblem::{AffineSubspace, Dual, Primal, Set};
use dqseco::verify::sample_point;
use nalgebra::{DMatrix, DVector, Matrix2, Quaternion, SMatrix, SVector, UnitQuaternion, Vector3};
use rand::Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

const TOY_NX: usize = 6;
const TOY_NU: usize = 2;

const POS_TOL: f64 = 10.0;
const VEL_TOL: f64 = 0.25;
const MAX_SCP_ITERATIONS: usize = 7;
const MAX_RUNTIME_S: f64 = 5.0;
const LOS_STC_DEG: f64 = 2.0 + 0.05;
const BOUND_SLACK: f64 = 1e-6;
const ITERATE_TOL: f64 = 1e-12;
const KKT_TOL: f64 = 1e-6;
const EXPM_TOL: f64 = 1e-9;
const STITCH_TOL: f64 = 1e-10;
const CHOL_TOL: f64 = 1e-12;
const DENSE_TOL: f64 = 1e-10;
const SPECTRAL_TOL: f64 = 1e-4;
const JAC_ABS: f64 = 1e-6;
const JAC_REL: f64 = 1e-4;
const PROJ_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-8;
const SET_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn end_to_end() -> Outcome {
    let (p, cfg) = lunar();
    let t = Instant::now();
    let (_, r) = solve(&p, &cfg).map_err(|e| e.to_string())?;
    let wall = t.elapsed().as_secs_f64();
    let k = r.iterations.len();
    ensure(
        r.converged && k <= MAX_SCP_ITERATIONS && r.pos_err <= POS_TOL && r.vel_err <= VEL_TOL && wall <= MAX_RUNTIME_S,
        format!("{k} iterations, pos {:.3} m, vel {:.4} m/s, {wall:.2} s", r.pos_err, r.vel_err),
    )
}

fn node_sweep() -> Outcome {
    let (p, base) = lunar();
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [10, 15, 20, 25] {
        let cfg = dqseco::seco::SecoConfig { nodes: n, ..base.clone() };
        match solve(&p, &cfg) {
            Ok((_, r)) => {
                ok &= r.converged && r.pos_err <= POS_TOL && r.vel_err <= VEL_TOL;
                parts.push(format!("N={n}: {} it, {:.2} m, {:.3} m/s", r.iterations.len(), r.pos_err, r.vel_err));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("N={n}: {e}"));
            }
        }
    }
    ensure(ok, parts.join("; "))
}

/// Range, altitude, LoS, tilt (deg), peak rate (deg/s) and speed, from nalgebra's quaternion.
fn node_quantities(p: &Problem, x: &StateVec) -> [f64; 6] {
    let q = Quaternion::new(x[idx::Q + 3], x[idx::Q], x[idx::Q + 1], x[idx::Q + 2]);
    let d = Quaternion::new(x[idx::D + 3], x[idx::D], x[idx::D + 1], x[idx::D + 2]);
    let r = (d * q.conjugate()).imag() * 2.0;
    let rot = UnitQuaternion::from_quaternion(q);
    let b = rot * p.constraints.sensor_body;
    let los = (b.dot(&-r) / (b.norm() * r.norm())).clamp(-1.0, 1.0).acos().to_degrees();
    let tilt = (rot * Vector3::z()).z.clamp(-1.0, 1.0).acos().to_degrees();
    let rate = x.fixed_rows::<3>(idx::W).amax().to_degrees();
    [r.norm(), r.z, los, tilt, rate, x.fixed_rows::<3>(idx::V).norm()]
}

fn stc() -> Outcome {
    let (p, cfg) = lunar();
    let (traj, r) = solve(&p, &cfg).map_err(|e| e.to_string())?;
    if !r.converged {
        return Err("solve did not converge".into());
    }
    let c = &p.constraints;
    let n = traj.nodes();
    let mut inside = 0;
    let mut bad = Vec::new();
    let mut worst_los: f64 = 0.0;
    for (k, x) in traj.x.iter().enumerate() {
        let [range, alt, los, tilt, rate, speed] = node_quantities(&p, x);
        if range >= c.trigger_min && range <= c.trigger_max {
            inside += 1;
            worst_los = worst_los.max(los);
            if los > LOS_STC_DEG || tilt > 20.0 + BOUND_SLACK || rate > 1.0 + BOUND_SLACK || speed > 30.0 + BOUND_SLACK {
                bad.push(format!("node {k} (los {los:.3}, tilt {tilt:.2}, rate {rate:.3}, speed {speed:.2})"));
            }
        } else {
            let alt_ok = k == n - 1 || alt >= c.altitude_min - 0.1;
            if tilt > 90.0 + BOUND_SLACK || rate > 5.0 + BOUND_SLACK || speed > 90.0 + BOUND_SLACK || !alt_ok {
                bad.push(format!("node {k} outside window"));
            }
        }
    }
    if inside == 0 {
        return Err("no node in the trigger window".into());
    }
    let mut msg = format!("{inside} nodes in window, worst LoS {worst_los:.3} deg");
    if !bad.is_empty() {
        msg = format!("{msg}; violations: {}", bad.join(", "));
    }
    ensure(bad.is_empty(), msg)
}

fn oracle_equivalence() -> Outcome {
    let fixed = PipgSettings { tol: StopTolerances { eps_abs: 0.0, eps_rel: 0.0, j_check: 400, j_max: 400 }, ..Default::default() };
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    let toys = 24;
    for i in 0..toys {
        let sub = toy_subproblem::<TOY_NX, TOY_NU>(&mut r, 4, i % 3 != 0);
        let hat = precondition(&sub, &SpectralSettings { seed: i as u64, ..Default::default() }, LambdaMode::Auto).map_err(|e| e.to_string())?;
        let mut custom: Vec<Vec<f64>> = Vec::new();
        let mut rec = |_: usize, z: &Primal<TOY_NX, TOY_NU>, w: &Dual<TOY_NX>| {
            let mut v = z.to_flat();
            v.extend(w.to_flat());
            custom.push(v);
        };
        pipg_custom(&hat, &fixed, None, Some(&mut rec)).map_err(|e| e.to_string())?;
        let dense = vectorize_hatted(&hat);
        let mut cmp = |j: usize, z: &[f64], w: &[f64]| {
            let mut v = z.to_vec();
            v.extend_from_slice(w);
            let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            worst = worst.max(max_abs_diff(&v, &custom[j - 1]) / scale);
        };
        let project = |z: &mut [f64]| hat.project_flat(z);
        pipg_generic(&dense.q, &dense.h, &dense.rhs, &project, hat.lambda, hat.sigma_max, &fixed, None, Some(&mut cmp))
            .map_err(|e| e.to_string())?;
    }

    let tight = PipgSettings { tol: StopTolerances { eps_abs: 1e-13, eps_rel: 1e-13, j_check: 50, j_max: 400_000 }, ..Default::default() };
    let mut r = rng(13);
    let mut kkt: f64 = 0.0;
    for _ in 0..5 {
        let sub = toy_subproblem::<TOY_NX, TOY_NU>(&mut r, 4, false);
        let hat = precondition(&sub, &SpectralSettings::default(), LambdaMode::Auto).map_err(|e| e.to_string())?;
        let out = pipg_custom(&hat, &tight, None, None).map_err(|e| e.to_string())?;
        let dense = vectorize_hatted(&hat);
        let z = kkt_solve(&dense.h, &dense.rhs, &dense.q, &hat);
        kkt = kkt.max(max_abs_diff(&out.z_hat.to_flat(), z.as_slice()) / z.amax().max(1.0));
    }
    ensure(
        worst <= ITERATE_TOL && kkt <= KKT_TOL,
        format!("{toys} toys x 400 iterates, max gap {worst:.1e}; KKT gap {kkt:.1e} on 5 toys"),
    )
}

fn dm<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

fn discretization() -> Outcome {
    let sys = Lti::<2, 1> { a: SMatrix::<f64, 2, 2>::new(0.0, 1.0, 0.0, 0.0), b: SMatrix::<f64, 2, 1>::new(0.0, 1.0) };
    let xs = vec![SVector::<f64, 2>::new(1.0, -2.0); 6];
    let us: Vec<_> = (0..6).map(|k| SVector::<f64, 1>::new((k as f64).sin())).collect();
    let s = 3.0;
    let disc = discretize(&sys, &xs, &us, s, 20).map_err(|e| e.to_string())?;
    let (a, b) = (dm(&sys.a), dm(&sys.b));
    let (phi, bm, bp) = foh_expm(&a, &b, s / 5.0);
    let mut expm: f64 = 0.0;
    for (k, iv) in disc.intervals.iter().enumerate() {
        expm = expm.max((dm(&iv.a) - &phi).amax()).max((dm(&iv.b_minus) - &bm).amax()).max((dm(&iv.b_plus) - &bp).amax());
        let end = foh_expm_state(
            &a,
            &b,
            s / 5.0,
            &DVector::from_column_slice(xs[k].as_slice()),
            &DVector::from_column_slice(us[k].as_slice()),
            &DVector::from_column_slice(us[k + 1].as_slice()),
        );
        expm = expm.max((DVector::from_column_slice(iv.x_prop.as_slice()) - end).amax());
    }

    let (p, cfg) = lunar();
    let vehicle = Vehicle::new(p.params.clone());
    let guess = initial_guess(&p, cfg.nodes, cfg.s_guess).map_err(|e| e.to_string())?;
    let xs = single_shot(&vehicle, &guess.x[0], &guess.u, guess.s, cfg.substeps).map_err(|e| e.to_string())?;
    let disc = discretize(&vehicle, &xs, &guess.u, guess.s, cfg.substeps).map_err(|e| e.to_string())?;
    let mut x = xs[0];
    let mut stitch: f64 = 0.0;
    for (k, iv) in disc.intervals.iter().enumerate() {
        x = xs[k + 1] + iv.d + iv.a * (x - xs[k]);
        stitch = stitch.max((x - xs[k + 1]).amax() / xs[k + 1].amax());
    }
    ensure(
        expm <= EXPM_TOL && stitch <= STITCH_TOL,
        format!("double integrator vs expm {expm:.1e}; vehicle recurrence {stitch:.1e}"),
    )
}

fn preconditioning() -> Outcome {
    let mut r = rng(51);
    let mut chol: f64 = 0.0;
    for _ in 0..1000 {
        let w_tr = 10f64.powf(r.random_range(-4.0..4.0));
        let w_vse = 10f64.powf(r.random_range(-4.0..6.0));
        let c = chol_state(w_tr, w_vse, r.random_range(0.1..10.0)).map_err(|e| e.to_string())?;
        let w = Matrix2::new(w_tr + w_vse, -w_vse, -w_vse, w_vse);
        let (rr, ri) = (c.r(), c.r_inv());
        chol = chol.max((rr.transpose() * rr - w).amax() / w.amax());
        // identity error measured entrywise against |R| |R⁻¹|, exact on the diagonal
        let e = (rr * ri - Matrix2::identity()).zip_map(&(rr.abs() * ri.abs()), |e, m| e.abs() / m).amax();
        chol = chol.max(e);
    }

    let mut r = rng(52);
    let mut lam: f64 = 0.0;
    let mut dense: f64 = 0.0;
    for seed in 0..20u64 {
        let sub = toy_subproblem::<TOY_NX, TOY_NU>(&mut r, 4, seed % 2 == 0);
        let settings = SpectralSettings { seed, ..Default::default() };
        let hat = precondition(&sub, &settings, LambdaMode::Auto).map_err(|e| e.to_string())?;
        let raw = vectorize_raw(&sub);
        let li = recover_matrix(&hat);
        let ph = li.transpose() * &raw.p * &li;
        lam = lam.max((&ph - DMatrix::identity(ph.nrows(), ph.ncols())).amax() / raw.p.amax().max(1.0));
        let c = vectorize_hatted(&hat);
        let d = precondition_dense(&raw, &settings, LambdaMode::Auto).map_err(|e| e.to_string())?;
        dense = dense
            .max((&c.h - &d.h).amax())
            .max((&c.rhs - &d.rhs).amax() / d.rhs.amax().max(1.0))
            .max((&c.q - &d.q).amax() / d.q.amax().max(1.0))
            .max((hat.lambda - d.spectral.lambda).abs() / d.spectral.lambda);
    }
    ensure(
        chol <= CHOL_TOL && lam <= CHOL_TOL && dense <= DENSE_TOL,
        format!("R factors {chol:.1e} over 1000 pairs; L^-T P L^-1 - I {lam:.1e}; blockwise vs dense {dense:.1e}"),
    )
}

fn recover_matrix(hat: &Hatted<TOY_NX, TOY_NU>) -> DMatrix<f64> {
    let n = hat.nodes();
    let len = Primal::<TOY_NX, TOY_NU>::flat_len(n);
    let mut li = DMatrix::zeros(len, len);
    for j in 0..len {
        let mut e = vec![0.0; len];
        e[j] = 1.0;
        let z = Primal::<TOY_NX, TOY_NU>::from_flat(&e, n);
        li.set_column(j, &DVector::from_vec(hat.chol.recover(&z).to_flat()));
    }
    li
}

fn spectral() -> Outcome {
    let s = SpectralSettings { eps_abs: 0.0, eps_rel: 1e-13, eps_buff: 0.05, j_max: 200_000, seed: 3 };
    let mut r = rng(61);
    let mut worst: f64 = 0.0;
    let mut bracket = true;
    for (rows, cols) in [(5, 8), (20, 30), (50, 80), (100, 150), (200, 300)] {
        let h = gaussian_matrix(&mut r, rows, cols);
        let sv = h.singular_values();
        let (smax, smin) = (sv.max().powi(2), sv.min().powi(2));
        let fwd = |z: &[f64]| (&h * DVector::from_column_slice(z)).as_slice().to_vec();
        let adj = |w: &[f64]| h.tr_mul(&DVector::from_column_slice(w)).as_slice().to_vec();
        let p = power_iteration(fwd, adj, random_start(cols, s.seed), &s);
        let q = shifted_power_iteration(fwd, adj, random_start(rows, s.seed + 1), p.value, &s);
        worst = worst.max((p.raw - smax).abs() / smax).max((q.raw - smin).abs() / smin);
        bracket &= p.value >= smax && q.value <= smin;
    }
    ensure(worst <= SPECTRAL_TOL && bracket, format!("max relative error {worst:.1e} up to 200x300, buffered bounds bracket: {bracket}"))
}

fn jacobian_check() -> Outcome {
    let (p, cfg) = lunar();
    let vehicle = Vehicle::new(p.params.clone());
    let guess = initial_guess(&p, cfg.nodes, cfg.s_guess).map_err(|e| e.to_string())?;
    let mut r = rng(31);
    let samples = 150;
    let mut worst: f64 = 0.0;
    let g = |x: &StateVec, u: &ControlVec, s: f64| dilated_eom(&vehicle, x, u, s).unwrap();
    let mut ratio = |a: f64, fd: f64| worst = worst.max((a - fd).abs() / (JAC_REL * fd.abs()).max(JAC_ABS));
    for i in 0..samples {
        let (x, u) = sample_point(&p, &guess.x[i % guess.nodes()], &mut r);
        let s = r.random_range(50.0..200.0);
        let (a, b, f) = jacobians(&vehicle, &x, &u, s).map_err(|e| e.to_string())?;
        for j in 0..x.len() {
            let h = 1e-6 * x[j].abs().max(1.0);
            let (mut xp, mut xm) = (x, x);
            xp[j] += h;
            xm[j] -= h;
            let fd = (g(&xp, &u, s) - g(&xm, &u, s)) / (2.0 * h);
            (0..x.len()).for_each(|i| ratio(a[(i, j)], fd[i]));
        }
        for j in 0..u.len() {
            let h = 1e-6 * u[j].abs().max(1.0);
            let (mut up, mut um) = (u, u);
            up[j] += h;
            um[j] -= h;
            let fd = (g(&x, &up, s) - g(&x, &um, s)) / (2.0 * h);
            (0..x.len()).for_each(|i| ratio(b[(i, j)], fd[i]));
        }
        let h = 1e-6 * s;
        let fd = (g(&x, &u, s + h) - g(&x, &u, s - h)) / (2.0 * h);
        (0..x.len()).for_each(|i| ratio(f[i], fd[i]));
    }
    ensure(worst <= 1.0, format!("{samples} samples, worst error / tolerance {worst:.3}"))
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn projections() -> Outcome {
    let mut r = rng(41);
    let samples = 10_000;
    let (mut idem, mut expand): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let n = r.random_range(2..7);
        let lo = uniform(&mut r, n, -1.0, 0.0);
        let hi: Vec<f64> = lo.iter().map(|l| l + r.random_range(0.0..2.0)).collect();
        let k = r.random_range(1..n);
        let cols: Vec<Vec<f64>> = (0..k).map(|_| uniform(&mut r, n, -1.0, 1.0)).collect();
        let origin = uniform(&mut r, n, -2.0, 2.0);
        let u = DMatrix::from_fn(n, n, |i, j| if j < k { cols[j][i] } else { 0.0 }).svd(true, false).u.unwrap();
        let eqs: Vec<Vec<f64>> = (k..n).map(|j| u.column(j).iter().copied().collect()).collect();
        let rhs = eqs.iter().map(|e| e.iter().zip(&origin).map(|(a, b)| a * b).sum()).collect();
        let sets = [
            Set::boxed(lo, hi).unwrap(),
            Set::ball(uniform(&mut r, n, -1.0, 1.0), r.random_range(0.1..2.0)).unwrap(),
            Set::halfspace(uniform(&mut r, n, -1.0, 1.0), r.random_range(-1.0..1.0)).unwrap(),
            Set::two_halfspaces(uniform(&mut r, n, -1.0, 1.0), r.random_range(-1.0..1.0), uniform(&mut r, n, -1.0, 1.0), r.random_range(-1.0..1.0))
                .unwrap(),
            Set::Singleton { value: uniform(&mut r, n, -1.0, 1.0) },
            Set::Affine(AffineSubspace::new(origin, &cols, eqs, rhs).unwrap()),
        ];
        for set in &sets {
            let a = uniform(&mut r, n, -5.0, 5.0);
            let b = uniform(&mut r, n, -5.0, 5.0);
            let (mut pa, mut pb) = (a.clone(), b.clone());
            set.project(&mut pa);
            set.project(&mut pb);
            let mut ppa = pa.clone();
            set.project(&mut ppa);
            idem = idem.max(max_abs_diff(&ppa, &pa) / (1.0 + norm(&pa)));
            let d: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
            let e: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            expand = expand.max(norm(&d) - norm(&e));
        }
    }
    let mut r = rng(43);
    let mut oracle: f64 = 0.0;
    for i in 0..samples {
        let n = r.random_range(2..8);
        let n1 = uniform(&mut r, n, -1.0, 1.0);
        let n2: Vec<f64> = match i % 4 {
            0 => n1.iter().map(|v| v + r.random_range(-1e-3..1e-3)).collect(),
            1 => n1.iter().map(|v| -v + r.random_range(-1e-2..1e-2)).collect(),
            _ => uniform(&mut r, n, -1.0, 1.0),
        };
        let (o1, o2) = if i % 4 == 1 { (1.0, 1.0) } else { (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)) };
        let z = uniform(&mut r, n, -5.0, 5.0);
        let mut got = z.clone();
        Set::two_halfspaces(n1.clone(), o1, n2.clone(), o2).unwrap().project(&mut got);
        oracle = oracle.max(max_abs_diff(&got, &two_halfspace_oracle(&z, &n1, o1, &n2, o2)) / (1.0 + norm(&z)));
    }
    ensure(
        idem <= PROJ_TOL && expand <= PROJ_TOL && oracle <= ORACLE_TOL,
        format!("{samples} samples x 6 variants: idempotence {idem:.1e}, expansion {expand:.1e}; two-halfspace vs enumeration {oracle:.1e}"),
    )
}

const FORBIDDEN: [&str; 11] =
    [".cholesky(", ".lu(", ".full_piv_lu(", ".qr(", ".svd(", ".try_inverse(", ".solve(", "eigen", "singular_values", "DMatrix", "DVector"];
const OFF_PATH: [&str; 3] = ["dense.rs", "generic.rs", "verify.rs"];

fn scan(dir: &Path, hits: &mut Vec<String>, files: &mut usize) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            scan(&p, hits, files);
            continue;
        }
        let name = p.file_name().unwrap().to_str().unwrap();
        if !name.ends_with(".rs") || OFF_PATH.contains(&name) {
            continue;
        }
        *files += 1;
        for (i, line) in std::fs::read_to_string(&p).unwrap().lines().enumerate() {
            if line.trim_start().starts_with("#[cfg(test)]") {
                break;
            }
            let code = line.split("//").next().unwrap();
            if FORBIDDEN.iter().any(|f| code.contains(f)) {
                hits.push(format!("{name}:{}", i + 1));
            }
        }
    }
}

fn no_factorization() -> Outcome {
    let mut hits = Vec::new();
    let mut files = 0;
    scan(&Path::new(env!("CARGO_MANIFEST_DIR")).join("src"), &mut hits, &mut files);
    let (p, cfg) = lunar();
    audit::reset();
    let (_, r) = solve(&p, &cfg).map_err(|e| e.to_string())?;
    let (rows, cols) = audit::max_block();
    ensure(
        hits.is_empty() && r.converged && rows > 0 && rows <= audit::MAX_BLOCK && cols <= audit::MAX_BLOCK,
        format!("{files} solve-path files, {} forbidden calls {hits:?}; largest block {rows}x{cols}", hits.len()),
    )
}

fn feasibility() -> Outcome {
    let (p, cfg) = lunar();
    let mut worst: f64 = 0.0;
    let mut iterates = 0usize;
    let mut obs = |_: usize, hat: &Hatted<15, 6>, _: usize, z: &Primal<15, 6>, _: &Dual<15>| {
        worst = worst.max(hat.set_violation(z));
        iterates += 1;
    };
    let (_, r) = solve_observed(&p, &cfg, None, Some(&mut obs)).map_err(|e| e.to_string())?;
    ensure(
        r.converged && iterates > 0 && worst <= SET_TOL,
        format!("{iterates} PIPG iterates over {} SCP iterations, max set violation {worst:.1e}", r.iterations.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("end-to-end convergence", end_to_end),
        ("node sweep", node_sweep),
        ("STC enforcement", stc),
        ("oracle equivalence", oracle_equivalence),
        ("discretization exactness", discretization),
        ("preconditioning correctness", preconditioning),
        ("spectral estimates", spectral),
        ("Jacobian correctness", jacobian_check),
        ("projection suite", projections),
        ("no factorization, small blocks", no_factorization),
        ("feasibility at every iterate", feasibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match out {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
