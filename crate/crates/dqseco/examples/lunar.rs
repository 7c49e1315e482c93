//! Solves the lunar landing scenario and prints per-iteration telemetry.

use dqseco::config::MissionConfig;
use dqseco::seco::solve;

fn main() {
    let cfg = MissionConfig::lunar();
    let problem = cfg.problem().expect("valid problem");
    let mut seco = cfg.seco_config().expect("valid settings");
    if let Some(n) = std::env::args().nth(1) {
        seco.nodes = n.parse().expect("node count");
    }
    if let Some(n) = std::env::args().nth(2) {
        seco.max_iterations = n.parse().expect("iteration count");
        seco.early_exit = std::env::var("EXIT").is_ok();
    }
    if let Some(w) = std::env::args().nth(3) {
        let w: Vec<f64> = w.split(',').map(|a| a.parse().expect("weight")).collect();
        seco.weights = dqseco::subproblem::Weights { w_m: w[0], w_tr: w[1], w_tr_s: w[2], w_vse: w[3] };
    }
    if let Ok(j) = std::env::var("JMAX") {
        seco.pipg.tol.j_max = j.parse().expect("j_max");
    }
    if let Ok(j) = std::env::var("EPS") {
        let e: Vec<f64> = j.split(',').map(|a| a.parse().expect("eps")).collect();
        seco.pipg.tol.eps_abs = e[0];
        seco.pipg.tol.eps_rel = e[1];
    }
    let (traj, report) = solve(&problem, &seco).expect("solve");
    for r in &report.iterations {
        println!(
            "it {} los+ {:.3} tilt+ {:.3} pipg {:5} {} s {:8.3} mN {:8.2} gap {:.2e} tr {:.2e} res {:.1e} pos {:8.3} vel {:7.4} lam {:.3e} smax {:.3e} t {:.3}/{:.3}/{:.3}",
            r.iteration, r.path.los_deg, r.path.tilt_deg, r.pipg_iterations, r.pipg_converged, r.time_of_flight, r.final_mass, r.virtual_gap,
            r.trust_region, r.dynamics_residual, r.pos_err, r.vel_err, r.lambda, r.sigma_max,
            r.t_discretize, r.t_parse, r.t_solve
        );
    }
    println!("converged {} total {:.3}s", report.converged, report.total_time);
    for m in traj.metrics(&problem) {
        println!(
            "t {:7.2} range {:8.2} psi {:2} los {:6.3} tilt {:6.3} rate {:6.3} speed {:6.2} alt {:8.2}",
            m.time, m.range, m.psi, m.los_deg, m.tilt_deg, m.rate_deg, m.speed, m.altitude
        );
    }
}
