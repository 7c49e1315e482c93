use dqseco::seco::{path_violation, solve, PathViolation, SecoReport};
use serde::Serialize;
use std::path::Path;

use crate::exit;
use crate::output::{config_failure, load, solve_failure, write_json, write_trajectory};

#[derive(Serialize)]
struct SolveFile<'a> {
    nodes: usize,
    time_of_flight: f64,
    final_mass: f64,
    path_violation: PathViolation,
    /// Summed stage times over all SCP iterations, s.
    t_discretize: f64,
    t_parse: f64,
    t_solve: f64,
    report: &'a SecoReport,
}

pub fn run(config: &Path, nodes: Option<usize>, out: &Path, seed: Option<u64>) -> u8 {
    let (problem, cfg) = match load(config, nodes, seed) {
        Ok(v) => v,
        Err(e) => return config_failure(&e),
    };
    let (traj, report) = match solve(&problem, &cfg) {
        Ok(v) => v,
        Err(e) => return solve_failure(&e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return exit::IO;
    }
    if let Err(e) = write_trajectory(&out.join("trajectory.csv"), &problem, &traj) {
        eprintln!("error: writing trajectory: {e}");
        return exit::IO;
    }
    let (t_discretize, t_parse, t_solve) = report.time_totals();
    let file = SolveFile {
        nodes: traj.nodes(),
        time_of_flight: traj.s,
        final_mass: traj.x[traj.nodes() - 1][0],
        path_violation: path_violation(&problem, &traj),
        t_discretize,
        t_parse,
        t_solve,
        report: &report,
    };
    if let Err(e) = write_json(&out.join("report.json"), &file) {
        eprintln!("error: writing report: {e}");
        return exit::IO;
    }

    println!(
        "{} after {} SCP iterations ({} PIPG iterations) in {:.3} s",
        if report.converged { "converged" } else { "NOT converged" },
        report.iterations.len(),
        report.iterations.iter().map(|r| r.pipg_iterations).sum::<usize>(),
        report.total_time
    );
    println!("  terminal error   {:.3} m, {:.4} m/s", report.pos_err, report.vel_err);
    println!("  time of flight   {:.3} s, final mass {:.2} kg", file.time_of_flight, file.final_mass);
    println!("  stage times      discretize {t_discretize:.4} s, parse {t_parse:.4} s, solve {t_solve:.4} s");
    println!("  wrote            {}", out.display());
    if report.converged {
        exit::OK
    } else {
        exit::NOT_CONVERGED
    }
}
