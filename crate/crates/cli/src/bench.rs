use dqseco::seco::{solve_observed, Problem, SecoConfig, Trajectory};
use serde::Serialize;
use std::path::Path;

use crate::exit;
use crate::output::{config_failure, load};

/// One timed solve.
#[derive(Debug, Clone, Serialize)]
pub struct Run {
    pub nodes: usize,
    pub rep: usize,
    pub status: &'static str,
    pub scp_iterations: usize,
    pub pipg_iterations: usize,
    pub t_discretize: f64,
    pub t_parse: f64,
    pub t_solve: f64,
    pub t_total: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Population statistics. Values are sorted first so the result does not depend on run order.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stats { mean: f64::NAN, std: f64::NAN, min: f64::NAN, max: f64::NAN };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Stats { mean, std: var.sqrt(), min: v[0], max: v[v.len() - 1] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub nodes: usize,
    pub runs: usize,
    pub failures: usize,
    pub t_discretize: Stats,
    pub t_parse: Stats,
    pub t_solve: Stats,
    pub t_total: Stats,
    pub scp_iterations: Stats,
    pub pipg_iterations: Stats,
}

pub fn summarize(nodes: usize, runs: &[Run]) -> Summary {
    let ok: Vec<&Run> = runs.iter().filter(|r| r.nodes == nodes && r.status == "converged").collect();
    let all = runs.iter().filter(|r| r.nodes == nodes).count();
    let col = |f: fn(&Run) -> f64| Stats::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    Summary {
        nodes,
        runs: all,
        failures: all - ok.len(),
        t_discretize: col(|r| r.t_discretize),
        t_parse: col(|r| r.t_parse),
        t_solve: col(|r| r.t_solve),
        t_total: col(|r| r.t_total),
        scp_iterations: col(|r| r.scp_iterations as f64),
        pipg_iterations: col(|r| r.pipg_iterations as f64),
    }
}

fn one(p: &Problem, cfg: &SecoConfig, rep: usize, start: Option<&Trajectory>) -> (Run, Option<Trajectory>) {
    let mut run = Run {
        nodes: cfg.nodes,
        rep,
        status: "error",
        scp_iterations: 0,
        pipg_iterations: 0,
        t_discretize: 0.0,
        t_parse: 0.0,
        t_solve: 0.0,
        t_total: 0.0,
    };
    match solve_observed(p, cfg, start, None) {
        Ok((traj, report)) => {
            let (d, pa, s) = report.time_totals();
            run.status = if report.converged { "converged" } else { "not_converged" };
            run.scp_iterations = report.iterations.len();
            run.pipg_iterations = report.iterations.iter().map(|r| r.pipg_iterations).sum();
            run.t_discretize = d;
            run.t_parse = pa;
            run.t_solve = s;
            run.t_total = report.total_time;
            let keep = report.converged.then_some(traj);
            (run, keep)
        }
        Err(e) => {
            log::warn!("N={} rep {rep}: {e}", cfg.nodes);
            (run, None)
        }
    }
}

pub fn run(config: &Path, reps: usize, sweep: Option<Vec<usize>>, warm: bool, out: &Path) -> u8 {
    if reps == 0 {
        eprintln!("error: --reps must be at least 1");
        return exit::CONFIG;
    }
    let (problem, base) = match load(config, None, None) {
        Ok(v) => v,
        Err(e) => return config_failure(&e),
    };
    let sizes = sweep.unwrap_or_else(|| vec![base.nodes]);
    let mut configs = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let cfg = SecoConfig { nodes: n, ..base.clone() };
        if let Err(e) = cfg.validate() {
            eprintln!("error: {e}");
            return exit::CONFIG;
        }
        configs.push(cfg);
    }

    let mut runs = Vec::new();
    for cfg in &configs {
        let mut previous: Option<Trajectory> = None;
        for rep in 1..=reps {
            let start = if warm { previous.as_ref() } else { None };
            let (r, traj) = one(&problem, cfg, rep, start);
            if traj.is_some() {
                previous = traj;
            }
            runs.push(r);
        }
    }
    let summaries: Vec<Summary> = sizes.iter().map(|&n| summarize(n, &runs)).collect();

    println!("bench: {reps} repetition(s) per size, {} start", if warm { "warm" } else { "cold" });
    println!(
        "{:>5} {:>5} {:>5} {:>22} {:>22} {:>22} {:>22} {:>8} {:>9}",
        "N", "ok", "fail", "discretize [ms]", "parse [ms]", "solve [ms]", "total [ms]", "SCP", "PIPG"
    );
    let ms = |s: &Stats| format!("{:.2} ± {:.2}", 1e3 * s.mean, 1e3 * s.std);
    for s in &summaries {
        println!(
            "{:>5} {:>5} {:>5} {:>22} {:>22} {:>22} {:>22} {:>8.2} {:>9.1}",
            s.nodes,
            s.runs - s.failures,
            s.failures,
            ms(&s.t_discretize),
            ms(&s.t_parse),
            ms(&s.t_solve),
            ms(&s.t_total),
            s.scp_iterations.mean,
            s.pipg_iterations.mean
        );
    }

    if let Err(e) = write_tables(out, &summaries, &runs) {
        eprintln!("error: writing {}: {e}", out.display());
        return exit::IO;
    }
    println!("wrote {} and {}", out.display(), runs_path(out).display());
    if summaries.iter().all(|s| s.failures < s.runs) {
        exit::OK
    } else {
        exit::NOT_CONVERGED
    }
}

/// Per-run table sits next to the summary: `bench.csv` -> `bench_runs.csv`.
pub fn runs_path(out: &Path) -> std::path::PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
    out.with_file_name(format!("{stem}_runs.csv"))
}

fn write_tables(out: &Path, summaries: &[Summary], runs: &[Run]) -> Result<(), csv::Error> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(out)?;
    let mut header = vec!["nodes".to_string(), "runs".into(), "failures".into()];
    for col in ["t_discretize", "t_parse", "t_solve", "t_total", "scp_iterations", "pipg_iterations"] {
        for stat in ["mean", "std", "min", "max"] {
            header.push(format!("{col}_{stat}"));
        }
    }
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![s.nodes.to_string(), s.runs.to_string(), s.failures.to_string()];
        for st in [&s.t_discretize, &s.t_parse, &s.t_solve, &s.t_total, &s.scp_iterations, &s.pipg_iterations] {
            row.extend([st.mean, st.std, st.min, st.max].iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(runs_path(out))?;
    for r in runs {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
