use dqseco::verify::{self, VerifyOptions};
use std::path::Path;

use crate::exit;
use crate::output::{config_failure, load, solve_failure};

pub fn run(config: &Path, quick: bool, inject_fault: bool) -> u8 {
    let (problem, cfg) = match load(config, None, None) {
        Ok(v) => v,
        Err(e) => return config_failure(&e),
    };
    let opts = VerifyOptions { quick, inject_fault, seed: cfg.spectral.seed };
    let report = match verify::run(&problem, &cfg, &opts) {
        Ok(r) => r,
        Err(e) => return solve_failure(&e),
    };
    println!("{:<16} {:>6} {:>12} {:>10}  detail", "check", "result", "error", "tolerance");
    for c in &report.checks {
        println!(
            "{:<16} {:>6} {:>12.3e} {:>10.1e}  {}",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.error,
            c.tolerance,
            c.detail
        );
    }
    if report.passed() {
        exit::OK
    } else {
        exit::VERIFY_FAILED
    }
}
