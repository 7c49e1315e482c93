use dqseco::config::{ConfigError, MissionConfig};
use dqseco::dynamics::{idx, ControlVec, StateVec, VehicleState};
use dqseco::seco::{node_metrics, Problem, SecoConfig, SecoError, Trajectory};
use std::io::Write;
use std::path::Path;

use crate::exit;

/// Loads a config and applies command-line overrides.
pub fn load(path: &Path, nodes: Option<usize>, seed: Option<u64>) -> Result<(Problem, SecoConfig), ConfigError> {
    let mut m = MissionConfig::load(path)?;
    if let Some(n) = nodes {
        m.seco.nodes = n;
    }
    if let Some(s) = seed {
        m.seed = s;
    }
    Ok((m.problem()?, m.seco_config()?))
}

pub fn config_failure(e: &ConfigError) -> u8 {
    eprintln!("error: {e}");
    exit::CONFIG
}

pub fn solve_failure(e: &SecoError) -> u8 {
    eprintln!("error: {e}");
    e.exit_code() as u8
}

pub const TRAJECTORY_HEADER: [&str; 25] = [
    "tau", "t[s]", "m[kg]", "rx[m]", "ry[m]", "rz[m]", "qx", "qy", "qz", "qw", "wx[deg/s]", "wy[deg/s]",
    "wz[deg/s]", "vx_body[m/s]", "vy_body[m/s]", "vz_body[m/s]", "thrust[N]", "gimbal[deg]", "azimuth[deg]",
    "torque_x[N*m]", "torque_y[N*m]", "torque_z[N*m]", "trigger", "los[deg]", "tilt[deg]",
];

fn record(p: &Problem, x: &StateVec, u: &ControlVec, tau: f64, s: f64) -> Vec<f64> {
    let m = node_metrics(p, x, tau, s);
    let st = VehicleState::from_vec(x);
    let q = st.dq.real;
    let w = st.dv.omega.map(f64::to_degrees);
    let v = st.dv.v;
    vec![
        tau,
        m.time,
        x[idx::M],
        m.position.x,
        m.position.y,
        m.position.z,
        q.v.x,
        q.v.y,
        q.v.z,
        q.w,
        w.x,
        w.y,
        w.z,
        v.x,
        v.y,
        v.z,
        u[idx::T],
        u[idx::DELTA].to_degrees(),
        u[idx::PHI].to_degrees(),
        u[idx::TAU],
        u[idx::TAU + 1],
        u[idx::TAU + 2],
        m.psi,
        m.los_deg,
        m.tilt_deg,
    ]
}

pub fn write_trajectory(path: &Path, p: &Problem, traj: &Trajectory) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    let n = traj.nodes();
    for k in 0..n {
        let tau = k as f64 / (n - 1) as f64;
        let row = record(p, &traj.x[k], &traj.u[k], tau, traj.s);
        w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)
}
