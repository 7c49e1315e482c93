//! JSON mission configuration.
//!
//! Angles are degrees and angular rates deg/s; everything else is SI.
//! Quaternions are scalar-last and renormalized on load.

use crate::dynamics::VehicleParams;
use crate::pipg::{PipgSettings, StopTolerances};
use crate::precondition::{LambdaMode, SpectralSettings};
use crate::quat::Quat;
use crate::seco::{PathTolerances, Problem, SecoConfig};
use crate::subproblem::{BoundaryConditions, ConstraintParams, Weights};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field(f: &str, m: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: f.to_string(), message: m.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    /// Gravity magnitude, m/s².
    pub g: f64,
    /// Main-engine fuel consumption, s/m.
    pub alpha_me: f64,
    /// Reaction-control fuel consumption, s/m.
    pub alpha_rcs: f64,
    /// Gimbal-to-center-of-mass distance, m.
    pub l_cm: f64,
    /// Mass-normalized inertia, m², row-major.
    pub inertia: [[f64; 3]; 3],
    pub m_i: f64,
    pub m_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub thrust_min: f64,
    pub thrust_max: f64,
    /// N/s.
    pub thrust_rate_max: f64,
    pub gimbal_max_deg: f64,
    pub gimbal_rate_max_deg: f64,
    pub azimuth_rate_max_deg: f64,
    /// N·m, per axis.
    pub torque_max: f64,
    pub tilt_max_deg: f64,
    pub tilt_stc_deg: f64,
    pub rate_max_deg: f64,
    pub rate_stc_deg: f64,
    pub speed_max: f64,
    pub speed_stc: f64,
    pub altitude_min: f64,
    pub trigger_min: f64,
    pub trigger_max: f64,
    pub los_stc_deg: f64,
    /// Sensor boresight in the body frame; normalized on load.
    pub sensor_body: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub r_i: [f64; 3],
    pub v_i: [f64; 3],
    /// `[x, y, z, w]`, any nonzero scale.
    pub q_i: [f64; 4],
    #[serde(default)]
    pub omega_i_deg: [f64; 3],
    pub r_f: [f64; 3],
    pub vz_f: f64,
    pub q_f: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecoSection {
    pub nodes: usize,
    pub w_m: f64,
    pub w_tr: f64,
    pub w_tr_s: f64,
    pub w_vse: f64,
    pub max_iterations: usize,
    pub pos_tol: f64,
    pub vel_tol: f64,
    pub gap_tol: f64,
    /// Path-constraint excess allowed at convergence: angles (deg), rate (deg/s), speed (m/s), altitude (m).
    pub angle_tol_deg: f64,
    pub rate_tol_deg: f64,
    pub speed_tol: f64,
    pub altitude_tol: f64,
    pub early_exit: bool,
    pub substeps: usize,
    /// Time-of-flight guess, s.
    pub s_guess: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub abort_on_solver_failure: bool,
}

impl Default for SecoSection {
    fn default() -> Self {
        let d = SecoConfig::default();
        Self {
            nodes: d.nodes,
            w_m: d.weights.w_m,
            w_tr: d.weights.w_tr,
            w_tr_s: d.weights.w_tr_s,
            w_vse: d.weights.w_vse,
            max_iterations: d.max_iterations,
            pos_tol: d.pos_tol,
            vel_tol: d.vel_tol,
            gap_tol: d.gap_tol,
            angle_tol_deg: d.path_tol.angle_deg,
            rate_tol_deg: d.path_tol.rate_deg,
            speed_tol: d.path_tol.speed,
            altitude_tol: d.path_tol.altitude,
            early_exit: d.early_exit,
            substeps: d.substeps,
            s_guess: d.s_guess,
            s_min: d.s_bounds.0,
            s_max: d.s_bounds.1,
            abort_on_solver_failure: d.abort_on_solver_failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rho: f64,
    pub omega: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub j_check: usize,
    pub j_max: usize,
    /// Fixed cost scale; `null` estimates it.
    pub lambda: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = PipgSettings::default();
        Self {
            rho: p.rho,
            omega: p.omega,
            eps_abs: p.tol.eps_abs,
            eps_rel: p.tol.eps_rel,
            j_check: p.tol.j_check,
            j_max: p.tol.j_max,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSection {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_buff: f64,
    pub j_max: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        let s = SpectralSettings::default();
        Self { eps_abs: s.eps_abs, eps_rel: s.eps_rel, eps_buff: s.eps_buff, j_max: s.j_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub schema_version: u32,
    pub vehicle: VehicleSection,
    pub constraints: ConstraintSection,
    pub boundary: BoundarySection,
    #[serde(default)]
    pub seco: SecoSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub seed: u64,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

fn unit_quat(name: &str, a: [f64; 4]) -> Result<Quat, ConfigError> {
    Quat::new(a[0], a[1], a[2], a[3]).normalize().map_err(|e| field(name, e.to_string()))
}

impl MissionConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let v = &self.vehicle;
        let params = VehicleParams::new(v.g, v.alpha_me, v.alpha_rcs, v.l_cm, Matrix3::from_fn(|i, j| v.inertia[i][j]), v.m_i, v.m_f)
            .map_err(|e| field("vehicle", e.to_string()))?;
        let c = &self.constraints;
        if !(c.thrust_min <= c.thrust_max) {
            return Err(field(
                "constraints.thrust_min",
                format!("{} exceeds constraints.thrust_max {}", c.thrust_min, c.thrust_max),
            ));
        }
        if !(c.trigger_min < c.trigger_max) {
            return Err(field("constraints.trigger_min", "must be below constraints.trigger_max"));
        }
        let pairs = [
            ("constraints.tilt_stc_deg", c.tilt_stc_deg, c.tilt_max_deg),
            ("constraints.rate_stc_deg", c.rate_stc_deg, c.rate_max_deg),
            ("constraints.speed_stc", c.speed_stc, c.speed_max),
        ];
        for (n, stc, max) in pairs {
            if !(stc < max) {
                return Err(field(n, format!("{stc} must be below the global bound {max}")));
            }
        }
        let p_b = v3(c.sensor_body);
        if p_b.norm() == 0.0 {
            return Err(field("constraints.sensor_body", "must be nonzero"));
        }
        let r = f64::to_radians;
        let constraints = ConstraintParams {
            thrust_min: c.thrust_min,
            thrust_max: c.thrust_max,
            thrust_rate_max: c.thrust_rate_max,
            gimbal_max: r(c.gimbal_max_deg),
            gimbal_rate_max: r(c.gimbal_rate_max_deg),
            azimuth_rate_max: r(c.azimuth_rate_max_deg),
            torque_max: c.torque_max,
            tilt_max: r(c.tilt_max_deg),
            tilt_stc: r(c.tilt_stc_deg),
            rate_max: r(c.rate_max_deg),
            rate_stc: r(c.rate_stc_deg),
            speed_max: c.speed_max,
            speed_stc: c.speed_stc,
            altitude_min: c.altitude_min,
            trigger_min: c.trigger_min,
            trigger_max: c.trigger_max,
            los_stc: r(c.los_stc_deg),
            sensor_body: p_b.normalize(),
        };
        constraints.validate().map_err(|e| field("constraints", e.to_string()))?;
        let b = &self.boundary;
        let bc = BoundaryConditions {
            r_i: v3(b.r_i),
            v_i: v3(b.v_i),
            q_i: unit_quat("boundary.q_i", b.q_i)?,
            omega_i: v3(b.omega_i_deg).map(r),
            r_f: v3(b.r_f),
            vz_f: b.vz_f,
            q_f: unit_quat("boundary.q_f", b.q_f)?,
        };
        let p = Problem { params, constraints, bc };
        p.validate().map_err(|e| field("boundary", e.to_string()))?;
        Ok(p)
    }

    pub fn seco_config(&self) -> Result<SecoConfig, ConfigError> {
        let s = &self.seco;
        let o = &self.solver;
        let sp = &self.spectral;
        let cfg = SecoConfig {
            nodes: s.nodes,
            weights: Weights { w_m: s.w_m, w_tr: s.w_tr, w_tr_s: s.w_tr_s, w_vse: s.w_vse },
            max_iterations: s.max_iterations,
            pos_tol: s.pos_tol,
            vel_tol: s.vel_tol,
            gap_tol: s.gap_tol,
            path_tol: PathTolerances {
                angle_deg: s.angle_tol_deg,
                rate_deg: s.rate_tol_deg,
                speed: s.speed_tol,
                altitude: s.altitude_tol,
            },
            early_exit: s.early_exit,
            substeps: s.substeps,
            s_guess: s.s_guess,
            s_bounds: (s.s_min, s.s_max),
            pipg: PipgSettings {
                rho: o.rho,
                omega: o.omega,
                tol: StopTolerances { eps_abs: o.eps_abs, eps_rel: o.eps_rel, j_check: o.j_check, j_max: o.j_max },
            },
            spectral: SpectralSettings {
                eps_abs: sp.eps_abs,
                eps_rel: sp.eps_rel,
                eps_buff: sp.eps_buff,
                j_max: sp.j_max,
                seed: self.seed,
            },
            lambda: o.lambda.map_or(LambdaMode::Auto, LambdaMode::Fixed),
            abort_on_solver_failure: s.abort_on_solver_failure,
        };
        cfg.validate().map_err(|e| field("seco", e.to_string()))?;
        Ok(cfg)
    }

    /// The lunar landing scenario used throughout the tests.
    pub fn lunar() -> Self {
        let half3 = 3f64.sqrt() / 2.0;
        Self {
            schema_version: SCHEMA_VERSION,
            vehicle: VehicleSection {
                g: 1.625,
                alpha_me: 1.0 / (300.0 * 9.81),
                alpha_rcs: 1.0 / (200.0 * 9.81),
                l_cm: 1.0,
                inertia: [[4.2, 0.0, 0.0], [0.0, 4.2, 0.0], [0.0, 0.0, 0.6]],
                m_i: 1500.0,
                m_f: 750.0,
            },
            constraints: ConstraintSection {
                thrust_min: 600.0,
                thrust_max: 3000.0,
                thrust_rate_max: 1800.0,
                gimbal_max_deg: 5.0,
                gimbal_rate_max_deg: 5.0,
                azimuth_rate_max_deg: 5.0,
                torque_max: 50.0,
                tilt_max_deg: 90.0,
                tilt_stc_deg: 20.0,
                rate_max_deg: 5.0,
                rate_stc_deg: 1.0,
                speed_max: 90.0,
                speed_stc: 30.0,
                altitude_min: 100.0,
                trigger_min: 500.0,
                trigger_max: 1250.0,
                los_stc_deg: 2.0,
                sensor_body: [0.5, 0.0, -half3],
            },
            boundary: BoundarySection {
                r_i: [3000.0, 600.0, 3000.0],
                v_i: [-60.0, 30.0, -30.0],
                q_i: [-0.15, 0.3, -1.0, 1.0],
                omega_i_deg: [0.0; 3],
                r_f: [0.0, 0.0, 100.0],
                vz_f: -2.0,
                q_f: [0.0, 0.0, -1.25, 1.0],
            },
            seco: SecoSection::default(),
            solver: SolverSection::default(),
            spectral: SpectralSection::default(),
            seed: 0,
        }
    }
}
