//! Sequential conic optimization loop.

use crate::dynamics::{
    discretize, idx, renormalize, single_shot, ControlVec, DynamicsError, StateVec, Vehicle, VehicleParams,
    VehicleState, NU, NX,
};
use crate::pipg::{pipg_custom, PipgError, PipgSettings, WarmStart};
use crate::precondition::{precondition, Hatted, LambdaMode, PreconditionError, SpectralSettings};
use crate::quat::{rotate_to_body, rotate_to_inertial, DualQuat};
use crate::subproblem::{
    assemble, terminal_set, trigger, AssemblyContext, BoundaryConditions, ConstraintParams, Dual, Primal,
    Reference, Subproblem, SubproblemError, Weights,
};
use nalgebra::Vector3;
use std::f64::consts::TAU;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SecoError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error(transparent)]
    Precondition(#[from] PreconditionError),
    #[error(transparent)]
    Solver(#[from] PipgError),
    #[error("PIPG did not converge in SCP iteration {iteration}")]
    SolverAbort { iteration: usize },
}

impl SecoError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            SecoError::InvalidConfig(_) => 2,
            SecoError::Subproblem(SubproblemError::InvalidConfig(_)) => 2,
            SecoError::Precondition(PreconditionError::InvalidConfig(_)) => 2,
            SecoError::Solver(PipgError::InvalidInput(_)) => 2,
            SecoError::Subproblem(_) => 3,
            _ => 4,
        }
    }
}

/// Affine per-component map `x ↦ (x − lo) / (hi − lo)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub x_offset: [f64; NX],
    pub x_scale: [f64; NX],
    pub u_offset: [f64; NU],
    pub u_scale: [f64; NU],
    pub s_offset: f64,
    pub s_scale: f64,
}

fn widths<const K: usize>(r: &[(f64, f64); K], what: &str) -> Result<([f64; K], [f64; K]), SecoError> {
    let mut lo = [0.0; K];
    let mut w = [0.0; K];
    for (i, &(a, b)) in r.iter().enumerate() {
        if !(b - a > 0.0 && (b - a).is_finite()) {
            return Err(SecoError::InvalidConfig(format!("{what} range {i} [{a}, {b}] has no positive width")));
        }
        lo[i] = a;
        w[i] = b - a;
    }
    Ok((lo, w))
}

impl Scaling {
    pub fn from_ranges(x: &[(f64, f64); NX], u: &[(f64, f64); NU], s: (f64, f64)) -> Result<Self, SecoError> {
        let (x_offset, x_scale) = widths(x, "state")?;
        let (u_offset, u_scale) = widths(u, "control")?;
        let (s_offset, s_scale) = widths(&[s], "dilation")?;
        Ok(Self { x_offset, x_scale, u_offset, u_scale, s_offset: s_offset[0], s_scale: s_scale[0] })
    }

    /// Ranges from boundary conditions and bounds.
    pub fn for_problem(p: &Problem, s_guess: f64) -> Result<Self, SecoError> {
        let c = &p.constraints;
        let dual = p.bc.r_i.norm().max(p.bc.r_f.norm()) / 2.0;
        let mut x = [(0.0, 1.0); NX];
        x[idx::M] = (p.params.m_f, p.params.m_i);
        for r in &mut x[idx::D..idx::W] {
            *r = (0.0, dual);
        }
        for r in &mut x[idx::W..idx::V] {
            *r = (0.0, c.rate_max);
        }
        for r in &mut x[idx::V..NX] {
            *r = (0.0, c.speed_max);
        }
        let u = [
            (0.0, c.thrust_max),
            (0.0, c.gimbal_max),
            (0.0, TAU),
            (0.0, c.torque_max),
            (0.0, c.torque_max),
            (0.0, c.torque_max),
        ];
        Self::from_ranges(&x, &u, (0.0, s_guess))
    }

    pub fn prescale_state(&self, x: &StateVec) -> StateVec {
        StateVec::from_fn(|i, _| (x[i] - self.x_offset[i]) / self.x_scale[i])
    }
    pub fn unscale_state(&self, x: &StateVec) -> StateVec {
        StateVec::from_fn(|i, _| x[i] * self.x_scale[i] + self.x_offset[i])
    }
    pub fn prescale_control(&self, u: &ControlVec) -> ControlVec {
        ControlVec::from_fn(|i, _| (u[i] - self.u_offset[i]) / self.u_scale[i])
    }
    pub fn unscale_control(&self, u: &ControlVec) -> ControlVec {
        ControlVec::from_fn(|i, _| u[i] * self.u_scale[i] + self.u_offset[i])
    }

    pub fn prescale(&self, t: &Trajectory) -> Trajectory {
        Trajectory {
            x: t.x.iter().map(|x| self.prescale_state(x)).collect(),
            xi: t.xi.iter().map(|x| self.prescale_state(x)).collect(),
            u: t.u.iter().map(|u| self.prescale_control(u)).collect(),
            s: (t.s - self.s_offset) / self.s_scale,
        }
    }

    pub fn unscale(&self, t: &Trajectory) -> Trajectory {
        Trajectory {
            x: t.x.iter().map(|x| self.unscale_state(x)).collect(),
            xi: t.xi.iter().map(|x| self.unscale_state(x)).collect(),
            u: t.u.iter().map(|u| self.unscale_control(u)).collect(),
            s: t.s * self.s_scale + self.s_offset,
        }
    }
}

/// Vehicle, path constraints and boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub params: VehicleParams,
    pub constraints: ConstraintParams,
    pub bc: BoundaryConditions,
}

impl Problem {
    pub fn validate(&self) -> Result<(), SecoError> {
        self.constraints.validate()?;
        let b = &self.bc;
        for (n, q) in [("q_i", &b.q_i), ("q_f", &b.q_f)] {
            if !q.is_unit(1e-9) {
                return Err(SecoError::InvalidConfig(format!("{n} must be a unit quaternion")));
            }
        }
        if b.r_f.norm() == 0.0 && b.r_i.norm() == 0.0 {
            return Err(SecoError::InvalidConfig("initial and final positions are both at the origin".into()));
        }
        Ok(())
    }

    pub fn x_init(&self) -> Result<StateVec, SecoError> {
        let b = &self.bc;
        VehicleState::from_inertial(self.params.m_i, &b.q_i, &b.r_i, &b.omega_i, &b.v_i)
            .map(|s| s.to_vec())
            .map_err(|e| SecoError::InvalidConfig(format!("initial state: {e}")))
    }

    pub fn dq_final(&self) -> Result<DualQuat, SecoError> {
        DualQuat::from_pose(&self.bc.q_f, &self.bc.r_f).map_err(|e| SecoError::InvalidConfig(format!("final pose: {e}")))
    }
}

/// Allowed excess of each nonconvex path constraint, evaluated on node states.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PathTolerances {
    /// Line-of-sight and tilt, degrees.
    pub angle_deg: f64,
    /// Body rate, deg/s.
    pub rate_deg: f64,
    /// Speed, m/s.
    pub speed: f64,
    /// Altitude floor, m.
    pub altitude: f64,
}

impl Default for PathTolerances {
    fn default() -> Self {
        Self { angle_deg: 0.01, rate_deg: 0.01, speed: 0.01, altitude: 0.1 }
    }
}

/// Largest excess of each path constraint over the interior nodes (zero when satisfied).
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct PathViolation {
    pub los_deg: f64,
    pub tilt_deg: f64,
    pub rate_deg: f64,
    pub speed: f64,
    pub altitude: f64,
}

impl PathViolation {
    pub fn within(&self, t: &PathTolerances) -> bool {
        self.los_deg <= t.angle_deg
            && self.tilt_deg <= t.angle_deg
            && self.rate_deg <= t.rate_deg
            && self.speed <= t.speed
            && self.altitude <= t.altitude
    }
}

/// Checks the original (unconvexified) path constraints on `traj.x`.
///
/// Inside the trigger window the tighter bounds and the line-of-sight cone
/// apply; outside it the global bounds and the altitude floor.
pub fn path_violation(p: &Problem, traj: &Trajectory) -> PathViolation {
    let c = &p.constraints;
    let n = traj.nodes();
    let mut v = PathViolation::default();
    for x in traj.x.iter().take(n.saturating_sub(1)).skip(1) {
        let m = node_metrics(p, x, 0.0, traj.s);
        let (tilt, rate, speed) = if m.psi >= 0.0 {
            v.los_deg = v.los_deg.max(m.los_deg - c.los_stc.to_degrees());
            (c.tilt_stc, c.rate_stc, c.speed_stc)
        } else {
            v.altitude = v.altitude.max(c.altitude_min - m.altitude);
            (c.tilt_max, c.rate_max, c.speed_max)
        };
        v.tilt_deg = v.tilt_deg.max(m.tilt_deg - tilt.to_degrees());
        v.rate_deg = v.rate_deg.max(m.rate_deg - rate.to_degrees());
        v.speed = v.speed.max(m.speed - speed);
    }
    v
}

/// SCP settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SecoConfig {
    pub nodes: usize,
    pub weights: Weights,
    pub max_iterations: usize,
    /// Open-loop terminal position tolerance, m.
    pub pos_tol: f64,
    /// Open-loop terminal velocity tolerance, m/s.
    pub vel_tol: f64,
    /// Largest `|x − ξ|` allowed at convergence, scaled units.
    pub gap_tol: f64,
    /// Allowed excess of the nonconvex path constraints at convergence.
    pub path_tol: PathTolerances,
    /// Stop as soon as the tolerances hold; otherwise run all iterations.
    pub early_exit: bool,
    pub substeps: usize,
    pub s_guess: f64,
    pub s_bounds: (f64, f64),
    pub pipg: PipgSettings,
    pub spectral: SpectralSettings,
    pub lambda: LambdaMode,
    /// Fail the solve when PIPG hits its iteration cap.
    pub abort_on_solver_failure: bool,
}

impl Default for SecoConfig {
    fn default() -> Self {
        Self {
            nodes: 15,
            weights: Weights { w_m: 1.0, w_tr: 10.0, w_tr_s: 10.0, w_vse: 1e4 },
            max_iterations: 12,
            pos_tol: 10.0,
            vel_tol: 0.25,
            gap_tol: 1e-4,
            path_tol: PathTolerances::default(),
            early_exit: true,
            substeps: 20,
            s_guess: 120.0,
            s_bounds: (10.0, 300.0),
            pipg: PipgSettings::default(),
            spectral: SpectralSettings::default(),
            lambda: LambdaMode::Auto,
            abort_on_solver_failure: false,
        }
    }
}

impl SecoConfig {
    pub fn validate(&self) -> Result<(), SecoError> {
        let bad = |m: String| Err(SecoError::InvalidConfig(m));
        if self.nodes < 3 {
            return bad(format!("nodes must be at least 3, got {}", self.nodes));
        }
        if self.max_iterations == 0 || self.substeps == 0 {
            return bad("max_iterations and substeps must be positive".into());
        }
        let pt = &self.path_tol;
        let path_ok = [pt.angle_deg, pt.rate_deg, pt.speed, pt.altitude].iter().all(|v| *v >= 0.0);
        if !(self.pos_tol > 0.0 && self.vel_tol > 0.0 && self.gap_tol > 0.0 && path_ok) {
            return bad("tolerances must be positive".into());
        }
        let (lo, hi) = self.s_bounds;
        if !(lo > 0.0 && lo < hi && self.s_guess >= lo && self.s_guess <= hi) {
            return bad(format!("s_guess {} must lie in the time-of-flight bounds [{lo}, {hi}]", self.s_guess));
        }
        self.weights.validate()?;
        self.pipg.validate()?;
        let s = &self.spectral;
        if !(s.eps_abs >= 0.0 && s.eps_rel >= 0.0 && s.eps_buff >= 0.0 && s.eps_buff < 1.0) || s.j_max == 0 {
            return bad("spectral settings out of range".into());
        }
        Ok(())
    }
}

/// Node states, virtual states, controls and time of flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<StateVec>,
    pub xi: Vec<StateVec>,
    pub u: Vec<ControlVec>,
    pub s: f64,
}

impl Trajectory {
    pub fn nodes(&self) -> usize {
        self.x.len()
    }

    pub fn reference(&self) -> Reference {
        Reference { x: self.x.clone(), u: self.u.clone(), s: self.s }
    }
}

/// Straight-line and screw-interpolated guess.
pub fn initial_guess(p: &Problem, nodes: usize, s_guess: f64) -> Result<Trajectory, SecoError> {
    if nodes < 2 {
        return Err(SecoError::InvalidConfig("need at least two nodes".into()));
    }
    let x1 = p.x_init()?;
    let dq_i = DualQuat::from_slice(&x1.as_slice()[idx::Q..idx::W]);
    let dq_f = p.dq_final()?;
    let v_f = Vector3::new(0.0, 0.0, p.bc.vz_f);
    let c = &p.constraints;
    let mut x = Vec::with_capacity(nodes);
    let mut u = Vec::with_capacity(nodes);
    for k in 0..nodes {
        if k == 0 {
            x.push(x1);
        } else {
            let t = k as f64 / (nodes - 1) as f64;
            let dq = DualQuat::sclerp(&dq_i, &dq_f, t);
            let m = p.params.m_i + t * (p.params.m_f - p.params.m_i);
            let v_i = p.bc.v_i * (1.0 - t) + v_f * t;
            let omega = p.bc.omega_i * (1.0 - t);
            let state = VehicleState {
                m,
                dq,
                dv: crate::quat::DualVelocity::new(omega, rotate_to_body(&dq.real, &v_i)),
            };
            x.push(state.to_vec());
        }
        let mut uk = ControlVec::zeros();
        uk[idx::T] = (x[k][idx::M] * p.params.g).clamp(c.thrust_min, c.thrust_max);
        u.push(uk);
    }
    Ok(Trajectory { xi: x.clone(), x, u, s: s_guess })
}

/// Open-loop terminal position and velocity errors.
pub fn convergence_check(
    p: &Problem,
    traj: &Trajectory,
    substeps: usize,
) -> Result<(f64, f64), SecoError> {
    let vehicle = Vehicle::new(p.params.clone());
    let xs = single_shot(&vehicle, &traj.x[0], &traj.u, traj.s, substeps)?;
    let last = VehicleState::from_vec(xs.last().expect("at least two nodes"));
    let pos = (last.position() - p.bc.r_f).norm();
    let vel = (last.velocity_inertial() - Vector3::new(0.0, 0.0, p.bc.vz_f)).norm();
    Ok((pos, vel))
}

/// Per-node quantities for reporting and constraint checks. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMetrics {
    pub tau: f64,
    pub time: f64,
    pub position: Vector3<f64>,
    pub range: f64,
    pub psi: f64,
    pub los_deg: f64,
    pub tilt_deg: f64,
    /// Largest body-rate component, deg/s.
    pub rate_deg: f64,
    pub speed: f64,
    pub altitude: f64,
}

pub fn node_metrics(p: &Problem, x: &StateVec, tau: f64, s: f64) -> NodeMetrics {
    let st = VehicleState::from_vec(x);
    let r = st.position();
    let q = st.dq.real;
    let p_i = rotate_to_inertial(&q, &p.constraints.sensor_body);
    let los = if r.norm() > 0.0 { (-r.dot(&p_i) / (r.norm() * p_i.norm())).clamp(-1.0, 1.0).acos() } else { 0.0 };
    let qn = q.norm();
    let tilt = 2.0 * ((q.v.x * q.v.x + q.v.y * q.v.y).sqrt() / qn).min(1.0).asin();
    NodeMetrics {
        tau,
        time: s * tau,
        position: r,
        range: r.norm(),
        psi: trigger(r.norm(), p.constraints.trigger_min, p.constraints.trigger_max),
        los_deg: los.to_degrees(),
        tilt_deg: tilt.to_degrees(),
        rate_deg: st.dv.omega.amax().to_degrees(),
        speed: st.dv.v.norm(),
        altitude: r.z,
    }
}

impl Trajectory {
    pub fn metrics(&self, p: &Problem) -> Vec<NodeMetrics> {
        let n = self.nodes();
        self.x.iter().enumerate().map(|(k, x)| node_metrics(p, x, k as f64 / (n - 1) as f64, self.s)).collect()
    }
}

/// Telemetry for one SCP iteration. Times in seconds.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub pipg_iterations: usize,
    pub pipg_converged: bool,
    pub lambda: f64,
    pub sigma_max: f64,
    /// `‖Ĥẑ + d̂‖_∞` at the returned iterate.
    pub dynamics_residual: f64,
    /// Largest scaled deviation from the reference.
    pub trust_region: f64,
    /// Largest scaled `|x − ξ|`.
    pub virtual_gap: f64,
    pub time_of_flight: f64,
    pub final_mass: f64,
    pub pos_err: f64,
    pub vel_err: f64,
    pub path: PathViolation,
    pub t_discretize: f64,
    pub t_parse: f64,
    pub t_solve: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SecoReport {
    pub iterations: Vec<IterationReport>,
    pub converged: bool,
    pub pos_err: f64,
    pub vel_err: f64,
    pub total_time: f64,
}

impl SecoReport {
    pub fn time_totals(&self) -> (f64, f64, f64) {
        self.iterations.iter().fold((0.0, 0.0, 0.0), |a, r| (a.0 + r.t_discretize, a.1 + r.t_parse, a.2 + r.t_solve))
    }
}

/// Discretized subproblem about `traj` and its preconditioned form.
pub fn subproblem_at(
    p: &Problem,
    cfg: &SecoConfig,
    traj: &Trajectory,
) -> Result<(Subproblem<NX, NU>, Hatted<NX, NU>), SecoError> {
    p.validate()?;
    cfg.validate()?;
    let scaling = Scaling::for_problem(p, cfg.s_guess)?;
    let terminal = terminal_set(p.params.m_f, &p.bc.r_f, p.bc.vz_f)?;
    let x_init = p.x_init()?;
    let ctx = AssemblyContext {
        x_init: &x_init,
        weights: &cfg.weights,
        constraints: &p.constraints,
        terminal: &terminal,
        scaling: &scaling,
        s_bounds: cfg.s_bounds,
    };
    let reference = traj.reference();
    let disc = discretize(&Vehicle::new(p.params.clone()), &reference.x, &reference.u, reference.s, cfg.substeps)?;
    let sub = assemble(&disc, &reference, &ctx)?;
    let hat = precondition(&sub, &cfg.spectral, cfg.lambda)?;
    Ok((sub, hat))
}

/// Sees every PIPG iterate: `(scp_iteration, problem, j, ẑ^j, w^j)`.
pub type IterateObserver<'a> = &'a mut dyn FnMut(usize, &Hatted<NX, NU>, usize, &Primal<NX, NU>, &Dual<NX>);

pub fn solve(p: &Problem, cfg: &SecoConfig) -> Result<(Trajectory, SecoReport), SecoError> {
    solve_observed(p, cfg, None, None)
}

/// Full solve with an optional starting trajectory and iterate observer.
pub fn solve_observed(
    p: &Problem,
    cfg: &SecoConfig,
    start: Option<&Trajectory>,
    mut observer: Option<IterateObserver>,
) -> Result<(Trajectory, SecoReport), SecoError> {
    let t_start = Instant::now();
    p.validate()?;
    cfg.validate()?;
    let scaling = Scaling::for_problem(p, cfg.s_guess)?;
    let terminal = terminal_set(p.params.m_f, &p.bc.r_f, p.bc.vz_f)?;
    let x_init = p.x_init()?;
    let vehicle = Vehicle::new(p.params.clone());
    let mut traj = match start {
        Some(t) if t.nodes() == cfg.nodes => t.clone(),
        Some(t) => {
            return Err(SecoError::InvalidConfig(format!(
                "starting trajectory has {} nodes, expected {}",
                t.nodes(),
                cfg.nodes
            )))
        }
        None => initial_guess(p, cfg.nodes, cfg.s_guess)?,
    };
    let ctx = AssemblyContext {
        x_init: &x_init,
        weights: &cfg.weights,
        constraints: &p.constraints,
        terminal: &terminal,
        scaling: &scaling,
        s_bounds: cfg.s_bounds,
    };
    let n = cfg.nodes;
    let mut warm: Option<WarmStart<NX, NU>> = None;
    let mut reports = Vec::new();
    let mut converged = false;
    let (mut pos_err, mut vel_err) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=cfg.max_iterations {
        let reference = traj.reference();
        let t0 = Instant::now();
        let disc = discretize(&vehicle, &reference.x, &reference.u, reference.s, cfg.substeps)?;
        let t1 = Instant::now();
        let sub = assemble(&disc, &reference, &ctx)?;
        let hat = precondition(&sub, &cfg.spectral, cfg.lambda)?;
        let t2 = Instant::now();
        let out = match observer.as_mut() {
            Some(obs) => {
                let mut inner = |j: usize, z: &Primal<NX, NU>, w: &Dual<NX>| obs(it, &hat, j, z, w);
                pipg_custom(&hat, &cfg.pipg, warm.as_ref(), Some(&mut inner))?
            }
            None => pipg_custom(&hat, &cfg.pipg, warm.as_ref(), None)?,
        };
        let t3 = Instant::now();
        if !out.converged {
            log::info!("SCP iteration {it}: PIPG stopped at its iteration cap");
            if cfg.abort_on_solver_failure {
                return Err(SecoError::SolverAbort { iteration: it });
            }
        }
        let dz = &out.z;
        let sx = &scaling.x_scale;
        let su = &scaling.u_scale;
        let mut next = Trajectory { x: Vec::with_capacity(n), xi: Vec::with_capacity(n), u: Vec::with_capacity(n), s: 0.0 };
        let mut trust: f64 = dz.s.abs();
        for k in 0..n {
            let mut xk = StateVec::from_fn(|i, _| reference.x[k][i] + sx[i] * dz.x[k][i]);
            let xik = StateVec::from_fn(|i, _| reference.x[k][i] + sx[i] * dz.xi[k][i]);
            if k == 0 {
                xk = x_init;
            } else {
                renormalize(&mut xk);
            }
            next.x.push(xk);
            next.xi.push(xik);
            next.u.push(ControlVec::from_fn(|i, _| reference.u[k][i] + su[i] * dz.u[k][i]));
            trust = trust.max(dz.x[k].amax()).max(dz.u[k].amax());
        }
        next.s = reference.s + scaling.s_scale * dz.s;
        let gap = (0..n)
            .map(|k| (0..NX).map(|i| ((next.xi[k][i] - next.x[k][i]) / sx[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let mut wz = Primal::<NX, NU>::zeros(n);
        for k in 0..n {
            wz.xi[k] = StateVec::from_fn(|i, _| (next.xi[k][i] - next.x[k][i]) / sx[i]);
        }
        warm = Some(WarmStart { z: wz, w: out.w.clone() });
        traj = next;

        (pos_err, vel_err) = convergence_check(p, &traj, cfg.substeps)?;
        let path = path_violation(p, &traj);
        let residual = hat.residual(&out.z_hat).inf_norm();
        reports.push(IterationReport {
            iteration: it,
            pipg_iterations: out.iterations,
            pipg_converged: out.converged,
            lambda: hat.lambda,
            sigma_max: hat.sigma_max,
            dynamics_residual: residual,
            trust_region: trust,
            virtual_gap: gap,
            time_of_flight: traj.s,
            final_mass: traj.x[n - 1][idx::M],
            pos_err,
            vel_err,
            path,
            t_discretize: (t1 - t0).as_secs_f64(),
            t_parse: (t2 - t1).as_secs_f64(),
            t_solve: (t3 - t2).as_secs_f64(),
        });
        log::info!(
            "iter {it}: pipg {} ({}), s {:.3}, m_N {:.2}, gap {:.2e}, pos {:.3} m, vel {:.4} m/s",
            out.iterations,
            if out.converged { "ok" } else { "cap" },
            traj.s,
            traj.x[n - 1][idx::M],
            gap,
            pos_err,
            vel_err
        );
        converged =
            pos_err <= cfg.pos_tol && vel_err <= cfg.vel_tol && gap <= cfg.gap_tol && path.within(&cfg.path_tol);
        if converged && cfg.early_exit {
            break;
        }
    }
    let report = SecoReport { iterations: reports, converged, pos_err, vel_err, total_time: t_start.elapsed().as_secs_f64() };
    Ok((traj, report))
}
