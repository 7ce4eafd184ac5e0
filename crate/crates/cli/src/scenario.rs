//! Scenario description, validation and execution.
//!
//! Scenarios are TOML documents:
//!
//! ```toml
//! name = "cross-lateral"
//! model = "dubins1"
//! x0 = [0.0, 0.0, 1.0]
//!
//! [controller]
//! kind = "open_loop_command"
//! command = [0.0, 0.0, 0.1]
//!
//! [sim]
//! dt = 0.01
//! t_end = 10.0
//! ```
//!
//! When `delta` is omitted it defaults to `√dt`. It is always rounded to a
//! whole number of integration steps so that leg boundaries land on steps.

use std::fmt;

use lietdm_core::dubins::{
    cardinal_controller, dubins1_dynamics, dubins2_rhs, lissajous_reference, pose_controller_1,
    pose_controller_2, DubinsState1, DubinsState2, GainSet, Pose,
};
use lietdm_core::simulator::Component;
use lietdm_core::{mean_velocity, simulate, tracking_error, Actuation, BracketCommand, Method, MuxState, SimConfig, Trajectory};
use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Dubins1,
    Dubins2,
}

impl Model {
    pub fn state_dim(self) -> usize {
        match self {
            Model::Dubins1 => 3,
            Model::Dubins2 => 5,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Dubins1 => "dubins1",
            Model::Dubins2 => "dubins2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Lissajous,
    Constant { pose: [f64; 3] },
}

impl ReferenceSpec {
    /// Reference pose and its rate at time `t`.
    pub fn at(&self, t: f64) -> (Pose, Vector3<f64>) {
        match *self {
            ReferenceSpec::Lissajous => lissajous_reference(t),
            ReferenceSpec::Constant { pose: [x, y, theta] } => (Pose::new(x, y, theta), Vector3::zeros()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// Constant bracket command `a`.
    OpenLoopCommand { command: [f64; 3] },
    /// Constant world-frame rate `ẋ_d` through `Aᵀ(x₃)`.
    Cardinal { xdot_d: [f64; 3] },
    /// First-order pose tracking.
    Pose1 { reference: ReferenceSpec },
    /// Second-order backstepping stack.
    Pose2 { reference: ReferenceSpec },
}

impl ControllerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ControllerSpec::OpenLoopCommand { .. } => "open_loop_command",
            ControllerSpec::Cardinal { .. } => "cardinal",
            ControllerSpec::Pose1 { .. } => "pose1",
            ControllerSpec::Pose2 { .. } => "pose2",
        }
    }

    fn reference(&self) -> Option<&ReferenceSpec> {
        match self {
            ControllerSpec::Pose1 { reference } | ControllerSpec::Pose2 { reference } => Some(reference),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Euler,
    #[default]
    Rk4,
}

impl From<MethodSpec> for Method {
    fn from(m: MethodSpec) -> Self {
        match m {
            MethodSpec::Euler => Method::Euler,
            MethodSpec::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub dt: f64,
    pub t_end: f64,
    pub method: MethodSpec,
    pub record_stride: usize,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 10.0,
            method: MethodSpec::Rk4,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSpec {
    pub k_vel: f64,
    pub k_pose1: f64,
    pub k_pose2: f64,
}

impl Default for GainSpec {
    fn default() -> Self {
        let g = GainSet::default();
        Self {
            k_vel: g.k_vel,
            k_pose1: g.k_pose1,
            k_pose2: g.k_pose2,
        }
    }
}

impl From<&GainSpec> for GainSet {
    fn from(g: &GainSpec) -> Self {
        GainSet {
            k_vel: g.k_vel,
            k_pose1: g.k_pose1,
            k_pose2: g.k_pose2,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub controller: ControllerSpec,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub sim: SimSpec,
    /// Leg duration; `√dt` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub gains: GainSpec,
    /// Include the reference rate `ṗ` in the pose loops.
    #[serde(default = "default_true")]
    pub feedforward: bool,
    /// Start of the window for tail tracking errors; `t_end / 4` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_start: Option<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<document>".into());
            CliError::config(path, e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            method: self.sim.method.into(),
            record_stride: self.sim.record_stride,
        }
    }

    /// Requested and effective leg duration.
    pub fn delta_report(&self) -> DeltaReport {
        let dt = self.sim.dt;
        let requested = self.delta.unwrap_or_else(|| dt.sqrt());
        let steps_per_leg = ((requested / dt).round() as usize).max(1);
        let effective = steps_per_leg as f64 * dt;
        DeltaReport {
            requested,
            effective,
            steps_per_leg,
            rounded: (effective - requested).abs() > 1e-9 * requested,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(CliError::config("name", "must not be empty"));
        }
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(path, format!("must be positive and finite, got {v}")))
            }
        };
        positive("sim.dt", self.sim.dt)?;
        positive("sim.t_end", self.sim.t_end)?;
        if self.sim.t_end < self.sim.dt {
            return Err(CliError::config("sim.t_end", "must be at least sim.dt"));
        }
        if self.sim.record_stride == 0 {
            return Err(CliError::config("sim.record_stride", "must be positive"));
        }
        if let Some(d) = self.delta {
            positive("delta", d)?;
        }
        positive("gains.k_vel", self.gains.k_vel)?;
        positive("gains.k_pose1", self.gains.k_pose1)?;
        positive("gains.k_pose2", self.gains.k_pose2)?;
        if let Some(t) = self.tail_start {
            if !(t >= 0.0 && t < self.sim.t_end) {
                return Err(CliError::config("tail_start", format!("must lie in [0, t_end), got {t}")));
            }
        }

        let dim = self.model.state_dim();
        if self.x0.len() != dim {
            return Err(CliError::config(
                "x0",
                format!("{} needs {dim} components, got {}", self.model, self.x0.len()),
            ));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("x0", "components must be finite"));
        }

        let finite3 = |path: &str, v: &[f64; 3]| {
            if v.iter().all(|c| c.is_finite()) {
                Ok(())
            } else {
                Err(CliError::config(path, "components must be finite"))
            }
        };
        match (&self.controller, self.model) {
            (ControllerSpec::OpenLoopCommand { command }, Model::Dubins1) => finite3("controller.command", command)?,
            (ControllerSpec::Cardinal { xdot_d }, Model::Dubins1) => finite3("controller.xdot_d", xdot_d)?,
            (ControllerSpec::Pose1 { .. }, Model::Dubins1) | (ControllerSpec::Pose2 { .. }, Model::Dubins2) => {}
            (c, m) => {
                return Err(CliError::config(
                    "controller.kind",
                    format!("controller `{}` does not apply to model `{m}`", c.kind()),
                ))
            }
        }
        if let Some(ReferenceSpec::Constant { pose }) = self.controller.reference() {
            finite3("controller.reference.pose", pose)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub requested: f64,
    pub effective: f64,
    pub steps_per_leg: usize,
    pub rounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub tail_start: f64,
    pub max_position_error: f64,
    pub tail_position_error: f64,
    pub tail_heading_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub model: Model,
    pub controller: String,
    pub dt: f64,
    pub t_end: f64,
    pub method: MethodSpec,
    pub delta: DeltaReport,
    pub feedforward: bool,
    pub samples: usize,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    /// Last recorded state minus the first.
    pub net_displacement: Vec<f64>,
    pub mean_velocity: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: Summary,
}

fn actuation<S>(u: (f64, f64), held: BracketCommand, next: S) -> Actuation<S> {
    Actuation::new(vec![u.0, u.1], next).with_command(held)
}

/// Runs the configured control stack and summarizes the result.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput> {
    s.validate()?;
    let config = s.sim_config();
    let delta = s.delta_report();
    let dt = config.dt;
    let gains = GainSet::from(&s.gains);
    let x0 = DVector::from_column_slice(&s.x0);
    let mux0 = MuxState::new(BracketCommand::ZERO, delta.effective)?;
    let feedforward = s.feedforward;
    let reference_at = |spec: &ReferenceSpec, t: f64| {
        let (p, pdot) = spec.at(t);
        (p, if feedforward { pdot } else { Vector3::zeros() })
    };

    let trajectory = match &s.controller {
        ControllerSpec::OpenLoopCommand { command } => {
            let cmd = BracketCommand::from(*command);
            simulate(
                dubins1_dynamics,
                |_, _, mux: &MuxState| {
                    let tick = mux.drive(cmd, dt)?;
                    Ok(actuation(tick.output, tick.held, tick.next))
                },
                mux0,
                x0,
                &config,
            )?
        }
        ControllerSpec::Cardinal { xdot_d } => {
            let rate = Vector3::from(*xdot_d);
            simulate(
                dubins1_dynamics,
                |_, x: &DVector<f64>, mux: &MuxState| {
                    let cmd = cardinal_controller(&DubinsState1::from_slice(x.as_slice())?, &rate);
                    let tick = mux.drive(cmd, dt)?;
                    Ok(actuation(tick.output, tick.held, tick.next))
                },
                mux0,
                x0,
                &config,
            )?
        }
        ControllerSpec::Pose1 { reference } => simulate(
            dubins1_dynamics,
            |t, x: &DVector<f64>, mux: &MuxState| {
                let (p, pdot) = reference_at(reference, t);
                let cmd = pose_controller_1(&DubinsState1::from_slice(x.as_slice())?, &p, &pdot, &gains);
                let tick = mux.drive(cmd, dt)?;
                Ok(actuation(tick.output, tick.held, tick.next))
            },
            mux0,
            x0,
            &config,
        )?,
        ControllerSpec::Pose2 { reference } => simulate(
            dubins2_rhs,
            |t, x: &DVector<f64>, mux: &MuxState| {
                let (p, pdot) = reference_at(reference, t);
                let state = DubinsState2::from_slice(x.as_slice())?;
                let step = pose_controller_2(&state, &p, &pdot, &gains, mux, dt)?;
                Ok(actuation((step.u[0], step.u[1]), step.held, step.mux))
            },
            mux0,
            x0,
            &config,
        )?,
    };

    let summary = summarize(s, delta, &trajectory)?;
    Ok(RunOutput { trajectory, summary })
}

fn summarize(s: &Scenario, delta: DeltaReport, traj: &Trajectory) -> Result<Summary> {
    let first = traj.first_state().expect("simulation records the initial state");
    let last = traj.last_state().expect("simulation records the initial state");
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap_or(&0.0));
    let mean = if traj.len() > 1 {
        mean_velocity(traj, t0, t1)?.iter().copied().collect()
    } else {
        vec![0.0; first.len()]
    };

    let tracking = match s.controller.reference() {
        Some(reference) => {
            let tail_start = s.tail_start.unwrap_or(s.sim.t_end / 4.0);
            let reference_vec = |t: f64| {
                let (p, _) = reference.at(t);
                vec![p.x, p.y, p.theta]
            };
            let position = tracking_error(traj, reference_vec, &[Component::Linear(0), Component::Linear(1)])?;
            let heading = tracking_error(traj, reference_vec, &[Component::Angle(2)])?;
            let tail_max = |errors: &[f64]| {
                traj.times
                    .iter()
                    .zip(errors)
                    .filter(|(&t, _)| t >= tail_start)
                    .map(|(_, &e)| e)
                    .fold(0.0_f64, f64::max)
            };
            Some(TrackingReport {
                tail_start,
                max_position_error: position.iter().copied().fold(0.0_f64, f64::max),
                tail_position_error: tail_max(&position),
                tail_heading_error: tail_max(&heading),
            })
        }
        None => None,
    };

    Ok(Summary {
        name: s.name.clone(),
        model: s.model,
        controller: s.controller.kind().to_string(),
        dt: s.sim.dt,
        t_end: s.sim.t_end,
        method: s.sim.method,
        delta,
        feedforward: s.feedforward,
        samples: traj.len(),
        final_time: t1,
        final_state: last.iter().copied().collect(),
        net_displacement: (last - first).iter().copied().collect(),
        mean_velocity: mean,
        tracking,
    })
}

/// Runs independent scenarios concurrently; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<RunOutput>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || run_scenario(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}
