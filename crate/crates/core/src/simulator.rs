//! Fixed-step simulation of controlled systems `ẋ = F(x, u)`.
//!
//! The controller is sampled at the start of each step and its output is
//! held over the step. Controller state (typically a [`MuxState`]) is
//! threaded through by value.
//!
//! [`MuxState`]: crate::multiplexer::MuxState

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{contract, Error, Result};
use crate::multiplexer::BracketCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(contract(format!("unknown integration method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub record_stride: usize,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            method: Method::Rk4,
            record_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(contract(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(contract(format!(
                "t_end must be at least dt, got t_end = {}, dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(contract("record_stride must be positive"));
        }
        Ok(())
    }

    /// Number of integration steps, `t_end / dt` rounded to the nearest
    /// integer.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// What a controller applies over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuation<S> {
    pub u: Vec<f64>,
    /// Extended command behind `u`, when the controller has one.
    pub command: Option<BracketCommand>,
    pub next: S,
}

impl<S> Actuation<S> {
    pub fn new(u: Vec<f64>, next: S) -> Self {
        Self {
            u,
            command: None,
            next,
        }
    }

    pub fn with_command(mut self, command: BracketCommand) -> Self {
        self.command = Some(command);
        self
    }
}

/// Recorded samples of a run. `inputs[k]` is the input held from
/// `times[k]` over the following step; `commands` is present only when
/// every sample carried one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub commands: Option<Vec<BracketCommand>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, |u| u.len())
    }

    pub fn first_state(&self) -> Option<&DVector<f64>> {
        self.states.first()
    }

    pub fn last_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }

    /// Index of the recorded sample closest to `t`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        if self.times.is_empty() {
            return None;
        }
        let idx = self.times.partition_point(|&s| s < t);
        if idx == 0 {
            return Some(0);
        }
        if idx == self.times.len() {
            return Some(idx - 1);
        }
        if (self.times[idx] - t).abs() < (t - self.times[idx - 1]).abs() {
            Some(idx)
        } else {
            Some(idx - 1)
        }
    }
}

fn euler_step<D>(dynamics: &D, x: &DVector<f64>, u: &[f64], dt: f64) -> DVector<f64>
where
    D: Fn(&DVector<f64>, &[f64]) -> DVector<f64>,
{
    x + dynamics(x, u) * dt
}

fn rk4_step<D>(dynamics: &D, x: &DVector<f64>, u: &[f64], dt: f64) -> DVector<f64>
where
    D: Fn(&DVector<f64>, &[f64]) -> DVector<f64>,
{
    let k1 = dynamics(x, u);
    let k2 = dynamics(&(x + &k1 * (dt / 2.0)), u);
    let k3 = dynamics(&(x + &k2 * (dt / 2.0)), u);
    let k4 = dynamics(&(x + &k3 * dt), u);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Integrates `dynamics` from `x0` under `controller` for `config.steps()`
/// fixed steps, recording every `record_stride`-th sample (the final sample
/// is recorded whenever it falls on the stride).
pub fn simulate<D, C, S>(
    dynamics: D,
    mut controller: C,
    initial: S,
    x0: DVector<f64>,
    config: &SimConfig,
) -> Result<Trajectory>
where
    D: Fn(&DVector<f64>, &[f64]) -> DVector<f64>,
    C: FnMut(f64, &DVector<f64>, &S) -> Result<Actuation<S>>,
{
    config.validate()?;
    if !all_finite(&x0) {
        return Err(contract("initial state must be finite"));
    }
    let steps = config.steps();
    let stride = config.record_stride;
    let capacity = steps / stride + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        inputs: Vec::with_capacity(capacity),
        commands: None,
    };
    let mut commands = Vec::with_capacity(capacity);
    let mut all_commanded = true;

    let mut x = x0;
    let mut ctrl_state = initial;
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        let act = controller(t, &x, &ctrl_state)?;
        if k % stride == 0 {
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.inputs.push(act.u.clone());
            match act.command {
                Some(c) => commands.push(c),
                None => all_commanded = false,
            }
        }
        if k == steps {
            break;
        }
        let next = match config.method {
            Method::Euler => euler_step(&dynamics, &x, &act.u, config.dt),
            Method::Rk4 => rk4_step(&dynamics, &x, &act.u, config.dt),
        };
        if !all_finite(&next) {
            return Err(Error::Divergence {
                t: (k + 1) as f64 * config.dt,
                last_state: x.iter().copied().collect(),
            });
        }
        x = next;
        ctrl_state = act.next;
    }

    if all_commanded && !commands.is_empty() {
        traj.commands = Some(commands);
    }
    Ok(traj)
}

/// `(x(t₁) − x(t₀)) / (t₁ − t₀)` using the recorded samples nearest to the
/// window ends.
pub fn mean_velocity(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<DVector<f64>> {
    if t_end.is_nan() || t_start.is_nan() || t_end <= t_start {
        return Err(contract(format!(
            "mean velocity window is empty: [{t_start}, {t_end}]"
        )));
    }
    let (Some(&first), Some(&last)) = (traj.times.first(), traj.times.last()) else {
        return Err(contract("mean velocity of an empty trajectory"));
    };
    let slack = 1e-9 * (1.0 + last.abs());
    if t_start < first - slack || t_end > last + slack {
        return Err(contract(format!(
            "window [{t_start}, {t_end}] outside trajectory support [{first}, {last}]"
        )));
    }
    let i0 = traj.nearest_index(t_start).unwrap_or(0);
    let i1 = traj.nearest_index(t_end).unwrap_or(0);
    if i1 <= i0 {
        return Err(contract("mean velocity window covers fewer than two samples"));
    }
    let span = traj.times[i1] - traj.times[i0];
    Ok((&traj.states[i1] - &traj.states[i0]) / span)
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// A state component compared in [`tracking_error`]; the index addresses
/// both the state and the reference vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Linear(usize),
    /// Difference wrapped to `(−π, π]`.
    Angle(usize),
}

/// Per-sample Euclidean error between the trajectory and `reference` over
/// the selected components.
pub fn tracking_error<R>(traj: &Trajectory, reference: R, components: &[Component]) -> Result<Vec<f64>>
where
    R: Fn(f64) -> Vec<f64>,
{
    let dim = traj.state_dim();
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| {
            let r = reference(t);
            let mut sum = 0.0;
            for c in components {
                let (i, angular) = match *c {
                    Component::Linear(i) => (i, false),
                    Component::Angle(i) => (i, true),
                };
                if i >= dim || i >= r.len() {
                    return Err(contract(format!(
                        "component {i} out of range (state dim {dim}, reference dim {})",
                        r.len()
                    )));
                }
                let d = x[i] - r[i];
                let d = if angular { wrap_angle(d) } else { d };
                sum += d * d;
            }
            Ok(sum.sqrt())
        })
        .collect()
}
