//! First- and second-order Dubins cars and their control stack.
//!
//! First order (driftless, inputs are speed and turn rate):
//!
//! ```text
//! ẋ = f(x)·u₁ + g(x)·u₂,  f = (cos x₃, sin x₃, 0),  g = (0, 0, 1)
//! [f, g] = (sin x₃, −cos x₃, 0)
//! ```
//!
//! Second order (accelerations are the inputs):
//!
//! ```text
//! ẋ = (x₄ cos x₃, x₄ sin x₃, x₅, u₁, u₂)
//! ```
//!
//! The second-order stack is a cascade: a high-gain velocity loop makes
//! `(x₄, x₅)` follow a velocity demand, so the outer layers see a
//! first-order car; the multiplexer then adds the lateral direction and the
//! body-frame map `Aᵀ(x₃)` turns world-frame pose rates into bracket
//! commands.

use nalgebra::{dvector, DMatrix, DVector, Matrix3, Vector3};

use crate::error::{contract, Result};
use crate::multiplexer::{BracketCommand, MuxState};
use crate::simulator::wrap_angle;
use crate::vectorfield::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DubinsState1 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl DubinsState1 {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match *x {
            [x1, x2, x3] => Ok(Self { x1, x2, x3 }),
            _ => Err(contract(format!("first-order state needs 3 components, got {}", x.len()))),
        }
    }

    pub fn to_vector(self) -> DVector<f64> {
        dvector![self.x1, self.x2, self.x3]
    }

    pub fn pose(self) -> Pose {
        Pose::new(self.x1, self.x2, self.x3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DubinsState2 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    /// Speed (m/s).
    pub x4: f64,
    /// Turn rate (rad/s).
    pub x5: f64,
}

impl DubinsState2 {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64, x5: f64) -> Self {
        Self { x1, x2, x3, x4, x5 }
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match *x {
            [x1, x2, x3, x4, x5] => Ok(Self { x1, x2, x3, x4, x5 }),
            _ => Err(contract(format!("second-order state needs 5 components, got {}", x.len()))),
        }
    }

    pub fn to_vector(self) -> DVector<f64> {
        dvector![self.x1, self.x2, self.x3, self.x4, self.x5]
    }

    pub fn pose(self) -> Pose {
        Pose::new(self.x1, self.x2, self.x3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn as_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.theta)
    }

    /// `target − self` with the heading difference wrapped to `(−π, π]`.
    pub fn error_to(self, target: Pose) -> Vector3<f64> {
        Vector3::new(
            target.x - self.x,
            target.y - self.y,
            wrap_angle(target.theta - self.theta),
        )
    }
}

/// Controller gains. Defaults: `k_pose1 = 1`, `k_pose2 = 0.3`, `k_vel = 20`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    /// Inner velocity loop (1/s).
    pub k_vel: f64,
    /// First-order pose loop (1/s).
    pub k_pose1: f64,
    /// Second-order outer pose loop (1/s).
    pub k_pose2: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            k_vel: 20.0,
            k_pose1: 1.0,
            k_pose2: 0.3,
        }
    }
}

impl GainSet {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_vel", self.k_vel),
            ("k_pose1", self.k_pose1),
            ("k_pose2", self.k_pose2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(contract(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The drive field `f` and steering field `g` of the first-order car, with
/// analytic Jacobians.
pub fn dubins1_fields() -> (VectorField, VectorField) {
    let f = VectorField::new("f", 3, |x| dvector![x[2].cos(), x[2].sin(), 0.0]).with_jacobian(|x| {
        let mut j = DMatrix::zeros(3, 3);
        j[(0, 2)] = -x[2].sin();
        j[(1, 2)] = x[2].cos();
        j
    });
    let g = VectorField::constant("g", dvector![0.0, 0.0, 1.0]);
    (f, g)
}

/// Analytic `[f, g]` of the first-order car.
pub fn dubins1_bracket(x3: f64) -> Vector3<f64> {
    Vector3::new(x3.sin(), -x3.cos(), 0.0)
}

pub fn dubins1_dynamics(x: &DVector<f64>, u: &[f64]) -> DVector<f64> {
    let (s, c) = x[2].sin_cos();
    dvector![u[0] * c, u[0] * s, u[1]]
}

/// `A(x₃) = [f | g | [f, g]]`, so that `ẋ = A·a` for the multiplexed car.
pub fn body_matrix(x3: f64) -> Matrix3<f64> {
    let (s, c) = x3.sin_cos();
    Matrix3::new(
        c, 0.0, s, //
        s, 0.0, -c, //
        0.0, 1.0, 0.0,
    )
}

/// `a = A⁻¹(x₃)·ẋ_d`, computed as `Aᵀ·ẋ_d` since `A` is orthogonal.
pub fn cardinal_controller(x: &DubinsState1, xdot_d: &Vector3<f64>) -> BracketCommand {
    command_from_rate(x.x3, xdot_d)
}

fn command_from_rate(heading: f64, xdot_d: &Vector3<f64>) -> BracketCommand {
    let a = body_matrix(heading).transpose() * xdot_d;
    BracketCommand {
        a1: a[0],
        a2: a[1],
        a3: a[2],
    }
}

/// Proportional pose loop with feedforward for the first-order car:
/// `ẋ_d = k_pose1·(p − x) + ṗ`, then [`cardinal_controller`].
pub fn pose_controller_1(x: &DubinsState1, p: &Pose, pdot: &Vector3<f64>, gains: &GainSet) -> BracketCommand {
    let xdot_d = x.pose().error_to(*p) * gains.k_pose1 + pdot;
    cardinal_controller(x, &xdot_d)
}

pub fn dubins2_dynamics(x: &DubinsState2, u: [f64; 2]) -> [f64; 5] {
    let (s, c) = x.x3.sin_cos();
    [x.x4 * c, x.x4 * s, x.x5, u[0], u[1]]
}

/// [`dubins2_dynamics`] over plain vectors, for the simulator.
pub fn dubins2_rhs(x: &DVector<f64>, u: &[f64]) -> DVector<f64> {
    let state = DubinsState2::new(x[0], x[1], x[2], x[3], x[4]);
    DVector::from_row_slice(&dubins2_dynamics(&state, [u[0], u[1]]))
}

/// `u = k_vel·(v_d − (x₄, x₅))`.
pub fn velocity_loop(x: &DubinsState2, v_d: [f64; 2], gains: &GainSet) -> [f64; 2] {
    [gains.k_vel * (v_d[0] - x.x4), gains.k_vel * (v_d[1] - x.x5)]
}

/// One tick of the full second-order stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2Step {
    pub u: [f64; 2],
    pub mux: MuxState,
    /// Bracket command computed this tick (latched only at cycle start).
    pub command: BracketCommand,
    /// Command the multiplexer is executing this tick.
    pub held: BracketCommand,
    /// Velocity demand handed to the inner loop.
    pub v_d: [f64; 2],
}

/// Pose loop, body-frame linearization, multiplexer and velocity loop,
/// evaluated for one step of length `dt`.
pub fn pose_controller_2(
    x: &DubinsState2,
    p: &Pose,
    pdot: &Vector3<f64>,
    gains: &GainSet,
    mux: &MuxState,
    dt: f64,
) -> Result<Pose2Step> {
    let xdot_d = x.pose().error_to(*p) * gains.k_pose2 + pdot;
    let command = command_from_rate(x.x3, &xdot_d);
    let tick = mux.drive(command, dt)?;
    let v_d = [tick.output.0, tick.output.1];
    Ok(Pose2Step {
        u: velocity_loop(x, v_d, gains),
        mux: tick.next,
        command,
        held: tick.held,
        v_d,
    })
}

/// Lissajous reference `p(t) = (5 sin(t/100), 5 sin(2t/100), 0)` and its
/// time derivative. The desired heading is always East.
pub fn lissajous_reference(t: f64) -> (Pose, Vector3<f64>) {
    let p = Pose::new(5.0 * (t / 100.0).sin(), 5.0 * (2.0 * t / 100.0).sin(), 0.0);
    let pdot = Vector3::new(0.05 * (t / 100.0).cos(), 0.1 * (2.0 * t / 100.0).cos(), 0.0);
    (p, pdot)
}
