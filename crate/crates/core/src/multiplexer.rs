//! Time-division multiplexing of two inputs into three motion directions.
//!
//! A command `a = (a₁, a₂, a₃)` asks for the mean motion
//! `a₁·f + a₂·g + a₃·[f, g]`. It is realized by cycling through four legs of
//! duration `δ`:
//!
//! ```text
//! leg 0: (a₁ + εα, a₂)
//! leg 1: (a₁,      a₂ + α)
//! leg 2: (a₁ − εα, a₂)
//! leg 3: (a₁,      a₂ − α)
//! ```
//!
//! with `α = √(4|a₃|/δ)` and `ε = sign(a₃)`. One cycle of the unit sequence
//! moves the state by `[f, g]·δ²`; scaling by `α` multiplies that by `α²`,
//! giving a mean bracket velocity of `α²δ/4 = |a₃|`.
//!
//! No saturation is applied: `α` grows without bound as `δ` shrinks.

use crate::error::{contract, Result};

/// Extended input: velocities along `f`, `g` and `[f, g]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BracketCommand {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl BracketCommand {
    pub const ZERO: Self = Self {
        a1: 0.0,
        a2: 0.0,
        a3: 0.0,
    };

    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let cmd = Self { a1, a2, a3 };
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(contract(format!("bracket command must be finite, got {self:?}")))
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }
}

impl From<[f64; 3]> for BracketCommand {
    fn from([a1, a2, a3]: [f64; 3]) -> Self {
        Self { a1, a2, a3 }
    }
}

/// Amplitude, orientation and leg duration of one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleParams {
    pub alpha: f64,
    /// `sign(a₃)`, or 0 when `a₃ = 0`.
    pub epsilon: i8,
    pub delta: f64,
}

pub fn cycle_params(cmd: &BracketCommand, delta: f64) -> Result<CycleParams> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(contract(format!("leg duration must be positive, got {delta}")));
    }
    cmd.validate()?;
    let epsilon = if cmd.a3 > 0.0 {
        1
    } else if cmd.a3 < 0.0 {
        -1
    } else {
        0
    };
    Ok(CycleParams {
        alpha: (4.0 * cmd.a3.abs() / delta).sqrt(),
        epsilon,
        delta,
    })
}

/// Result of [`MuxState::drive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuxTick {
    pub output: (f64, f64),
    /// Command in effect during this tick.
    pub held: BracketCommand,
    pub next: MuxState,
}

// Relative slack when comparing accumulated leg time against `delta`.
const PHASE_TOL: f64 = 1e-9;

/// Phase of the four-leg cycle plus the command latched for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuxState {
    leg: u8,
    time_in_leg: f64,
    held_command: BracketCommand,
    params: CycleParams,
}

impl MuxState {
    /// A state at the start of a cycle holding `cmd`.
    pub fn new(cmd: BracketCommand, delta: f64) -> Result<Self> {
        Ok(Self {
            leg: 0,
            time_in_leg: 0.0,
            held_command: cmd,
            params: cycle_params(&cmd, delta)?,
        })
    }

    /// A state at an arbitrary phase. `leg` must be below 4 and
    /// `time_in_leg` in `[0, delta)`.
    pub fn at_phase(cmd: BracketCommand, delta: f64, leg: u8, time_in_leg: f64) -> Result<Self> {
        if leg > 3 {
            return Err(contract(format!("leg must be in 0..4, got {leg}")));
        }
        if !(0.0..delta).contains(&time_in_leg) {
            return Err(contract(format!(
                "time in leg must lie in [0, {delta}), got {time_in_leg}"
            )));
        }
        Ok(Self {
            leg,
            time_in_leg,
            ..Self::new(cmd, delta)?
        })
    }

    pub fn leg(&self) -> u8 {
        self.leg
    }

    pub fn time_in_leg(&self) -> f64 {
        self.time_in_leg
    }

    pub fn held_command(&self) -> BracketCommand {
        self.held_command
    }

    pub fn params(&self) -> CycleParams {
        self.params
    }

    pub fn delta(&self) -> f64 {
        self.params.delta
    }

    pub fn at_cycle_start(&self) -> bool {
        self.leg == 0 && self.time_in_leg == 0.0
    }

    /// Zero-order-hold output `(u₁, u₂)` for the current leg.
    pub fn output(&self) -> (f64, f64) {
        let BracketCommand { a1, a2, .. } = self.held_command;
        let alpha = self.params.alpha;
        let ea = f64::from(self.params.epsilon) * alpha;
        match self.leg {
            0 => (a1 + ea, a2),
            1 => (a1, a2 + alpha),
            2 => (a1 - ea, a2),
            _ => (a1, a2 - alpha),
        }
    }

    /// Advances the phase by `dt`. When the cycle wraps back to leg 0,
    /// `next_cmd` is latched for the coming cycle.
    pub fn advance(&self, dt: f64, next_cmd: BracketCommand) -> Result<Self> {
        let delta = self.params.delta;
        if dt.is_nan() || dt <= 0.0 {
            return Err(contract(format!("time step must be positive, got {dt}")));
        }
        if dt > delta * (1.0 + PHASE_TOL) {
            return Err(contract(format!(
                "time step {dt} exceeds leg duration {delta}; the cycle cannot be resolved"
            )));
        }
        let mut next = *self;
        let mut t = self.time_in_leg + dt;
        if t >= delta * (1.0 - PHASE_TOL) {
            t -= delta;
            if t < delta * PHASE_TOL {
                t = 0.0;
            }
            next.leg = (self.leg + 1) % 4;
            if next.leg == 0 {
                next.held_command = next_cmd;
                next.params = cycle_params(&next_cmd, delta)?;
            }
        }
        next.time_in_leg = t;
        Ok(next)
    }

    /// `self` with `cmd` latched if a cycle is starting, otherwise unchanged.
    pub fn latched(&self, cmd: BracketCommand) -> Result<Self> {
        if self.at_cycle_start() {
            Self::new(cmd, self.params.delta)
        } else {
            Ok(*self)
        }
    }

    /// One controller tick: latch `cmd` if a cycle is starting, emit the
    /// leg output, then advance by `dt`.
    pub fn drive(&self, cmd: BracketCommand, dt: f64) -> Result<MuxTick> {
        let current = self.latched(cmd)?;
        Ok(MuxTick {
            output: current.output(),
            held: current.held_command,
            next: current.advance(dt, cmd)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_examples() {
        let p = cycle_params(&BracketCommand::new(0.5, 0.2, 0.0).unwrap(), 0.1).unwrap();
        assert_eq!((p.alpha, p.epsilon), (0.0, 0));

        let p = cycle_params(&BracketCommand::new(0.0, 0.0, 0.1).unwrap(), 0.1).unwrap();
        assert!((p.alpha - 2.0).abs() < 1e-12);
        assert_eq!(p.epsilon, 1);

        let p = cycle_params(&BracketCommand::new(0.0, 0.0, -0.1).unwrap(), 0.1).unwrap();
        assert!((p.alpha - 2.0).abs() < 1e-12);
        assert_eq!(p.epsilon, -1);
    }

    #[test]
    fn params_reject_nonpositive_delta() {
        assert!(cycle_params(&BracketCommand::ZERO, 0.0).is_err());
        assert!(cycle_params(&BracketCommand::ZERO, -0.1).is_err());
        assert!(BracketCommand::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn output_examples() {
        let cmd = BracketCommand::new(0.0, 0.0, 0.1).unwrap();
        let s = MuxState::at_phase(cmd, 0.1, 0, 0.0).unwrap();
        let (u1, u2) = s.output();
        assert!((u1 - 2.0).abs() < 1e-12 && u2 == 0.0);
        let s = MuxState::at_phase(cmd, 0.1, 3, 0.0).unwrap();
        let (u1, u2) = s.output();
        assert!(u1 == 0.0 && (u2 + 2.0).abs() < 1e-12);

        let pass = BracketCommand::new(0.3, -0.1, 0.0).unwrap();
        for leg in 0..4 {
            let s = MuxState::at_phase(pass, 0.1, leg, 0.0).unwrap();
            assert_eq!(s.output(), (0.3, -0.1));
        }
    }

    #[test]
    fn advance_wraps_and_latches() {
        let delta = 0.1;
        let dt = 0.01;
        let old = BracketCommand::new(1.0, 0.0, 0.0).unwrap();
        let new = BracketCommand::new(0.0, 0.0, -0.3).unwrap();
        let s = MuxState::at_phase(old, delta, 3, delta - dt).unwrap();
        let s = s.advance(dt, new).unwrap();
        assert_eq!(s.leg(), 0);
        assert_eq!(s.time_in_leg(), 0.0);
        assert_eq!(s.held_command(), new);
        assert_eq!(s.params().epsilon, -1);
    }

    #[test]
    fn advance_within_leg_keeps_command() {
        let cmd = BracketCommand::new(1.0, 2.0, 3.0).unwrap();
        let s = MuxState::at_phase(cmd, 0.1, 1, 0.0).unwrap();
        let s = s.advance(0.05, BracketCommand::ZERO).unwrap();
        assert_eq!(s.leg(), 1);
        assert!((s.time_in_leg() - 0.05).abs() < 1e-15);
        assert_eq!(s.held_command(), cmd);
    }

    #[test]
    fn forty_steps_make_one_cycle() {
        let delta = 0.1;
        let dt = delta / 10.0;
        let mut s = MuxState::new(BracketCommand::ZERO, delta).unwrap();
        let mut latches = 0;
        let mut legs = Vec::new();
        for k in 0..40 {
            let next = BracketCommand::new(k as f64, 0.0, 0.0).unwrap();
            let before = s.held_command();
            s = s.advance(dt, next).unwrap();
            legs.push(s.leg());
            if s.held_command() != before {
                latches += 1;
            }
        }
        assert_eq!(s.leg(), 0);
        assert_eq!(s.time_in_leg(), 0.0);
        assert_eq!(latches, 1);
        assert_eq!(s.held_command().a1, 39.0);
        // Every leg lasts exactly ten steps.
        for leg in 0..4u8 {
            assert_eq!(legs.iter().filter(|&&l| l == leg).count(), 10);
        }
    }

    #[test]
    fn advance_rejects_oversized_step() {
        let s = MuxState::new(BracketCommand::ZERO, 0.1).unwrap();
        assert!(s.advance(0.2, BracketCommand::ZERO).is_err());
        assert!(s.advance(0.0, BracketCommand::ZERO).is_err());
    }

    #[test]
    fn drive_latches_only_at_cycle_start() {
        let delta = 0.1;
        let dt = 0.05;
        let mut s = MuxState::new(BracketCommand::ZERO, delta).unwrap();
        let first = BracketCommand::new(1.0, 0.0, 0.0).unwrap();
        let tick = s.drive(first, dt).unwrap();
        assert_eq!(tick.output.0, 1.0);
        s = tick.next;
        let later = BracketCommand::new(5.0, 0.0, 0.0).unwrap();
        for _ in 0..7 {
            let tick = s.drive(later, dt).unwrap();
            assert_eq!(tick.output.0, 1.0);
            assert_eq!(tick.held, first);
            s = tick.next;
        }
        assert!(s.at_cycle_start());
        let tick = s.drive(later, dt).unwrap();
        assert_eq!(tick.output.0, 5.0);
        assert_eq!(tick.held, later);
    }

    proptest! {
        #[test]
        fn cycle_average_equals_linear_part(
            a1 in -5.0..5.0f64,
            a2 in -5.0..5.0f64,
            a3 in -5.0..5.0f64,
            delta in 0.01..1.0f64,
        ) {
            let cmd = BracketCommand::new(a1, a2, a3).unwrap();
            let (mut s1, mut s2) = (0.0, 0.0);
            for leg in 0..4 {
                let (u1, u2) = MuxState::at_phase(cmd, delta, leg, 0.0).unwrap().output();
                s1 += u1;
                s2 += u2;
            }
            let scale = 1.0 + a3.abs() / delta;
            prop_assert!((s1 / 4.0 - a1).abs() < 1e-12 * scale.sqrt().max(1.0) * 10.0);
            prop_assert!((s2 / 4.0 - a2).abs() < 1e-12 * scale.sqrt().max(1.0) * 10.0);
        }

        #[test]
        fn alpha_squared_recovers_bracket_speed(a3 in -10.0..10.0f64, delta in 1e-3..1.0f64) {
            let p = cycle_params(&BracketCommand::new(0.0, 0.0, a3).unwrap(), delta).unwrap();
            prop_assert!((p.alpha * p.alpha * delta / 4.0 - a3.abs()).abs() <= 1e-12 * (1.0 + a3.abs()));
            prop_assert_eq!(p.alpha == 0.0, a3 == 0.0);
            prop_assert_eq!(f64::from(p.epsilon), if a3 == 0.0 { 0.0 } else { a3.signum() });
        }
    }
}
