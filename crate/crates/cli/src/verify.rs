//! Numerical check of the per-cycle displacement law.
//!
//! One cycle of `{(1,0), (0,1), (−1,0), (0,−1)}` with leg duration `δ`
//! moves a driftless system by `[f, g](x₀)·δ² + o(δ²)`. For a decreasing
//! list of `δ` the normalized error `‖Δx − [f,g](x₀)δ²‖ / δ²` must shrink,
//! with a log-log slope of at least [`MIN_SLOPE`].

use std::fmt;

use lietdm_core::vectorfield::DEFAULT_STEP;
use lietdm_core::{lie_bracket, simulate, Actuation, BracketCommand, Method, MuxState, SimConfig, VectorField};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const MIN_SLOPE: f64 = 0.9;
/// Integration steps per leg.
pub const DEFAULT_SUBSTEPS: usize = 100;

/// `ẋ = f(x)·u₁ + g(x)·u₂`.
pub fn driftless(f: &VectorField, g: &VectorField) -> impl Fn(&DVector<f64>, &[f64]) -> DVector<f64> {
    let (f, g) = (f.clone(), g.clone());
    move |x, u| f.call(x) * u[0] + g.call(x) * u[1]
}

/// Net displacement after one multiplexed cycle of `cmd` from `x0`.
pub fn cycle_displacement(
    f: &VectorField,
    g: &VectorField,
    x0: &DVector<f64>,
    cmd: BracketCommand,
    delta: f64,
    substeps: usize,
    method: Method,
) -> Result<DVector<f64>> {
    if substeps == 0 {
        return Err(CliError::config("substeps", "must be positive"));
    }
    let dt = delta / substeps as f64;
    let config = SimConfig {
        dt,
        t_end: 4.0 * delta,
        method,
        record_stride: 4 * substeps,
    };
    let traj = simulate(
        driftless(f, g),
        |_, _, mux: &MuxState| {
            let tick = mux.drive(cmd, dt)?;
            Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next))
        },
        MuxState::new(cmd, delta)?,
        x0.clone(),
        &config,
    )?;
    let last = traj.last_state().expect("initial state is recorded");
    Ok(last - x0)
}

/// The command whose cycle is the unit sequence: `α = 1`, `ε = +1`.
pub fn unit_cycle_command(delta: f64) -> BracketCommand {
    BracketCommand {
        a1: 0.0,
        a2: 0.0,
        a3: delta / 4.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub displacement: Vec<f64>,
    pub predicted: Vec<f64>,
    pub normalized_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slopes between consecutive rows.
    pub slopes: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(δ)`.
    pub fitted_slope: f64,
}

impl ConvergenceTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].normalized_error < w[0].normalized_error)
    }

    pub fn passes(&self) -> bool {
        self.strictly_decreasing() && self.fitted_slope >= MIN_SLOPE
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12}  {:>14}  {:>8}", "delta", "norm_error", "slope")?;
        for (i, row) in self.rows.iter().enumerate() {
            let slope = if i == 0 {
                "-".to_string()
            } else {
                format!("{:.3}", self.slopes[i - 1])
            };
            writeln!(f, "{:>12.6}  {:>14.6e}  {:>8}", row.delta, row.normalized_error, slope)?;
        }
        write!(f, "fitted slope {:.4} (required >= {MIN_SLOPE})", self.fitted_slope)
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs one unit cycle per `δ` and tabulates the normalized error.
pub fn verify_convergence(
    f: &VectorField,
    g: &VectorField,
    x0: &DVector<f64>,
    deltas: &[f64],
    substeps: usize,
) -> Result<ConvergenceTable> {
    if deltas.len() < 2 {
        return Err(CliError::config("deltas", "need at least two values"));
    }
    if deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(CliError::config("deltas", "values must be positive"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::config("deltas", "values must be strictly decreasing"));
    }
    let bracket = lie_bracket(f, g, x0, DEFAULT_STEP)?;

    let rows = deltas
        .iter()
        .map(|&delta| {
            let dx = cycle_displacement(f, g, x0, unit_cycle_command(delta), delta, substeps, Method::Rk4)?;
            let predicted = &bracket * (delta * delta);
            Ok(ConvergenceRow {
                delta,
                normalized_error: (&dx - &predicted).norm() / (delta * delta),
                displacement: dx.iter().copied().collect(),
                predicted: predicted.iter().copied().collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if let Some(row) = rows.iter().find(|r| r.normalized_error.is_nan() || r.normalized_error <= 0.0) {
        return Err(CliError::Verification(format!(
            "normalized error is {} at delta = {}; slope undefined",
            row.normalized_error, row.delta
        )));
    }
    let log_d: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
    let log_e: Vec<f64> = rows.iter().map(|r| r.normalized_error.ln()).collect();
    let slopes = log_d
        .windows(2)
        .zip(log_e.windows(2))
        .map(|(d, e)| (e[1] - e[0]) / (d[1] - d[0]))
        .collect();
    Ok(ConvergenceTable {
        fitted_slope: least_squares_slope(&log_d, &log_e),
        rows,
        slopes,
    })
}
