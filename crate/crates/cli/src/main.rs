use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lietdm_cli::builtins::{self, GROUPS, SINGLE};
use lietdm_cli::scenario::{MethodSpec, Scenario};
use lietdm_cli::verify::{self, DEFAULT_SUBSTEPS};
use lietdm_cli::{run_batch, write_run, CliError, Result};
use lietdm_core::dubins::dubins1_fields;
use lietdm_core::VectorField;
use nalgebra::{dmatrix, DVector};

#[derive(Parser)]
#[command(name = "lietdm", version, about = "Lie-bracket multiplexed control of Dubins cars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Euler,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyModel {
    /// First-order Dubins car.
    Dubins1,
    /// f = Ax, g = Bx with A = [[0,1],[0,0]], B = [[0,0],[1,0]].
    Linear,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or built-in (group) and write CSV + summary.
    Run {
        /// Path to a TOML scenario, or a built-in name (see `list-builtins`).
        target: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Leg duration; defaults to sqrt(dt).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        no_feedforward: bool,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Also write an SVG of the (x1, x2) path.
        #[arg(long)]
        svg: bool,
    },
    /// Check that one cycle moves the state by [f,g]·δ² + o(δ²).
    Verify {
        /// Strictly decreasing leg durations.
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025])]
        deltas: Vec<f64>,
        #[arg(long, value_enum, default_value = "dubins1")]
        model: VerifyModel,
        /// Initial state (comma separated); defaults to the origin.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Integration steps per leg.
        #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
        substeps: usize,
    },
    /// List built-in scenarios and groups.
    ListBuiltins,
}

fn load(target: &str) -> Result<Vec<Scenario>> {
    if let Some(s) = builtins::builtin(target) {
        return Ok(s);
    }
    let path = PathBuf::from(target);
    if !path.exists() {
        return Err(CliError::config(
            "target",
            format!("`{target}` is neither a file nor a built-in scenario"),
        ));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(vec![Scenario::from_toml(&text)?])
}

#[allow(clippy::too_many_arguments)]
fn run(
    target: &str,
    out_dir: PathBuf,
    dt: Option<f64>,
    t_end: Option<f64>,
    delta: Option<f64>,
    no_feedforward: bool,
    method: Option<MethodArg>,
    svg: bool,
) -> Result<()> {
    let mut scenarios = load(target)?;
    for s in &mut scenarios {
        if let Some(dt) = dt {
            s.sim.dt = dt;
        }
        if let Some(t) = t_end {
            s.sim.t_end = t;
        }
        if delta.is_some() {
            s.delta = delta;
        }
        if no_feedforward {
            s.feedforward = false;
        }
        match method {
            Some(MethodArg::Euler) => s.sim.method = MethodSpec::Euler,
            Some(MethodArg::Rk4) => s.sim.method = MethodSpec::Rk4,
            None => {}
        }
        s.validate()?;
    }

    let mut first_error = None;
    for (s, result) in scenarios.iter().zip(run_batch(&scenarios)) {
        let out = match result {
            Ok(out) => out,
            Err(e) => {
                eprintln!("{}: {e}", s.name);
                first_error.get_or_insert(e);
                continue;
            }
        };
        let files = write_run(&out, &out_dir, svg)?;
        let sm = &out.summary;
        let d = &sm.net_displacement;
        println!(
            "{}: displacement ({:.4}, {:.4}) |{:.4}|, heading change {:.4} rad -> {}",
            sm.name,
            d[0],
            d[1],
            d[0].hypot(d[1]),
            d[2],
            files.csv.display()
        );
        if sm.delta.rounded {
            println!(
                "  delta {:.6} rounded to {:.6} ({} steps per leg)",
                sm.delta.requested, sm.delta.effective, sm.delta.steps_per_leg
            );
        }
        if let Some(tr) = &sm.tracking {
            println!(
                "  tracking after t = {}: position {:.4} m, heading {:.4} rad",
                tr.tail_start, tr.tail_position_error, tr.tail_heading_error
            );
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn verify_cmd(deltas: &[f64], model: VerifyModel, x0: Option<Vec<f64>>, substeps: usize) -> Result<()> {
    let (f, g): (VectorField, VectorField) = match model {
        VerifyModel::Dubins1 => dubins1_fields(),
        VerifyModel::Linear => (
            VectorField::linear("A", dmatrix![0.0, 1.0; 0.0, 0.0]),
            VectorField::linear("B", dmatrix![0.0, 0.0; 1.0, 0.0]),
        ),
    };
    let x0 = match x0 {
        Some(v) if v.len() == f.dim() => DVector::from_vec(v),
        Some(v) => {
            return Err(CliError::config(
                "x0",
                format!("expected {} components, got {}", f.dim(), v.len()),
            ))
        }
        None if matches!(model, VerifyModel::Linear) => DVector::from_element(2, 1.0),
        None => DVector::zeros(f.dim()),
    };
    let table = verify::verify_convergence(&f, &g, &x0, deltas, substeps)?;
    println!("{table}");
    if table.passes() {
        println!("PASS");
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "error not strictly decreasing or slope {:.3} below {}",
            table.fitted_slope,
            verify::MIN_SLOPE
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            target,
            out_dir,
            dt,
            t_end,
            delta,
            no_feedforward,
            method,
            svg,
        } => run(&target, out_dir, dt, t_end, delta, no_feedforward, method, svg),
        Command::Verify {
            deltas,
            model,
            x0,
            substeps,
        } => verify_cmd(&deltas, model, x0, substeps),
        Command::ListBuiltins => {
            for (name, about) in SINGLE.iter().chain(GROUPS) {
                println!("{name:<24} {about}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
