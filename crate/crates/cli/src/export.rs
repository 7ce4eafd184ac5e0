//! Trajectory CSV, summary JSON and SVG path output.
//!
//! CSV layout: header `t,x1,...,xn,u1,...,um[,a1,a2,a3]`, one row per
//! recorded sample, every value in scientific notation with 17 significant
//! digits, `\n` line endings.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lietdm_core::Trajectory;

use crate::error::{CliError, Result};
use crate::scenario::{RunOutput, Summary};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(traj: &Trajectory) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.state_dim()).map(|i| format!("x{i}")));
    header.extend((1..=traj.input_dim()).map(|i| format!("u{i}")));
    if traj.commands.is_some() {
        header.extend(["a1", "a2", "a3"].map(String::from));
    }
    header
}

pub fn write_csv<W: Write>(traj: &Trajectory, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(csv_header(traj))?;
    for k in 0..traj.len() {
        let mut row = vec![format_value(traj.times[k])];
        row.extend(traj.states[k].iter().map(|&v| format_value(v)));
        row.extend(traj.inputs[k].iter().map(|&v| format_value(v)));
        if let Some(cmds) = &traj.commands {
            row.extend(cmds[k].as_array().map(format_value));
        }
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn export_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(traj, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

/// A parsed CSV export: header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let header = reader
        .headers()
        .map_err(|e| csv_io(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_io(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

fn csv_io(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

/// Polyline of `(x1, x2)` in a viewBox fitted to the path.
pub fn svg_path(traj: &Trajectory) -> String {
    let pts: Vec<(f64, f64)> = traj.states.iter().map(|s| (s[0], s[1])).collect();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if pts.is_empty() {
        (xmin, xmax, ymin, ymax) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-6);
    let margin = 0.05 * span;
    let (x0, y0) = (xmin - margin, -(ymax + margin));
    let (w, h) = (xmax - xmin + 2.0 * margin, ymax - ymin + 2.0 * margin);
    let stroke = span / 400.0;
    let points: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.6},{:.6}", -y)).collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0:.6} {y0:.6} {w:.6} {h:.6}\" width=\"600\" height=\"600\">\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"{stroke:.6}\" points=\"{}\"/>\n\
         </svg>\n",
        points.join(" ")
    )
}

/// Files written for one run.
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes to JSON");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Writes `<name>.csv`, `<name>.summary.json` and optionally `<name>.svg`.
pub fn write_run(out: &RunOutput, dir: &Path, svg: bool) -> Result<WrittenFiles> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = &out.summary.name;
    let csv = dir.join(format!("{name}.csv"));
    export_csv(&out.trajectory, &csv)?;
    let summary = dir.join(format!("{name}.summary.json"));
    write_summary(&out.summary, &summary)?;
    let svg = if svg {
        let path = dir.join(format!("{name}.svg"));
        fs::write(&path, svg_path(&out.trajectory)).map_err(|e| CliError::io(&path, e))?;
        Some(path)
    } else {
        None
    };
    Ok(WrittenFiles { csv, summary, svg })
}
