//! Result reports, JSON with 17 significant digits, and per-node field CSV.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::algebra3::{log_so3_unchecked, Mat3};
use crate::config::CaseConfig;
use crate::kinematics::Configuration;
use crate::solver::{SolveResult, SolveStatus};
use crate::surface::ReferenceSurface;

/// Pretty JSON formatter printing every float as `d.ddddddddddddddddde±x`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types serialize without error");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    std::fs::write(path, to_json(value))
}

/// Largest transverse displacement `|(y − y⁰)·n⁰|`.
pub fn max_deflection(cfg: &Configuration, surf: &ReferenceSurface) -> f64 {
    cfg.y.iter().zip(&surf.nodes).map(|(y, g)| (*y - g.y0).dot(&g.normal).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: CaseConfig,
    pub status: SolveStatus,
    pub converged: bool,
    pub iterations: usize,
    pub functional: f64,
    pub strain_energy: f64,
    pub initial_gradient_norm: f64,
    pub gradient_norm: f64,
    pub relative_gradient_norm: f64,
    pub max_orthogonality_residual: f64,
    pub max_deflection: f64,
    pub max_membrane_strain: f64,
    pub energy_history: Vec<f64>,
    /// Seconds spent in the minimizer.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn new(config: &CaseConfig, result: &SolveResult, surf: &ReferenceSurface, wall_time: f64) -> SolveReport {
        SolveReport {
            config: config.clone(),
            status: result.status,
            converged: result.converged(),
            iterations: result.iterations,
            functional: result.functional,
            strain_energy: result.strain_energy,
            initial_gradient_norm: result.initial_gradient_norm,
            gradient_norm: result.gradient_norm,
            relative_gradient_norm: if result.initial_gradient_norm > 0.0 {
                result.gradient_norm / result.initial_gradient_norm
            } else {
                0.0
            },
            max_orthogonality_residual: result.max_orthogonality_residual,
            max_deflection: max_deflection(&result.config, surf),
            max_membrane_strain: result.strain.max_membrane_norm(),
            energy_history: result.energy_history.clone(),
            wall_time,
        }
    }
}

const TENSORS: [&str; 4] = ["E", "K", "N", "M"];

/// Column names of the fields CSV, in order.
pub fn field_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["x1", "x2", "y1", "y2", "y3", "w1", "w2", "w3"].iter().map(|s| s.to_string()).collect();
    for t in TENSORS {
        for i in 1..=3 {
            for j in 1..=3 {
                cols.push(format!("{t}{i}{j}"));
            }
        }
    }
    cols
}

/// One row per node: parameters, position, rotation vector `log R`, then
/// `E^e`, `K^e`, `N`, `M` row by row.
pub fn write_fields_csv(path: &Path, surf: &ReferenceSurface, result: &SolveResult) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(field_columns())?;
    for node in 0..surf.len() {
        let g = &surf.nodes[node];
        let s = &result.strain.nodes[node];
        let (n, m) = &result.resultants[node];
        let mut row: Vec<f64> = vec![g.x[0], g.x[1]];
        row.extend(result.config.y[node].0);
        row.extend(log_so3_unchecked(&result.config.r[node]).0);
        for t in [&s.e, &s.k, n, m] {
            row.extend(Mat3::to_array(t));
        }
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}
