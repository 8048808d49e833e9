//! On-disk formats: run configuration files, nodal snapshots, and run
//! summaries.
//!
//! Config files are flat `key = value` text with `#` comments. Every key
//! has a default, unknown and repeated keys are rejected with their line
//! number, and serializing uses the shortest decimal that parses back to
//! the same float, so a serialize/parse round trip is exact.
//!
//! Snapshots are CSV with a fixed header and nine significant digits per
//! column, emitted in node order; writing the same state twice yields
//! identical bytes.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::Convention;
use crate::runner::{ExperimentConfig, RunKind, RunResult};
use crate::stepper::{BcMode, FieldPair};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

/// Parses config text into a full configuration; keys that do not appear
/// keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("expected 'key = value', got '{content}'"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
        apply_key(&mut config, key, value)
            .map_err(|message| Error::ConfigParse { line: line_no, message })?;
    }
    Ok(config)
}

fn apply_key(
    config: &mut ExperimentConfig,
    key: &str,
    value: &str,
) -> std::result::Result<(), String> {
    fn float(key: &str, value: &str) -> std::result::Result<f64, String> {
        value.parse().map_err(|_| format!("invalid number for '{key}': '{value}'"))
    }
    fn count(key: &str, value: &str) -> std::result::Result<usize, String> {
        value.parse().map_err(|_| format!("invalid integer for '{key}': '{value}'"))
    }

    match key {
        "nx" => config.nx = count(key, value)?,
        "ny" => config.ny = count(key, value)?,
        "tau" => config.tau = float(key, value)?,
        "tol" => config.tol = float(key, value)?,
        "tol_s" => config.tol_s = float(key, value)?,
        "eps" => config.eps = float(key, value)?,
        "c1" => config.c1 = float(key, value)?,
        "c2" => config.c2 = float(key, value)?,
        "alpha1" => config.alpha1 = float(key, value)?,
        "alpha2" => config.alpha2 = float(key, value)?,
        "beta11" => config.beta11 = float(key, value)?,
        "beta12" => config.beta12 = float(key, value)?,
        "beta21" => config.beta21 = float(key, value)?,
        "beta22" => config.beta22 = float(key, value)?,
        "bc" => config.bc = value.parse::<BcMode>().map_err(|e| e.to_string())?,
        "convention" => {
            config.convention = value.parse::<Convention>().map_err(|e| e.to_string())?
        }
        "u10" => config.u10 = float(key, value)?,
        "u20" => config.u20 = float(key, value)?,
        "run_mode" => config.run_mode = value.parse::<RunKind>().map_err(|e| e.to_string())?,
        "t_end" => config.t_end = float(key, value)?,
        "max_picard" => config.max_picard = count(key, value)?,
        "max_steps" => config.max_steps = count(key, value)?,
        "seed" => {
            config.seed =
                value.parse().map_err(|_| format!("invalid integer for '{key}': '{value}'"))?
        }
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Renders a configuration in canonical key order. Floats use the
/// shortest representation that parses back bit-identically.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    writeln!(out, "nx = {}", config.nx).unwrap();
    writeln!(out, "ny = {}", config.ny).unwrap();
    writeln!(out, "tau = {}", config.tau).unwrap();
    writeln!(out, "tol = {}", config.tol).unwrap();
    writeln!(out, "tol_s = {}", config.tol_s).unwrap();
    writeln!(out, "eps = {}", config.eps).unwrap();
    writeln!(out, "c1 = {}", config.c1).unwrap();
    writeln!(out, "c2 = {}", config.c2).unwrap();
    writeln!(out, "alpha1 = {}", config.alpha1).unwrap();
    writeln!(out, "alpha2 = {}", config.alpha2).unwrap();
    writeln!(out, "beta11 = {}", config.beta11).unwrap();
    writeln!(out, "beta12 = {}", config.beta12).unwrap();
    writeln!(out, "beta21 = {}", config.beta21).unwrap();
    writeln!(out, "beta22 = {}", config.beta22).unwrap();
    writeln!(out, "bc = {}", config.bc).unwrap();
    writeln!(out, "convention = {}", config.convention).unwrap();
    writeln!(out, "u10 = {}", config.u10).unwrap();
    writeln!(out, "u20 = {}", config.u20).unwrap();
    writeln!(out, "run_mode = {}", config.run_mode).unwrap();
    writeln!(out, "t_end = {}", config.t_end).unwrap();
    writeln!(out, "max_picard = {}", config.max_picard).unwrap();
    writeln!(out, "max_steps = {}", config.max_steps).unwrap();
    writeln!(out, "seed = {}", config.seed).unwrap();
    out
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config(&text)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

const SNAPSHOT_HEADER: &str = "x1,x2,u1,u2";

/// Renders the pair state as CSV, one row per node in node order.
pub fn snapshot_csv(mesh: &Mesh, state: &FieldPair) -> String {
    assert_eq!(state.len(), mesh.node_count(), "state does not match the mesh");
    let mut out = String::with_capacity(16 + 64 * mesh.node_count());
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for k in 0..mesh.node_count() {
        let (x1, x2) = mesh.coords[k];
        writeln!(out, "{:.8e},{:.8e},{:.8e},{:.8e}", x1, x2, state.u1[k], state.u2[k]).unwrap();
    }
    out
}

pub fn write_snapshot(path: impl AsRef<Path>, mesh: &Mesh, state: &FieldPair) -> Result<()> {
    write_text(path, &snapshot_csv(mesh, state))
}

/// Columns of a parsed snapshot, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl SnapshotData {
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }
}

pub fn parse_snapshot(text: &str) -> Result<SnapshotData> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == SNAPSHOT_HEADER => {}
        Some(header) => {
            return Err(Error::SnapshotParse {
                line: 1,
                message: format!("expected header '{SNAPSHOT_HEADER}', got '{header}'"),
            })
        }
        None => {
            return Err(Error::SnapshotParse { line: 1, message: "file is empty".to_string() })
        }
    }

    let mut data =
        SnapshotData { x1: Vec::new(), x2: Vec::new(), u1: Vec::new(), u2: Vec::new() };
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let mut row = [0.0; 4];
        let mut fields = line.split(',');
        for slot in row.iter_mut() {
            let field = fields.next().ok_or_else(|| Error::SnapshotParse {
                line: line_no,
                message: format!("expected 4 comma-separated values, got '{line}'"),
            })?;
            *slot = field.trim().parse().map_err(|_| Error::SnapshotParse {
                line: line_no,
                message: format!("invalid number '{}'", field.trim()),
            })?;
        }
        if fields.next().is_some() {
            return Err(Error::SnapshotParse {
                line: line_no,
                message: format!("expected 4 comma-separated values, got '{line}'"),
            });
        }
        data.x1.push(row[0]);
        data.x2.push(row[1]);
        data.u1.push(row[2]);
        data.u2.push(row[3]);
    }
    Ok(data)
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<SnapshotData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_snapshot(&text)
}

fn field_stats(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// Renders a run report: the exact configuration it ran with, followed
/// by counters and field statistics, all as `key = value` lines.
pub fn summary_text(result: &RunResult) -> String {
    let mass = crate::assembly::assemble_lumped_mass(&result.mesh);
    let output = &result.output;
    let (u1_min, u1_max) = field_stats(&output.state.u1);
    let (u2_min, u2_max) = field_stats(&output.state.u2);

    let mut out = String::from("# configuration\n");
    out.push_str(&serialize_config(&result.config));
    out.push_str("# results\n");
    writeln!(out, "steps = {}", output.steps()).unwrap();
    writeln!(out, "picard_total = {}", output.total_picard()).unwrap();
    writeln!(out, "picard_max_per_step = {}", output.max_picard_per_step()).unwrap();
    writeln!(out, "linear_iterations_total = {}", output.total_linear_iterations()).unwrap();
    writeln!(out, "wall_time_s = {}", result.wall_time.as_secs_f64()).unwrap();
    writeln!(out, "t_final = {}", output.state.t).unwrap();
    writeln!(out, "stationary_metric = {}", output.last_stationary_metric()).unwrap();
    writeln!(out, "u1_min = {}", u1_min).unwrap();
    writeln!(out, "u1_max = {}", u1_max).unwrap();
    writeln!(out, "u1_mass = {}", mass.integral(&output.state.u1)).unwrap();
    writeln!(out, "u2_min = {}", u2_min).unwrap();
    writeln!(out, "u2_max = {}", u2_max).unwrap();
    writeln!(out, "u2_mass = {}", mass.integral(&output.state.u2)).unwrap();
    writeln!(out, "run_min_value = {}", output.min_value).unwrap();
    writeln!(out, "run_max_value = {}", output.max_value).unwrap();
    out
}
