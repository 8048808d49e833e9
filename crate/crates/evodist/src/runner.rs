//! Experiment orchestration: a flat run configuration, the three named
//! parameter presets, the regularization sweep with its zone-wise
//! difference metrics, and boundary-layer width measurement.

use crate::error::{Error, Result};
use crate::mesh::{build_structured_mesh, Mesh};
use crate::model::{Convention, ModelParams};
use crate::stepper::{run, BcMode, FieldPair, RunMode, RunOutput, SolverConfig};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

/// How a configured run decides it is finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    /// Step until the relative change across a time step drops below
    /// `tol_s`.
    Stationary,
    /// Step until `t_end`.
    Horizon,
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunKind::Stationary => write!(f, "stationary"),
            RunKind::Horizon => write!(f, "horizon"),
        }
    }
}

impl FromStr for RunKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(RunKind::Stationary),
            "horizon" => Ok(RunKind::Horizon),
            other => Err(Error::invalid(
                "run_mode",
                format!("expected 'stationary' or 'horizon', got '{other}'"),
            )),
        }
    }
}

/// Complete description of one run: grid, stepping, model, initial data,
/// and termination. This is exactly the set of keys the on-disk config
/// format carries.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub nx: usize,
    pub ny: usize,
    pub tau: f64,
    pub tol: f64,
    pub tol_s: f64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta11: f64,
    pub beta12: f64,
    pub beta21: f64,
    pub beta22: f64,
    pub bc: BcMode,
    pub convention: Convention,
    pub u10: f64,
    pub u20: f64,
    pub run_mode: RunKind,
    pub t_end: f64,
    pub max_picard: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// The reference parameter set: 30x30 grid, tau = 1e-3, equal
    /// diffusion 0.1, logistic competition, constant initial densities
    /// 0.5, zero boundary values on all faces, run to stationarity.
    fn default() -> Self {
        ExperimentConfig {
            nx: 30,
            ny: 30,
            tau: 1e-3,
            tol: 1e-3,
            tol_s: 1e-5,
            eps: 0.0,
            c1: 0.1,
            c2: 0.1,
            alpha1: 5.0,
            alpha2: 4.0,
            beta11: 3.0,
            beta12: 2.0,
            beta21: 2.0,
            beta22: 2.0,
            bc: BcMode::Dirichlet,
            convention: Convention::Logistic,
            u10: 0.5,
            u20: 0.5,
            run_mode: RunKind::Stationary,
            t_end: 1.0,
            max_picard: 50,
            max_steps: 1_000_000,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            c1: self.c1,
            c2: self.c2,
            eps: self.eps,
            alpha: [self.alpha1, self.alpha2],
            beta: [[self.beta11, self.beta12], [self.beta21, self.beta22]],
            convention: self.convention,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tau: self.tau,
            tol: self.tol,
            tol_s: self.tol_s,
            max_picard: self.max_picard,
            max_steps: self.max_steps,
            bc_mode: self.bc,
            run_mode: match self.run_mode {
                RunKind::Stationary => RunMode::ToStationary,
                RunKind::Horizon => RunMode::FixedHorizon(self.t_end),
            },
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        build_structured_mesh(self.nx, self.ny)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::invalid(
                "nx",
                format!("grid needs at least 2 points per axis, got {}x{}", self.nx, self.ny),
            ));
        }
        self.model_params().validate()?;
        self.solver_config().validate()?;
        if !(self.u10 >= 0.0 && self.u10.is_finite()) {
            return Err(Error::invalid(
                "u10",
                format!("initial density must be finite and nonnegative, got {}", self.u10),
            ));
        }
        if !(self.u20 >= 0.0 && self.u20.is_finite()) {
            return Err(Error::invalid(
                "u20",
                format!("initial density must be finite and nonnegative, got {}", self.u20),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(
                "t_end",
                format!("must be finite and positive, got {}", self.t_end),
            ));
        }
        Ok(())
    }
}

/// Named parameter presets.
///
/// 1. Unequal diffusion (0.1 vs 0.01), zero boundary values everywhere.
/// 2. Equal diffusion 0.1, zero boundary values everywhere.
/// 3. Base configuration for the regularization sweep; the sweep itself
///    varies `eps` over [`SWEEP_EPS`] and the boundary handling over
///    [`SWEEP_BC`].
pub fn experiment_preset(number: usize) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    match number {
        1 => config.c2 = 0.01,
        2 | 3 => {}
        _ => {
            return Err(Error::invalid(
                "experiment",
                format!("known experiments are 1, 2 and 3, got {number}"),
            ))
        }
    }
    Ok(config)
}

/// Regularization strengths exercised by the third experiment.
pub const SWEEP_EPS: [f64; 3] = [0.1, 0.01, 1e-10];
/// Boundary variants exercised by the third experiment.
pub const SWEEP_BC: [BcMode; 2] = [BcMode::Dirichlet, BcMode::Mixed];

/// A finished run together with everything needed to inspect it.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub mesh: Mesh,
    pub output: RunOutput,
    pub wall_time: Duration,
}

/// Builds the mesh, starts from the constant pair `(u10, u20)`, and runs
/// to the configured termination.
pub fn run_configured(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let mesh = config.build_mesh()?;
    let params = config.model_params();
    let solver = config.solver_config();
    let initial = FieldPair::constant(&mesh, config.u10, config.u20);
    let start = Instant::now();
    let output = run(&mesh, &initial, &params, &solver)?;
    let wall_time = start.elapsed();
    Ok(RunResult { config: config.clone(), mesh, output, wall_time })
}

/// Grid lines of clearance from the conjugate faces beyond which a node
/// counts as interior for the zone metrics.
const BAND_CELLS: usize = 2;

/// Largest nodal differences between two pair states, split by zone.
/// Each field is compared against its own conjugate faces: the first
/// field near the x2 faces, the second near the x1 faces. `interior`
/// covers nodes at least [`BAND_CELLS`] grid lines away from those
/// faces, `band` the rest, `global` everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffMetrics {
    pub global_linf: f64,
    pub interior_linf: f64,
    pub band_linf: f64,
}

pub fn diff_metrics(a: &FieldPair, b: &FieldPair, mesh: &Mesh) -> DiffMetrics {
    let n = mesh.node_count();
    assert_eq!(a.len(), n, "first state does not match the mesh");
    assert_eq!(b.len(), n, "second state does not match the mesh");

    let mut global: f64 = 0.0;
    let mut interior: f64 = 0.0;
    let mut band: f64 = 0.0;
    for j in 0..mesh.ny {
        for i in 0..mesh.nx {
            let k = mesh.node_index(i, j);
            let d1 = (a.u1[k] - b.u1[k]).abs();
            let d2 = (a.u2[k] - b.u2[k]).abs();
            global = global.max(d1).max(d2);
            let inner1 = j >= BAND_CELLS && j + BAND_CELLS <= mesh.ny - 1;
            let inner2 = i >= BAND_CELLS && i + BAND_CELLS <= mesh.nx - 1;
            if inner1 {
                interior = interior.max(d1);
            } else {
                band = band.max(d1);
            }
            if inner2 {
                interior = interior.max(d2);
            } else {
                band = band.max(d2);
            }
        }
    }
    DiffMetrics { global_linf: global, interior_linf: interior, band_linf: band }
}

/// One sweep member: the regularization and boundary variant it ran
/// with, plus its distance from the degenerate reference.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub eps: f64,
    pub bc: BcMode,
    pub result: RunResult,
    pub diff: DiffMetrics,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// The degenerate limit everything is compared against: `eps = 0`
    /// with boundary values imposed only on each field's own faces.
    pub reference: RunResult,
    pub entries: Vec<SweepEntry>,
}

/// Runs the reference and every `(eps, bc)` combination from the two
/// lists, each from the same base configuration.
pub fn eps_sweep(
    base: &ExperimentConfig,
    eps_list: &[f64],
    bc_list: &[BcMode],
) -> Result<SweepResult> {
    if eps_list.is_empty() {
        return Err(Error::invalid("eps_list", "need at least one value".to_string()));
    }
    if bc_list.is_empty() {
        return Err(Error::invalid("bc_list", "need at least one value".to_string()));
    }
    for &eps in eps_list {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::invalid(
                "eps_list",
                format!("values must be finite and nonnegative, got {eps}"),
            ));
        }
    }

    let mut ref_config = base.clone();
    ref_config.eps = 0.0;
    ref_config.bc = BcMode::Mixed;
    let reference = run_configured(&ref_config)?;

    let mut entries = Vec::with_capacity(eps_list.len() * bc_list.len());
    for &eps in eps_list {
        for &bc in bc_list {
            let mut config = base.clone();
            config.eps = eps;
            config.bc = bc;
            let result = run_configured(&config)?;
            let diff = diff_metrics(&result.output.state, &reference.output.state, &reference.mesh);
            entries.push(SweepEntry { eps, bc, result, diff });
        }
    }
    Ok(SweepResult { reference, entries })
}

/// Width of the boundary layer a field develops along `axis`.
///
/// The field is sampled on the grid line running in direction `axis`
/// through the domain midpoint (even transverse dimensions average the
/// two central lines). The plateau is the sample at the line's center,
/// and the width on each side is the distance from the face to the first
/// node whose sample reaches `(1 - theta)` times the plateau; the larger
/// side is returned. Fails if the plateau is not positive.
pub fn boundary_layer_width(field: &[f64], mesh: &Mesh, axis: usize, theta: f64) -> Result<f64> {
    if axis > 1 {
        return Err(Error::invalid("axis", format!("must be 0 or 1, got {axis}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid("theta", format!("must lie in (0,1), got {theta}")));
    }
    if field.len() != mesh.node_count() {
        return Err(Error::invalid(
            "field",
            format!("has {} values for a mesh with {} nodes", field.len(), mesh.node_count()),
        ));
    }

    let (len, step) = if axis == 0 { (mesh.nx, mesh.h1()) } else { (mesh.ny, mesh.h2()) };
    let transverse = if axis == 0 { mesh.ny } else { mesh.nx };
    let value_at = |k: usize, t: usize| {
        let (i, j) = if axis == 0 { (k, t) } else { (t, k) };
        field[mesh.node_index(i, j)]
    };
    let line: Vec<f64> = (0..len)
        .map(|k| {
            if transverse % 2 == 1 {
                value_at(k, transverse / 2)
            } else {
                0.5 * (value_at(k, transverse / 2 - 1) + value_at(k, transverse / 2))
            }
        })
        .collect();

    let plateau = if len % 2 == 1 {
        line[len / 2]
    } else {
        0.5 * (line[len / 2 - 1] + line[len / 2])
    };
    if !(plateau > 0.0) {
        return Err(Error::invalid(
            "field",
            format!("plateau at the scan center must be positive, got {plateau}"),
        ));
    }

    let threshold = (1.0 - theta) * plateau;
    let low = line.iter().position(|&v| v >= threshold);
    let high = line.iter().rposition(|&v| v >= threshold);
    match (low, high) {
        (Some(lo), Some(hi)) => Ok(step * lo.max(len - 1 - hi) as f64),
        _ => Err(Error::invalid("field", "no sample reaches the plateau threshold".to_string())),
    }
}
