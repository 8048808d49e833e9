//! Implicit time stepping for the coupled density pair.
//!
//! One step from level `n-1` to `n` solves, for each population `i`,
//!
//! ```text
//! (1/tau) (u_i,n - u_i,n-1, chi)_h + (diag(d_i) grad u_i,n, grad chi)
//!     + (F_i(u_1,n-1, u_2,n-1), chi)_h = 0
//! ```
//!
//! with the lumped product `(.,.)_h`, `d_1 = (c1, eps)`, `d_2 = (eps, c2)`.
//! The reaction is lagged, so each population update is a linear SPD
//! solve; a fixed-point loop repeats the update, re-evaluating the
//! reaction at the newest iterate, until the mass-weighted relative
//! change of the pair drops below `tol`. The first iterate uses the
//! previous time level, so a loop stopped after one pass is exactly the
//! semi-implicit scheme with explicit reaction.
//!
//! Both per-equation system matrices `diag(m)/tau + A_i` are assembled
//! and reduced once per run; they are SPD even for `eps = 0` because the
//! lumped mass diagonal is strictly positive.

use crate::assembly::{
    assemble_lumped_mass, assemble_stiffness, DirichletMap, LumpedMass, SymSparseMatrix,
};
use crate::error::{Error, Result};
use crate::linsolve::solve_spd;
use crate::mesh::Mesh;
use crate::model::{self, ModelParams, ShiftParams};
use std::fmt;
use std::str::FromStr;

/// Relative residual passed to the inner linear solves. Tighter than the
/// solver's own default: step-to-step error accumulation over thousands
/// of implicit steps must stay far below the 1e-10 symmetry and slice
/// comparisons made on converged states.
pub const STEP_LIN_REL_TOL: f64 = 1e-12;

/// Boundary-condition mode for the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcMode {
    /// Both densities vanish on the whole boundary.
    Dirichlet,
    /// Density `i` vanishes only on its own-axis faces (`x_i` in {0,1});
    /// conjugate faces carry the natural zero-flux condition.
    Mixed,
}

impl fmt::Display for BcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcMode::Dirichlet => write!(f, "dirichlet"),
            BcMode::Mixed => write!(f, "mixed"),
        }
    }
}

impl FromStr for BcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BcMode::Dirichlet),
            "mixed" => Ok(BcMode::Mixed),
            other => {
                Err(Error::invalid("bc", format!("expected 'dirichlet' or 'mixed', got '{other}'")))
            }
        }
    }
}

/// Stopping rule of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    /// Step until `t >= t_end`.
    FixedHorizon(f64),
    /// Step until the step-to-step relative change drops below `tol_s`.
    ToStationary,
}

/// Nodal density pair at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: f64,
}

impl FieldPair {
    pub fn new(u1: Vec<f64>, u2: Vec<f64>, t: f64) -> Self {
        assert_eq!(u1.len(), u2.len(), "density fields must have equal length");
        FieldPair { u1, u2, t }
    }

    /// Spatially constant pair at time zero.
    pub fn constant(mesh: &Mesh, u10: f64, u20: f64) -> Self {
        let n = mesh.node_count();
        FieldPair { u1: vec![u10; n], u2: vec![u20; n], t: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.u1.iter().chain(&self.u2).fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.u1.iter().chain(&self.u2).fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// Discretization and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Time step.
    pub tau: f64,
    /// Relative-change target of the in-step fixed-point loop.
    pub tol: f64,
    /// Relative-change target declaring a run stationary.
    pub tol_s: f64,
    /// Fixed-point iteration cap per step.
    pub max_picard: usize,
    /// Step cap for stationary runs.
    pub max_steps: usize,
    pub bc_mode: BcMode,
    pub run_mode: RunMode,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", format!("must lie in (0,1), got {}", self.tol)));
        }
        if !(self.tol_s > 0.0 && self.tol_s < 1.0) {
            return Err(Error::invalid("tol_s", format!("must lie in (0,1), got {}", self.tol_s)));
        }
        if self.max_picard == 0 {
            return Err(Error::invalid("max_picard", "must be at least 1".to_string()));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1".to_string()));
        }
        if let RunMode::FixedHorizon(t_end) = self.run_mode {
            if !(t_end > 0.0) {
                return Err(Error::invalid("t_end", format!("must be positive, got {t_end}")));
            }
        }
        Ok(())
    }
}

/// Pointwise reaction seen by the stepper.
///
/// Implementations may depend on time (shifted systems) and position
/// (manufactured sources) in addition to the local density pair.
pub trait ReactionTerm {
    fn eval(&self, t: f64, x1: f64, x2: f64, s1: f64, s2: f64) -> (f64, f64);
}

/// `F = 0`; isolates the linear diffusion part.
pub struct NoReaction;

impl ReactionTerm for NoReaction {
    fn eval(&self, _t: f64, _x1: f64, _x2: f64, _s1: f64, _s2: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

impl ReactionTerm for ModelParams {
    fn eval(&self, _t: f64, _x1: f64, _x2: f64, s1: f64, s2: f64) -> (f64, f64) {
        self.reaction_raw(s1, s2)
    }
}

/// Time-dependent shifted reaction; solving with it and rescaling the
/// result by `exp(lambda t)` reproduces the plain system.
pub struct ShiftedReaction<'a> {
    pub params: &'a ModelParams,
    pub shift: ShiftParams,
}

impl ReactionTerm for ShiftedReaction<'_> {
    fn eval(&self, t: f64, _x1: f64, _x2: f64, s1: f64, s2: f64) -> (f64, f64) {
        model::shifted_reaction(&self.shift, t, s1, s2, self.params)
    }
}

/// Dirichlet mask for one equation (`eq` is 0 or 1) under a mode.
pub fn constrained_nodes(mesh: &Mesh, bc_mode: BcMode, eq: usize) -> Vec<bool> {
    assert!(eq < 2, "equation index must be 0 or 1");
    mesh.boundary
        .iter()
        .map(|b| match bc_mode {
            BcMode::Dirichlet => b.on_boundary(),
            BcMode::Mixed => {
                if eq == 0 {
                    b.on_x1_boundary
                } else {
                    b.on_x2_boundary
                }
            }
        })
        .collect()
}

fn change_parts(
    a1: &[f64],
    a2: &[f64],
    b1: &[f64],
    b2: &[f64],
    mass: &LumpedMass,
) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &m) in mass.weights.iter().enumerate() {
        let d1 = a1[k] - b1[k];
        let d2 = a2[k] - b2[k];
        num += m * (d1 * d1 + d2 * d2);
        den += m * (b1[k] * b1[k] + b2[k] * b2[k]);
    }
    (num, den)
}

fn guarded_ratio(num_sq: f64, den_sq: f64) -> f64 {
    if den_sq == 0.0 {
        if num_sq == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num_sq / den_sq).sqrt()
    }
}

/// Mass-weighted relative change of `a` against reference `b`:
/// `sqrt(sum_i ||a_i - b_i||^2) / sqrt(sum_i ||b_i||^2)` in the lumped
/// norm. A zero reference yields the +infinity sentinel ("no scale to
/// compare against"), so thresholds can never be satisfied vacuously.
pub fn relative_change(a: &FieldPair, b: &FieldPair, mass: &LumpedMass) -> f64 {
    let (num_sq, den_sq) = change_parts(&a.u1, &a.u2, &b.u1, &b.u2, mass);
    if den_sq == 0.0 {
        f64::INFINITY
    } else {
        (num_sq / den_sq).sqrt()
    }
}

/// Diagnostics of one accepted time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Fixed-point iterations used (>= 1).
    pub picard_iterations: usize,
    /// Relative change between the last two fixed-point iterates
    /// (0 when the pair has vanished identically).
    pub last_relative_change: f64,
    /// Relative change of the accepted state against the previous time
    /// level (0 when both vanish); drives stationary detection.
    pub stationary_metric: f64,
    /// Conjugate-gradient iterations summed over the step.
    pub linear_iterations: usize,
}

/// Per-equation reduced systems, assembled once per run.
pub struct SystemMatrices {
    pub tau: f64,
    pub mass: LumpedMass,
    pub maps: [DirichletMap; 2],
    pub reduced: [SymSparseMatrix; 2],
    /// Relative residual target for the inner solves.
    pub lin_rel_tol: f64,
}

impl SystemMatrices {
    /// Assembles `diag(m)/tau + A_i` for both equations and eliminates
    /// the constrained nodes of the given boundary mode.
    pub fn build(mesh: &Mesh, params: &ModelParams, config: &SolverConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;

        let mass = assemble_lumped_mass(mesh);
        let scaled: Vec<f64> = mass.weights.iter().map(|m| m / config.tau).collect();

        let diffusion = [(params.c1, params.eps), (params.eps, params.c2)];
        let mut maps = Vec::with_capacity(2);
        let mut reduced = Vec::with_capacity(2);
        for (eq, &(d1, d2)) in diffusion.iter().enumerate() {
            let stiffness = assemble_stiffness(mesh, d1, d2)?;
            let system = stiffness.plus_diagonal(&scaled);
            let constrained = constrained_nodes(mesh, config.bc_mode, eq);
            let map = DirichletMap::new(&constrained)?;
            reduced.push(map.reduce_matrix(&system));
            maps.push(map);
        }
        let [map1, map2] = <[DirichletMap; 2]>::try_from(maps).unwrap();
        let [red1, red2] = <[SymSparseMatrix; 2]>::try_from(reduced).unwrap();
        Ok(SystemMatrices {
            tau: config.tau,
            mass,
            maps: [map1, map2],
            reduced: [red1, red2],
            lin_rel_tol: STEP_LIN_REL_TOL,
        })
    }

    /// Zeroes each density on its equation's constrained nodes.
    pub fn project(&self, state: &FieldPair) -> FieldPair {
        let u1 = self.maps[0].expand(&self.maps[0].reduce_vec(&state.u1));
        let u2 = self.maps[1].expand(&self.maps[1].reduce_vec(&state.u2));
        FieldPair { u1, u2, t: state.t }
    }
}

/// Advances the pair one time step; `step_index` only labels errors.
pub fn time_step(
    mesh: &Mesh,
    state: &FieldPair,
    systems: &SystemMatrices,
    reaction: &dyn ReactionTerm,
    config: &SolverConfig,
    step_index: usize,
) -> Result<(FieldPair, StepReport)> {
    let n = mesh.node_count();
    assert_eq!(state.len(), n, "state length must match mesh");
    let tau = systems.tau;
    let t_new = state.t + tau;
    let mass = &systems.mass.weights;

    let mut cur_u1 = state.u1.clone();
    let mut cur_u2 = state.u2.clone();
    let mut rhs1 = vec![0.0; n];
    let mut rhs2 = vec![0.0; n];
    let mut linear_iterations = 0usize;
    let mut last_change = f64::INFINITY;

    for k in 1..=config.max_picard {
        for a in 0..n {
            let (x1, x2) = mesh.coords[a];
            let (f1, f2) = reaction.eval(t_new, x1, x2, cur_u1[a], cur_u2[a]);
            rhs1[a] = mass[a] * (state.u1[a] / tau - f1);
            rhs2[a] = mass[a] * (state.u2[a] / tau - f2);
        }

        let b1 = systems.maps[0].reduce_vec(&rhs1);
        let (x1, rep1) = solve_spd(&systems.reduced[0], &b1, systems.lin_rel_tol)?;
        let b2 = systems.maps[1].reduce_vec(&rhs2);
        let (x2, rep2) = solve_spd(&systems.reduced[1], &b2, systems.lin_rel_tol)?;
        linear_iterations += rep1.iterations + rep2.iterations;

        let next_u1 = systems.maps[0].expand(&x1);
        let next_u2 = systems.maps[1].expand(&x2);

        let (num_sq, den_sq) = change_parts(&next_u1, &next_u2, &cur_u1, &cur_u2, &systems.mass);
        last_change = guarded_ratio(num_sq, den_sq);
        cur_u1 = next_u1;
        cur_u2 = next_u2;

        if last_change < config.tol {
            let next = FieldPair { u1: cur_u1, u2: cur_u2, t: t_new };
            let (sn, sd) = change_parts(&next.u1, &next.u2, &state.u1, &state.u2, &systems.mass);
            let report = StepReport {
                picard_iterations: k,
                last_relative_change: last_change,
                stationary_metric: guarded_ratio(sn, sd),
                linear_iterations,
            };
            return Ok((next, report));
        }
    }

    Err(Error::PicardDiverged {
        step: step_index,
        iterations: config.max_picard,
        last_change,
        tol: config.tol,
    })
}

/// Full trajectory of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// State at the final accepted step.
    pub state: FieldPair,
    /// One report per accepted step, in order.
    pub reports: Vec<StepReport>,
    /// Smallest nodal value seen over the whole run (both fields,
    /// initial state included). Negative values beyond roundoff indicate
    /// a positivity violation; they are reported, never clipped.
    pub min_value: f64,
    /// Largest nodal value seen over the whole run.
    pub max_value: f64,
}

impl RunOutput {
    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    pub fn total_picard(&self) -> usize {
        self.reports.iter().map(|r| r.picard_iterations).sum()
    }

    pub fn total_linear_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.linear_iterations).sum()
    }

    pub fn max_picard_per_step(&self) -> usize {
        self.reports.iter().map(|r| r.picard_iterations).max().unwrap_or(0)
    }

    pub fn last_stationary_metric(&self) -> f64 {
        self.reports.last().map(|r| r.stationary_metric).unwrap_or(f64::INFINITY)
    }
}

/// Runs the model reaction; see [`run_with_reaction`].
pub fn run(
    mesh: &Mesh,
    initial: &FieldPair,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<RunOutput> {
    run_with_reaction(mesh, initial, params, params, config)
}

/// Integrates from `initial` under the configured stopping rule.
///
/// The initial pair is first projected onto the boundary constraints.
/// Horizon runs take `ceil((t_end - t0) / tau)` steps; stationary runs
/// stop once the step-to-step relative change drops below `tol_s` (a
/// pair that is identically zero and stays so is stationary by
/// definition) and fail after `max_steps` otherwise.
pub fn run_with_reaction(
    mesh: &Mesh,
    initial: &FieldPair,
    params: &ModelParams,
    reaction: &dyn ReactionTerm,
    config: &SolverConfig,
) -> Result<RunOutput> {
    let systems = SystemMatrices::build(mesh, params, config)?;
    run_prepared(mesh, initial, &systems, reaction, config)
}

/// [`run_with_reaction`] against prebuilt systems.
pub fn run_prepared(
    mesh: &Mesh,
    initial: &FieldPair,
    systems: &SystemMatrices,
    reaction: &dyn ReactionTerm,
    config: &SolverConfig,
) -> Result<RunOutput> {
    config.validate()?;
    let mut state = systems.project(initial);
    let t0 = state.t;
    let mut min_value = state.min_value();
    let mut max_value = state.max_value();
    let mut reports = Vec::new();

    let horizon_steps = match config.run_mode {
        RunMode::FixedHorizon(t_end) => {
            // Integer step count, tolerant to roundoff in t_end / tau:
            // 10.000000000000002 must give 10 steps, 10.5 gives 11.
            let raw = (t_end - t0) / config.tau;
            Some(if raw <= 1e-9 { 0 } else { (raw - 1e-9).ceil() as usize })
        }
        RunMode::ToStationary => None,
    };

    let mut step_index = 0usize;
    loop {
        match horizon_steps {
            Some(total) => {
                if step_index >= total {
                    break;
                }
            }
            None => {
                if step_index >= config.max_steps {
                    return Err(Error::StationaryNotReached {
                        steps: step_index,
                        metric: reports
                            .last()
                            .map(|r: &StepReport| r.stationary_metric)
                            .unwrap_or(f64::INFINITY),
                        tol_s: config.tol_s,
                    });
                }
            }
        }

        step_index += 1;
        let (mut next, report) = time_step(mesh, &state, systems, reaction, config, step_index)?;
        // Rebuild t from the step count so long runs do not accumulate
        // additive roundoff.
        next.t = t0 + step_index as f64 * config.tau;
        min_value = min_value.min(next.min_value());
        max_value = max_value.max(next.max_value());
        state = next;
        reports.push(report);

        if horizon_steps.is_none() && report.stationary_metric < config.tol_s {
            break;
        }
    }

    Ok(RunOutput { state, reports, min_value, max_value })
}
