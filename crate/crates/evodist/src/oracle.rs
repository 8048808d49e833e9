//! Verification oracles: manufactured solutions and an independent 1D
//! slice solver.
//!
//! Manufactured runs integrate the standard scheme with the reaction
//! replaced by `F_i - g_i`, where the source `g_i` is chosen so a known
//! closed-form pair solves the continuous system exactly. Refining
//! `h -> h/2` with `tau` proportional to `h^2` then exposes the spatial
//! convergence order.
//!
//! The slice solver integrates the decoupled 1D limit (no conjugate
//! regularization, no cross-competition) with its own grid, lumped mass,
//! tridiagonal elimination, and fixed-point loop. It shares nothing with
//! the 2D assembly or the conjugate-gradient solver, so agreement
//! between the two paths is evidence, not tautology.

use crate::error::{Error, Result};
use crate::mesh::{build_structured_mesh, Mesh};
use crate::model::{Convention, ModelParams};
use crate::stepper::{
    run_with_reaction, BcMode, FieldPair, ReactionTerm, RunMode, SolverConfig,
};
use std::f64::consts::PI;

/// Final horizon for transient manufactured runs.
const MMS_T_END: f64 = 0.2;
/// Time step at the coarsest level (nx = 5); quartered per level.
const MMS_TAU0: f64 = 0.05;
/// Fixed-point tolerance for manufactured runs, tight enough that the
/// measured error is pure discretization error.
const MMS_TOL: f64 = 1e-10;
/// Fixed-point iteration cap inside the slice solver.
const SLICE_MAX_PICARD: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CaseKind {
    /// Own-axis sine times a flux-free conjugate profile; mixed mode.
    SineMixed,
    /// Product of sines vanishing on the whole boundary; full Dirichlet.
    SineDirichlet,
    /// Steady fields from a source linear in each own coordinate; the
    /// nodal solution is exact up to solver tolerance.
    LinearSource,
}

/// A manufactured problem: closed-form target pair, matching source, and
/// the diffusion/reaction parameters it is built for.
#[derive(Debug, Clone)]
pub struct MmsCase {
    pub params: ModelParams,
    pub bc_mode: BcMode,
    kind: CaseKind,
}

impl MmsCase {
    /// Mixed-mode sine case: `u_i = exp(-t) amp_i sin(pi x_i)
    /// (1 + cos(pi x_j) / 2)`. Vanishes on the own-axis faces and has
    /// zero conjugate flux, so any `eps >= 0` is admissible.
    pub fn sine_mixed(params: ModelParams) -> Result<MmsCase> {
        params.validate()?;
        Ok(MmsCase { params, bc_mode: BcMode::Mixed, kind: CaseKind::SineMixed })
    }

    /// Dirichlet sine case: `u_i = exp(-t) amp_i sin(pi x1) sin(pi x2)`,
    /// vanishing on the whole boundary.
    pub fn sine_dirichlet(params: ModelParams) -> Result<MmsCase> {
        params.validate()?;
        Ok(MmsCase { params, bc_mode: BcMode::Dirichlet, kind: CaseKind::SineDirichlet })
    }

    /// Steady case with sources `g = (x1, x2)` and exact fields
    /// `u_i = (x_i - x_i^3) / (6 c_i)`, reaction-free and degenerate
    /// (`eps = 0`, mixed mode). On this family the lumped load equals
    /// the consistent one and the grid values of the discrete steady
    /// state coincide with the exact solution, so the only error left is
    /// solver tolerance.
    pub fn linear_source(c1: f64, c2: f64) -> Result<MmsCase> {
        let params = ModelParams {
            c1,
            c2,
            eps: 0.0,
            alpha: [0.0, 0.0],
            beta: [[0.0, 0.0], [0.0, 0.0]],
            convention: Convention::Logistic,
        };
        params.validate()?;
        Ok(MmsCase { params, bc_mode: BcMode::Mixed, kind: CaseKind::LinearSource })
    }

    /// True if the target fields do not depend on time.
    pub fn is_steady(&self) -> bool {
        self.kind == CaseKind::LinearSource
    }

    /// Amplitudes of the two target fields (distinct, so the pair is not
    /// accidentally symmetric).
    fn amplitude(eq: usize) -> f64 {
        if eq == 0 {
            1.0
        } else {
            0.75
        }
    }

    /// Target field `u_eq` at `(t, x1, x2)`; `eq` is 0 or 1.
    pub fn exact(&self, eq: usize, t: f64, x1: f64, x2: f64) -> f64 {
        assert!(eq < 2);
        let amp = Self::amplitude(eq);
        let (own, conj) = if eq == 0 { (x1, x2) } else { (x2, x1) };
        match self.kind {
            CaseKind::SineMixed => {
                amp * (-t).exp() * (PI * own).sin() * (1.0 + 0.5 * (PI * conj).cos())
            }
            CaseKind::SineDirichlet => amp * (-t).exp() * (PI * x1).sin() * (PI * x2).sin(),
            CaseKind::LinearSource => {
                let c = if eq == 0 { self.params.c1 } else { self.params.c2 };
                (own - own * own * own) / (6.0 * c)
            }
        }
    }

    /// Nodal interpolant of the target pair at time `t`.
    pub fn exact_pair(&self, mesh: &Mesh, t: f64) -> FieldPair {
        let u1 = mesh.coords.iter().map(|&(x, y)| self.exact(0, t, x, y)).collect();
        let u2 = mesh.coords.iter().map(|&(x, y)| self.exact(1, t, x, y)).collect();
        FieldPair::new(u1, u2, t)
    }
}

/// Source pair `g_i = d/dt u_i - c_i d2/dx_i2 u_i - eps d2/dx_j2 u_i +
/// F_i(u_1, u_2)` evaluated on the case's closed-form fields. Running
/// the solver with reaction `F_i - g_i` makes those fields the exact
/// solution.
pub fn mms_source(case: &MmsCase, t: f64, x: (f64, f64)) -> (f64, f64) {
    let (x1, x2) = x;
    let p = &case.params;
    let u1 = case.exact(0, t, x1, x2);
    let u2 = case.exact(1, t, x1, x2);
    let (f1, f2) = p.reaction_raw(u1, u2);

    match case.kind {
        CaseKind::SineMixed => {
            // d2/dx_own2 u = -pi^2 u; d2/dx_conj2 u only hits the cosine.
            let pi2 = PI * PI;
            let conj_curv = |amp: f64, own: f64, conj: f64| {
                -amp * (-t).exp() * (PI * own).sin() * 0.5 * pi2 * (PI * conj).cos()
            };
            let g1 = -u1 + p.c1 * pi2 * u1 - p.eps * conj_curv(MmsCase::amplitude(0), x1, x2) + f1;
            let g2 = -u2 + p.c2 * pi2 * u2 - p.eps * conj_curv(MmsCase::amplitude(1), x2, x1) + f2;
            (g1, g2)
        }
        CaseKind::SineDirichlet => {
            // Both second derivatives reproduce -pi^2 u.
            let pi2 = PI * PI;
            let g1 = -u1 + (p.c1 + p.eps) * pi2 * u1 + f1;
            let g2 = -u2 + (p.c2 + p.eps) * pi2 * u2 + f2;
            (g1, g2)
        }
        // -c * d2/dx2 [(x - x^3) / (6c)] = x, and the fields are steady
        // and reaction-free.
        CaseKind::LinearSource => (x1, x2),
    }
}

struct MmsReaction<'a> {
    case: &'a MmsCase,
}

impl ReactionTerm for MmsReaction<'_> {
    fn eval(&self, t: f64, x1: f64, x2: f64, s1: f64, s2: f64) -> (f64, f64) {
        let (f1, f2) = self.case.params.reaction_raw(s1, s2);
        let (g1, g2) = mms_source(self.case, t, (x1, x2));
        (f1 - g1, f2 - g2)
    }
}

/// One refinement level of a manufactured convergence study.
#[derive(Debug, Clone, Copy)]
pub struct MmsLevel {
    pub nx: usize,
    pub h: f64,
    pub tau: f64,
    /// Mass-weighted L2 error of the pair at the final time.
    pub l2_error: f64,
    /// Largest nodal error at the final time.
    pub max_error: f64,
    /// `log2(previous error / this error)`; `None` on the first level.
    pub rate: Option<f64>,
}

fn run_level(case: &MmsCase, nx: usize, tau: f64) -> Result<(f64, f64)> {
    let mesh = build_structured_mesh(nx, nx)?;
    let run_mode = if case.is_steady() {
        RunMode::ToStationary
    } else {
        RunMode::FixedHorizon(MMS_T_END)
    };
    let config = SolverConfig {
        tau,
        tol: MMS_TOL,
        tol_s: 1e-11,
        max_picard: 50,
        max_steps: 1_000_000,
        bc_mode: case.bc_mode,
        run_mode,
    };
    let initial = if case.is_steady() {
        FieldPair::constant(&mesh, 0.0, 0.0)
    } else {
        case.exact_pair(&mesh, 0.0)
    };
    let reaction = MmsReaction { case };
    let out = run_with_reaction(&mesh, &initial, &case.params, &reaction, &config)?;

    let target = case.exact_pair(&mesh, out.state.t);
    let mass = crate::assembly::assemble_lumped_mass(&mesh);
    let mut err_sq = 0.0;
    let mut max_err: f64 = 0.0;
    for k in 0..mesh.node_count() {
        let d1 = out.state.u1[k] - target.u1[k];
        let d2 = out.state.u2[k] - target.u2[k];
        err_sq += mass.weights[k] * (d1 * d1 + d2 * d2);
        max_err = max_err.max(d1.abs()).max(d2.abs());
    }
    Ok((err_sq.sqrt(), max_err))
}

/// Runs `levels` refinements of the case, halving `h` and quartering
/// `tau` per level, and reports errors and observed rates.
pub fn mms_convergence(case: &MmsCase, levels: usize) -> Result<Vec<MmsLevel>> {
    if levels < 2 {
        return Err(Error::invalid("levels", format!("need at least 2, got {levels}")));
    }
    let mut out: Vec<MmsLevel> = Vec::with_capacity(levels);
    for level in 0..levels {
        let nx = 4 * (1usize << level) + 1;
        let h = 1.0 / (nx - 1) as f64;
        // Steady levels are integrated with a large step to stationarity;
        // transient levels follow tau ~ h^2.
        let tau = if case.is_steady() { 10.0 } else { MMS_TAU0 / (1u64 << (2 * level)) as f64 };
        let (l2_error, max_error) = run_level(case, nx, tau)?;
        let rate = out.last().map(|prev: &MmsLevel| (prev.l2_error / l2_error).log2());
        out.push(MmsLevel { nx, h, tau, l2_error, max_error, rate });
    }
    Ok(out)
}

/// Solution of the 1D slice problem on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SliceSolution {
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: f64,
    pub steps: usize,
}

/// Tridiagonal elimination for a symmetric system with constant
/// off-diagonal `off` and row diagonals `diag`.
fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n > 0 && rhs.len() == n);
    let mut upper = vec![0.0; n];
    let mut work = vec![0.0; n];
    upper[0] = off / diag[0];
    work[0] = rhs[0] / diag[0];
    for k in 1..n {
        let pivot = diag[k] - off * upper[k - 1];
        upper[k] = off / pivot;
        work[k] = (rhs[k] - off * work[k - 1]) / pivot;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = work[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = work[k] - upper[k] * x[k + 1];
    }
    x
}

/// Integrates the decoupled 1D limit of the pair system over a fixed
/// horizon: linear elements on a uniform grid, lumped mass, implicit
/// Euler, lagged reaction with the same pairwise relative-change
/// stopping rule, zero Dirichlet values at both ends.
///
/// Requires the regime in which 2D dynamics genuinely reduce to 1D:
/// `eps = 0` and no cross-competition (`beta12 = beta21 = 0`).
pub fn slice_oracle(
    params: &ModelParams,
    nx: usize,
    tau: f64,
    tol: f64,
    t_end: f64,
    u0: (f64, f64),
) -> Result<SliceSolution> {
    params.validate()?;
    if params.eps != 0.0 {
        return Err(Error::invalid(
            "eps",
            format!("slice reduction needs eps = 0, got {}", params.eps),
        ));
    }
    if params.beta[0][1] != 0.0 || params.beta[1][0] != 0.0 {
        return Err(Error::invalid(
            "beta",
            "slice reduction needs zero cross-competition".to_string(),
        ));
    }
    if nx < 3 {
        return Err(Error::invalid("nx", format!("need at least 3 grid points, got {nx}")));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be positive, got {tau}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tol", format!("must lie in (0,1), got {tol}")));
    }
    if !(t_end > 0.0) {
        return Err(Error::invalid("t_end", format!("must be positive, got {t_end}")));
    }
    if !(u0.0 >= 0.0 && u0.1 >= 0.0) {
        return Err(Error::invalid("u0", "initial densities must be nonnegative".to_string()));
    }

    let h = 1.0 / (nx - 1) as f64;
    let x: Vec<f64> = (0..nx).map(|k| k as f64 * h).collect();
    // Lumped 1D mass: h inside, h/2 at the (constrained) ends.
    let mass: Vec<f64> =
        (0..nx).map(|k| if k == 0 || k == nx - 1 { 0.5 * h } else { h }).collect();

    let n_free = nx - 2;
    let diag = |c: f64| -> Vec<f64> {
        (1..nx - 1).map(|k| mass[k] / tau + 2.0 * c / h).collect()
    };
    let diag1 = diag(params.c1);
    let diag2 = diag(params.c2);
    let off = [-params.c1 / h, -params.c2 / h];

    let mut u1 = vec![0.0; nx];
    let mut u2 = vec![0.0; nx];
    for k in 1..nx - 1 {
        u1[k] = u0.0;
        u2[k] = u0.1;
    }

    let raw = t_end / tau;
    let steps = if raw <= 1e-9 { 0 } else { (raw - 1e-9).ceil() as usize };

    let pair_change = |a1: &[f64], a2: &[f64], b1: &[f64], b2: &[f64]| -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..nx {
            let d1 = a1[k] - b1[k];
            let d2 = a2[k] - b2[k];
            num += mass[k] * (d1 * d1 + d2 * d2);
            den += mass[k] * (b1[k] * b1[k] + b2[k] * b2[k]);
        }
        (num, den)
    };

    for step in 1..=steps {
        let prev1 = u1.clone();
        let prev2 = u2.clone();
        let mut converged = false;
        let mut last_change = f64::INFINITY;

        for _ in 1..=SLICE_MAX_PICARD {
            let mut rhs1 = vec![0.0; n_free];
            let mut rhs2 = vec![0.0; n_free];
            for k in 1..nx - 1 {
                let (f1, f2) = params.reaction_raw(u1[k], u2[k]);
                rhs1[k - 1] = mass[k] * (prev1[k] / tau - f1);
                rhs2[k - 1] = mass[k] * (prev2[k] / tau - f2);
            }
            let sol1 = solve_tridiagonal(&diag1, off[0], &rhs1);
            let sol2 = solve_tridiagonal(&diag2, off[1], &rhs2);

            let mut next1 = vec![0.0; nx];
            let mut next2 = vec![0.0; nx];
            next1[1..nx - 1].copy_from_slice(&sol1);
            next2[1..nx - 1].copy_from_slice(&sol2);

            let (num, den) = pair_change(&next1, &next2, &u1, &u2);
            last_change = if den == 0.0 {
                if num == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (num / den).sqrt()
            };
            u1 = next1;
            u2 = next2;
            if last_change < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::PicardDiverged {
                step,
                iterations: SLICE_MAX_PICARD,
                last_change,
                tol,
            });
        }
    }

    Ok(SliceSolution { x, u1, u2, t: steps as f64 * tau, steps })
}
