//! Solver for two-population evolutionary distribution systems.
//!
//! Two competing populations are structured by a continuous trait
//! `x = (x1, x2)` on the unit square. Each population diffuses only along
//! its own trait axis (mutation) and interacts with the other through a
//! pointwise competition term, giving a degenerate, anisotropic,
//! semilinear parabolic system:
//!
//! ```text
//! d/dt u_i - c_i d2/dx_i2 u_i + F_i(u1, u2) = 0   on (0,1)^2, i = 1, 2
//! ```
//!
//! The discretization is piecewise-linear finite elements on a structured
//! right-triangle mesh with mass lumping, implicit Euler in time, and a
//! lagged-reaction fixed-point iteration per step. A small elliptic
//! regularization `eps` along the conjugate axis, with either full or
//! mixed boundary conditions, embeds the degenerate problem in a family
//! of nondegenerate ones; the library ships the machinery to study that
//! family (parameter sweeps, boundary-layer metrics) plus independent
//! verification oracles (manufactured solutions, a 1D slice solver).
//!
//! Module map:
//! - [`mesh`]: structured triangulation of the unit square.
//! - [`assembly`]: lumped mass, anisotropic stiffness, Dirichlet elimination.
//! - [`model`]: competition kinetics, Lipschitz bounds, monotone shift.
//! - [`linsolve`]: preconditioned conjugate gradients for SPD systems.
//! - [`stepper`]: implicit time stepping with fixed-point resolution.
//! - [`runner`]: experiment presets, the eps/boundary-condition sweep.
//! - [`io`]: config files, snapshots, run summaries.
//! - [`cli`]: command-line entry points.
//! - [`oracle`]: manufactured-solution and 1D-slice verification.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod model;
pub mod oracle;
pub mod runner;
pub mod stepper;

pub use error::{Error, Result};
