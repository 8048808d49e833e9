//! Conjugate-gradient solver for symmetric positive definite systems.
//!
//! Diagonal (Jacobi) preconditioning, zero initial guess, sequential
//! reductions only: a given `(A, b, rel_tol)` always produces bitwise
//! the same solution. Convergence is accepted only after the explicit
//! residual `b - A x` meets the contract `||b - A x|| <= rel_tol ||b||`,
//! so recurrence drift cannot produce a false positive.

use crate::assembly::SymSparseMatrix;
use crate::error::{Error, Result};

/// Default relative residual target.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Iteration cap as a multiple of the system dimension.
const MAX_ITER_FACTOR: usize = 10;

/// Outcome of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Conjugate-gradient iterations performed.
    pub iterations: usize,
    /// Explicit `||b - A x|| / ||b||` at acceptance (0 for zero rhs).
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for symmetric positive definite `A`.
///
/// Fails when the diagonal is not strictly positive, when a search
/// direction exposes an indefinite matrix, or when the iteration cap
/// (`10 * dim`) is reached before the residual contract holds.
pub fn solve_spd(a: &SymSparseMatrix, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    assert_eq!(b.len(), n, "rhs length must match matrix dimension");
    if !(rel_tol > 0.0) {
        return Err(Error::invalid("rel_tol", format!("must be positive, got {rel_tol}")));
    }

    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveReport { iterations: 0, relative_residual: 0.0 }));
    }

    let diag = a.diagonal();
    for (k, &d) in diag.iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::invalid(
                "matrix",
                format!("not positive definite: diagonal entry {k} is {d}"),
            ));
        }
    }

    let target = rel_tol * b_norm;
    let max_iterations = MAX_ITER_FACTOR * n;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual_norm = b_norm;

    for iteration in 1..=max_iterations {
        a.matvec_into(&p, &mut ap);
        let p_ap = dot(&p, &ap);
        if !(p_ap > 0.0) {
            return Err(Error::invalid(
                "matrix",
                format!("not positive definite: p'Ap = {p_ap} at iteration {iteration}"),
            ));
        }
        let alpha = rz / p_ap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        residual_norm = norm(&r);

        if residual_norm <= target {
            // Recompute the true residual before accepting; continue from
            // it if the recurrence had drifted.
            a.matvec_into(&x, &mut ap);
            let mut true_norm_sq = 0.0;
            for k in 0..n {
                let rk = b[k] - ap[k];
                r[k] = rk;
                true_norm_sq += rk * rk;
            }
            residual_norm = true_norm_sq.sqrt();
            if residual_norm <= target {
                return Ok((
                    x,
                    SolveReport {
                        iterations: iteration,
                        relative_residual: residual_norm / b_norm,
                    },
                ));
            }
        }

        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }

    Err(Error::LinearSolveDiverged {
        max_iterations,
        relative_residual: residual_norm / b_norm,
        rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_lumped_mass, assemble_stiffness, SparseBuilder};
    use crate::mesh::build_structured_mesh;

    fn dense2(a: f64, b: f64, c: f64, d: f64) -> SymSparseMatrix {
        let mut builder = SparseBuilder::new(2);
        builder.add(0, 0, a);
        builder.add(0, 1, b);
        builder.add(1, 0, c);
        builder.add(1, 1, d);
        builder.build()
    }

    #[test]
    fn solves_two_by_two_laplacian() {
        let a = dense2(2.0, -1.0, -1.0, 2.0);
        let (x, report) = solve_spd(&a, &[1.0, 1.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!((x[1] - 1.0).abs() < 1e-10);
        assert!(report.relative_residual <= 1e-12);
    }

    #[test]
    fn scalar_system_converges_in_one_iteration() {
        let mut builder = SparseBuilder::new(1);
        builder.add(0, 0, 4.0);
        let a = builder.build();
        let (x, report) = solve_spd(&a, &[8.0], 1e-12).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert!(report.iterations <= 1);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let a = dense2(2.0, -1.0, -1.0, 2.0);
        let (x, report) = solve_spd(&a, &[0.0, 0.0], 1e-10).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.relative_residual, 0.0);
    }

    #[test]
    fn meets_residual_contract_on_fem_system() {
        let mesh = build_structured_mesh(17, 13).unwrap();
        let mass = assemble_lumped_mass(&mesh);
        let stiff = assemble_stiffness(&mesh, 0.1, 1e-3).unwrap();
        let tau = 1e-3;
        let scaled: Vec<f64> = mass.weights.iter().map(|m| m / tau).collect();
        let s = stiff.plus_diagonal(&scaled);

        let b: Vec<f64> = (0..s.dim()).map(|k| ((k * 37 % 101) as f64 - 50.0) / 17.0).collect();
        for rel_tol in [1e-8, 1e-10, 1e-12] {
            let (x, report) = solve_spd(&s, &b, rel_tol).unwrap();
            let ax = s.matvec(&x);
            let res: f64 =
                b.iter().zip(&ax).map(|(bi, axi)| (bi - axi) * (bi - axi)).sum::<f64>().sqrt();
            let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= rel_tol * b_norm, "contract violated: {res} vs {}", rel_tol * b_norm);
            assert!(report.relative_residual <= rel_tol);
            assert!(report.iterations <= 10 * s.dim());
        }
    }

    #[test]
    fn identical_inputs_give_bitwise_identical_solutions() {
        let mesh = build_structured_mesh(9, 9).unwrap();
        let s = assemble_stiffness(&mesh, 0.3, 0.2)
            .unwrap()
            .plus_diagonal(&vec![1.0; mesh.node_count()]);
        let b: Vec<f64> = (0..s.dim()).map(|k| (k as f64 * 0.7).sin()).collect();
        let (x1, r1) = solve_spd(&s, &b, 1e-11).unwrap();
        let (x2, r2) = solve_spd(&s, &b, 1e-11).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn rejects_indefinite_matrices() {
        let a = dense2(1.0, 0.0, 0.0, -1.0);
        assert!(solve_spd(&a, &[1.0, 1.0], 1e-10).is_err());

        // Indefinite with a rhs exciting the negative-curvature direction.
        let b = dense2(1.0, 4.0, 4.0, 1.0);
        match solve_spd(&b, &[1.0, -1.0], 1e-10) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "matrix"),
            other => panic!("expected indefiniteness error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let a = dense2(2.0, 0.0, 0.0, 2.0);
        assert!(solve_spd(&a, &[1.0, 1.0], 0.0).is_err());
        assert!(solve_spd(&a, &[1.0, 1.0], -1e-10).is_err());
    }

    #[test]
    fn preconditioning_handles_badly_scaled_diagonals() {
        let n = 40;
        let mut builder = SparseBuilder::new(n);
        for k in 0..n {
            let scale = 10f64.powi((k % 7) as i32 - 3);
            builder.add(k, k, 2.0 * scale);
            if k + 1 < n {
                let coupling = -0.5 * scale.min(10f64.powi(((k + 1) % 7) as i32 - 3));
                builder.add(k, k + 1, coupling);
                builder.add(k + 1, k, coupling);
            }
        }
        let a = builder.build();
        let b = vec![1.0; n];
        let (x, report) = solve_spd(&a, &b, 1e-10).unwrap();
        let ax = a.matvec(&x);
        let res: f64 =
            b.iter().zip(&ax).map(|(bi, axi)| (bi - axi) * (bi - axi)).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * (n as f64).sqrt());
        assert!(report.iterations < 10 * n);
    }
}
