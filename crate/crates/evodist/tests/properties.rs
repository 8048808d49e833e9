//! Randomized property tests for the building blocks: discretization
//! identities that must hold for every mesh size and diffusion pair,
//! the linear solver's residual contract, and lossless config
//! serialization.

use evodist::assembly::{assemble_lumped_mass, assemble_stiffness, SparseBuilder};
use evodist::io::{parse_config, serialize_config};
use evodist::linsolve::solve_spd;
use evodist::mesh::build_structured_mesh;
use evodist::model::Convention;
use evodist::runner::{ExperimentConfig, RunKind};
use evodist::stepper::BcMode;
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    let sizes = (2usize..48, 2usize..48);
    let tolerances = (1e-6f64..2.0, 1e-9f64..0.5, 1e-12f64..1e-2);
    let coefficients = (0.0f64..1.0, 0.0f64..2.0, 0.0f64..2.0);
    let growth = (0.0f64..8.0, 0.0f64..8.0, prop::array::uniform4(0.0f64..8.0));
    let modes = (
        prop_oneof![Just(BcMode::Dirichlet), Just(BcMode::Mixed)],
        prop_oneof![Just(Convention::Logistic), Just(Convention::Literal)],
        prop_oneof![Just(RunKind::Stationary), Just(RunKind::Horizon)],
    );
    let rest = (0.0f64..4.0, 0.0f64..4.0, 1e-3f64..20.0, 1usize..500, 1usize..10_000_000, any::<u64>());
    (sizes, tolerances, coefficients, growth, modes, rest).prop_map(
        |(
            (nx, ny),
            (tau, tol, tol_s),
            (eps, c1, c2),
            (alpha1, alpha2, beta),
            (bc, convention, run_mode),
            (u10, u20, t_end, max_picard, max_steps, seed),
        )| ExperimentConfig {
            nx,
            ny,
            tau,
            tol,
            tol_s,
            eps,
            c1,
            c2,
            alpha1,
            alpha2,
            beta11: beta[0],
            beta12: beta[1],
            beta21: beta[2],
            beta22: beta[3],
            bc,
            convention,
            u10,
            u20,
            run_mode,
            t_end,
            max_picard,
            max_steps,
            seed,
        },
    )
}

proptest! {
    /// Serializing any configuration and parsing it back is lossless:
    /// float fields rely on the shortest round-trip decimal form.
    #[test]
    fn config_round_trips_through_text(config in arb_config()) {
        let text = serialize_config(&config);
        let parsed = parse_config(&text).unwrap();
        prop_assert_eq!(parsed, config);
    }

    /// The stiffness operator contains constants in its null space
    /// (pure natural boundary assembly): A * 1 = 0 to rounding.
    #[test]
    fn stiffness_annihilates_constant_fields(
        nx in 2usize..20,
        ny in 2usize..20,
        d1 in 0.0f64..10.0,
        d2 in 0.0f64..10.0,
    ) {
        let mesh = build_structured_mesh(nx, ny).unwrap();
        let a = assemble_stiffness(&mesh, d1, d2).unwrap();
        let ones = vec![1.0; mesh.node_count()];
        let residual = a.matvec(&ones);
        let worst = residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(worst <= 1e-12 * (1.0 + d1 + d2), "A*1 = {worst:e}");
    }

    /// Lumped mass weights are a quadrature rule: they are positive and
    /// sum to the area of the unit square.
    #[test]
    fn lumped_mass_sums_to_domain_area(nx in 2usize..40, ny in 2usize..40) {
        let mesh = build_structured_mesh(nx, ny).unwrap();
        let mass = assemble_lumped_mass(&mesh);
        prop_assert!(mass.weights.iter().all(|&w| w > 0.0));
        let total: f64 = mass.weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "total mass = {total}");
    }

    /// Piecewise-linear interpolation evaluated at a node reproduces the
    /// nodal value exactly.
    #[test]
    fn interpolation_reproduces_nodal_values(
        nx in 2usize..16,
        ny in 2usize..16,
        seed in any::<u64>(),
    ) {
        let mesh = build_structured_mesh(nx, ny).unwrap();
        let n = mesh.node_count();
        // Cheap deterministic pseudo-random nodal field from the seed.
        let field: Vec<f64> = (0..n)
            .map(|k| {
                let mix = seed.wrapping_mul(6364136223846793005).wrapping_add(k as u64);
                (mix >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        for k in 0..n {
            let (x, y) = mesh.coords[k];
            let value = mesh.interpolate(&field, x, y);
            prop_assert!((value - field[k]).abs() <= 1e-12 * (1.0 + field[k].abs()));
        }
    }

    /// The conjugate-gradient solver honors its residual contract on
    /// random diagonally dominant symmetric systems.
    #[test]
    fn pcg_meets_its_residual_contract(
        n in 2usize..40,
        seed in any::<u64>(),
    ) {
        let mut builder = SparseBuilder::new(n);
        let mut rng_state = seed | 1;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut row_sums = vec![0.0; n];
        for r in 0..n {
            for c in (r + 1)..(r + 3).min(n) {
                let v = next() - 0.5;
                builder.add(r, c, v);
                builder.add(c, r, v);
                row_sums[r] += v.abs();
                row_sums[c] += v.abs();
            }
        }
        for (r, &sum) in row_sums.iter().enumerate() {
            builder.add(r, r, sum + 1.0 + next());
        }
        let a = builder.build();
        let b: Vec<f64> = (0..n).map(|_| next() - 0.5).collect();
        let (x, report) = solve_spd(&a, &b, 1e-10).unwrap();
        let residual = a.matvec(&x);
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r_norm = residual
            .iter()
            .zip(&b)
            .map(|(av, bv)| (av - bv) * (av - bv))
            .sum::<f64>()
            .sqrt();
        prop_assert!(
            r_norm <= 1e-10 * b_norm.max(f64::MIN_POSITIVE),
            "residual {r_norm:e} vs rhs norm {b_norm:e} after {} iterations",
            report.iterations
        );
    }
}
