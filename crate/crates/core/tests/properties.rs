use hdgel::angular::{build_angular_grid, scattering_kernel_matrix};
use hdgel::basis::{lgl_quadrature, modal_nodal_transform};
use hdgel::datagen::{sample_sigma_detailed, SamplerConfig};
use hdgel::local::{exact_local_operators, Discretization, ElementSize, SigmaField};
use hdgel::mesh::{build_mesh, skeleton_numbering};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lgl_weights_integrate_constants(p in 1usize..12) {
        let q = lgl_quadrature(p).unwrap();
        prop_assert!((q.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
        prop_assert!(q.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn lagrange_basis_is_a_partition_of_unity(p in 1usize..10, x in -1.0f64..1.0) {
        let q = lgl_quadrature(p).unwrap();
        let s: f64 = q.lagrange_all(x).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modal_round_trip(coeffs in prop::collection::vec(-5.0f64..5.0, 16)) {
        let t = modal_nodal_transform(3).unwrap();
        let back = t.to_modal_2d(&t.to_nodal_2d(&coeffs));
        for (a, b) in coeffs.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn transfer_rows_are_stochastic(k in 1usize..8, g in 0.0f64..0.95) {
        let grid = build_angular_grid(4 * k, 0).unwrap();
        let kernel = scattering_kernel_matrix(&grid, g).unwrap();
        for row in kernel.transfer().row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn skeleton_dofs_decompose(nx in 1usize..5, ny in 1usize..5, p in 1usize..4) {
        let mesh = build_mesh(nx as f64, ny as f64, nx, ny).unwrap();
        let grid = build_angular_grid(8, 0).unwrap();
        let index = skeleton_numbering(&mesh, &grid, p);
        for dof in 0..index.n_dofs() {
            let (f, node, a) = index.decompose(dof);
            prop_assert_eq!(index.dof(f, node, a), dof);
        }
        // every element's inflow and outflow lists cover its whole trace
        for e in 0..mesh.n_elements() {
            prop_assert_eq!(index.inflow(e).len() + index.outflow(e).len(), 4 * (p + 1) * 8);
        }
    }

    #[test]
    fn sampled_sigma_is_bounded(seed in any::<u64>(), c_sm in 0.2f64..5.0) {
        let cfg = SamplerConfig::new(3, c_sm, 10.0, seed);
        let (s, _) = sample_sigma_detailed(&cfg, &mut cfg.rng(0)).unwrap();
        let min = s.normalized.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = s.normalized.iter().cloned().fold(0.0, f64::max);
        prop_assert!(min.abs() < 1e-12);
        prop_assert!((max - 1.0).abs() < 1e-12);
        prop_assert!(s.sigma.iter().all(|&v| (0.0..=10.0).contains(&v)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn operators_depend_only_on_h_sigma(
        sigma in prop::collection::vec(0.0f64..5.0, 9),
        h in 0.05f64..3.0,
    ) {
        let disc = Discretization::new(2, 8, 0.8).unwrap();
        let at_h = SigmaField::from_scattering(2, sigma.clone(), 1.0).unwrap();
        let at_ref = SigmaField::from_scattering(2, sigma.iter().map(|s| s * h / 2.0).collect(), 1.0).unwrap();
        let a = exact_local_operators(&disc, &at_h, ElementSize::square(h), None).unwrap();
        let b = exact_local_operators(&disc, &at_ref, ElementSize::square(2.0), None).unwrap();
        let (ua, ub) = (a.a_i2u.unwrap(), b.a_i2u.unwrap());
        prop_assert!((&ua - &ub).norm() <= 1e-12 * ua.norm());
        prop_assert!((&a.a_i2o - &b.a_i2o).norm() <= 1e-12 * a.a_i2o.norm());
    }

    #[test]
    fn nonnegative_inflow_gives_nonnegative_mean(
        sigma in prop::collection::vec(0.0f64..8.0, 9),
        omega in 0.0f64..1.0,
    ) {
        let disc = Discretization::new(2, 8, 0.8).unwrap();
        let s = SigmaField::from_scattering(2, sigma, omega).unwrap();
        let ops = exact_local_operators(&disc, &s, ElementSize::square(1.0), None).unwrap();
        let ones = nalgebra::DVector::from_element(disc.n_in(), 1.0);
        let mean = &ops.a_i2m * ones;
        prop_assert!(mean.iter().all(|&m| m > -1e-10 && m <= 1.0 + 1e-10));
    }
}
