mod common;

use alloyfreeze_core::field::{
    advect_scalar_flux, advect_velocity_skew, div, grad, skew_advection,
};
use alloyfreeze_core::real::neumaier_sum;
use alloyfreeze_core::*;
use common::*;
use proptest::prelude::*;

fn grid32() -> Grid64 {
    Grid::new(32, 32, 1.0, 1.0).unwrap()
}

/// Direct summation of all face fluxes leaving each cell.
fn flux_sum_oracle(vel: &VectorField64, q: &ScalarField64, g: &Grid64) -> f64 {
    let mut total = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let face = |a: f64, up: f64, down: f64| if a > 0.0 { a * up } else { a * down };
            let east = if i + 1 < g.nx {
                face(vel.u(i + 1, j), q[(i, j)], q[(i + 1, j)])
            } else {
                0.0
            };
            let west = if i > 0 {
                face(vel.u(i, j), q[(i - 1, j)], q[(i, j)])
            } else {
                0.0
            };
            let north = if j + 1 < g.ny {
                face(vel.v(i, j + 1), q[(i, j)], q[(i, j + 1)])
            } else {
                0.0
            };
            let south = if j > 0 {
                face(vel.v(i, j), q[(i, j - 1)], q[(i, j)])
            } else {
                0.0
            };
            total.push((east - west) / g.dx + (north - south) / g.dy);
        }
    }
    neumaier_sum(total)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grad_div_adjointness(seed in any::<u64>()) {
        let g = grid32();
        let s = random_scalar(&g, seed);
        let w = random_wall_compatible(&g, seed ^ 0x5555);
        let lhs = grad(&s, &g).inner(&w, &g).unwrap();
        let rhs = s.inner(&div(&w, &g), &g).unwrap();
        prop_assert!((lhs + rhs).abs() <= 1e-12);
    }

    #[test]
    fn skew_symmetry_on_solenoidal_fields(seed in any::<u64>()) {
        let g = grid32();
        let v = random_solenoidal(&g, seed);
        let n = advect_velocity_skew(&v, &g);
        prop_assert!(n.inner(&v, &g).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn skew_symmetry_with_foreign_transport(seed in any::<u64>()) {
        let g = grid32();
        let a = random_wall_compatible(&g, seed);
        let w = random_solenoidal(&g, seed.wrapping_add(1));
        let n = skew_advection(&a, &w, &g);
        prop_assert!(n.inner(&w, &g).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn flux_form_conservation(seed in any::<u64>()) {
        let g = grid32();
        let v = random_solenoidal(&g, seed);
        let q = random_scalar(&g, seed.wrapping_mul(3));
        let out = advect_scalar_flux(&v, &q, &g);
        prop_assert!(out.sum().abs() <= 1e-12);
        prop_assert!(flux_sum_oracle(&v, &q, &g).abs() <= 1e-12);
    }

    #[test]
    fn inner_product_is_symmetric(seed in any::<u64>()) {
        let g = grid32();
        let a = random_scalar(&g, seed);
        let b = random_scalar(&g, seed ^ 1);
        prop_assert_eq!(a.inner(&b, &g).unwrap(), b.inner(&a, &g).unwrap());
    }
}

#[test]
fn constant_is_transported_without_change() {
    let g = grid32();
    let v = random_solenoidal(&g, 11);
    let q = ScalarField::constant(32, 32, 0.37);
    assert!(advect_scalar_flux(&v, &q, &g).max_abs() <= 1e-12);
}

#[test]
fn random_solenoidal_fields_are_discretely_divergence_free() {
    let g = grid32();
    let v = random_solenoidal(&g, 5);
    assert!(div(&v, &g).max_abs() <= 1e-12);
}

#[test]
fn operators_in_single_precision() {
    let g = Grid::<f32>::new(16, 16, 1.0, 1.0).unwrap();
    let s = g.scalar_from_fn(|x, y| x * x + y);
    let l = field::laplacian(&s, &g);
    for j in 1..15 {
        for i in 1..15 {
            assert!((l[(i, j)] - 2.0).abs() < 1e-2);
        }
    }
}
