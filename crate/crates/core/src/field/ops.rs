//! MAC stencils.
//!
//! All operators assume the wall conditions of the mould: zero normal velocity
//! on every wall, no-slip for `u` on the bottom/top walls, free slip for `v` on
//! the vertical walls, and homogeneous Neumann for cell-centered scalars unless
//! Dirichlet data is passed explicitly.

use super::{Grid, ScalarField, VectorField};
use crate::real::{lit, Real};

/// Cell-to-face gradient. Wall faces get zero so that `(grad s, w) = -(s, div w)`
/// for every `w` with zero normal wall flux.
pub fn grad<T: Real>(s: &ScalarField<T>, grid: &Grid<T>) -> VectorField<T> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut w = grid.vector();
    for j in 0..ny {
        for i in 1..nx {
            w.set_u(i, j, (s[(i, j)] - s[(i - 1, j)]) / grid.dx);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            w.set_v(i, j, (s[(i, j)] - s[(i, j - 1)]) / grid.dy);
        }
    }
    w
}

/// Face-to-cell divergence.
pub fn div<T: Real>(w: &VectorField<T>, grid: &Grid<T>) -> ScalarField<T> {
    let mut d = grid.scalar();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            d[(i, j)] =
                (w.u(i + 1, j) - w.u(i, j)) / grid.dx + (w.v(i, j + 1) - w.v(i, j)) / grid.dy;
        }
    }
    d
}

/// Five-point Laplacian with homogeneous Neumann conditions on every wall;
/// identical to `div(grad s)`.
pub fn laplacian<T: Real>(s: &ScalarField<T>, grid: &Grid<T>) -> ScalarField<T> {
    scalar_laplacian(s, grid, None)
}

/// Five-point Laplacian with Neumann conditions on the vertical walls and
/// Dirichlet values on the bottom and top walls (one value per column).
pub fn laplacian_dirichlet_y<T: Real>(
    s: &ScalarField<T>,
    grid: &Grid<T>,
    bottom: &[T],
    top: &[T],
) -> ScalarField<T> {
    scalar_laplacian(s, grid, Some((bottom, top)))
}

fn scalar_laplacian<T: Real>(
    s: &ScalarField<T>,
    grid: &Grid<T>,
    dirichlet: Option<(&[T], &[T])>,
) -> ScalarField<T> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (idx2, idy2) = (
        T::one() / (grid.dx * grid.dx),
        T::one() / (grid.dy * grid.dy),
    );
    let two: T = lit(2.0);
    let mut out = grid.scalar();
    for j in 0..ny {
        for i in 0..nx {
            let c = s[(i, j)];
            let west = if i > 0 { s[(i - 1, j)] } else { c };
            let east = if i + 1 < nx { s[(i + 1, j)] } else { c };
            let south = match (j > 0, dirichlet) {
                (true, _) => s[(i, j - 1)],
                (false, Some((bottom, _))) => two * bottom[i] - c,
                (false, None) => c,
            };
            let north = match (j + 1 < ny, dirichlet) {
                (true, _) => s[(i, j + 1)],
                (false, Some((_, top))) => two * top[i] - c,
                (false, None) => c,
            };
            out[(i, j)] = (west - two * c + east) * idx2 + (south - two * c + north) * idy2;
        }
    }
    out
}

/// Componentwise MAC Laplacian of a velocity field under the wall conditions.
/// Wall-normal faces of the result are zero.
pub fn vector_laplacian<T: Real>(w: &VectorField<T>, grid: &Grid<T>) -> VectorField<T> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (idx2, idy2) = (
        T::one() / (grid.dx * grid.dx),
        T::one() / (grid.dy * grid.dy),
    );
    let two: T = lit(2.0);
    let mut out = grid.vector();
    for j in 0..ny {
        for i in 1..nx {
            let c = w.u(i, j);
            let west = if i > 1 { w.u(i - 1, j) } else { T::zero() };
            let east = if i + 1 < nx { w.u(i + 1, j) } else { T::zero() };
            // no-slip: ghost mirrors with opposite sign
            let south = if j > 0 { w.u(i, j - 1) } else { -c };
            let north = if j + 1 < ny { w.u(i, j + 1) } else { -c };
            out.set_u(
                i,
                j,
                (west - two * c + east) * idx2 + (south - two * c + north) * idy2,
            );
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let c = w.v(i, j);
            let south = if j > 1 { w.v(i, j - 1) } else { T::zero() };
            let north = if j + 1 < ny { w.v(i, j + 1) } else { T::zero() };
            // free slip: mirrored ghost
            let west = if i > 0 { w.v(i - 1, j) } else { c };
            let east = if i + 1 < nx { w.v(i + 1, j) } else { c };
            out.set_v(
                i,
                j,
                (west - two * c + east) * idx2 + (south - two * c + north) * idy2,
            );
        }
    }
    out
}

/// Conservative first-order upwind transport `div(vel q)`.
///
/// Wall faces carry no flux, so the cell sum of the result telescopes to zero.
pub fn advect_scalar_flux<T: Real>(
    vel: &VectorField<T>,
    q: &ScalarField<T>,
    grid: &Grid<T>,
) -> ScalarField<T> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut fx = vec![T::zero(); (nx + 1) * ny];
    for j in 0..ny {
        for i in 1..nx {
            let a = vel.u(i, j);
            let up = if a > T::zero() {
                q[(i - 1, j)]
            } else {
                q[(i, j)]
            };
            fx[j * (nx + 1) + i] = a * up;
        }
    }
    let mut fy = vec![T::zero(); nx * (ny + 1)];
    for j in 1..ny {
        for i in 0..nx {
            let a = vel.v(i, j);
            let up = if a > T::zero() {
                q[(i, j - 1)]
            } else {
                q[(i, j)]
            };
            fy[j * nx + i] = a * up;
        }
    }
    let mut out = grid.scalar();
    for j in 0..ny {
        for i in 0..nx {
            out[(i, j)] = (fx[j * (nx + 1) + i + 1] - fx[j * (nx + 1) + i]) / grid.dx
                + (fy[(j + 1) * nx + i] - fy[j * nx + i]) / grid.dy;
        }
    }
    out
}

/// Skew-symmetric transport of `w` by `transport`:
/// `1/2 [div(a (x) w) + (a . grad) w]` built from centered face fluxes minus half
/// the control-volume divergence. `(skew_advection(a, w), w) = 0` holds exactly
/// for any `a` with zero normal wall flux, solenoidal or not.
pub fn skew_advection<T: Real>(
    transport: &VectorField<T>,
    w: &VectorField<T>,
    grid: &Grid<T>,
) -> VectorField<T> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx, grid.dy);
    let half: T = lit(0.5);
    let a = transport;
    let mut out = grid.vector();

    // u control volumes: centered on vertical faces, spanning two half cells.
    for j in 0..ny {
        for i in 1..nx {
            let uc = w.u(i, j);
            let ae = half * (a.u(i, j) + a.u(i + 1, j));
            let aw = half * (a.u(i - 1, j) + a.u(i, j));
            let an = if j + 1 < ny {
                half * (a.v(i - 1, j + 1) + a.v(i, j + 1))
            } else {
                T::zero()
            };
            let as_ = if j > 0 {
                half * (a.v(i - 1, j) + a.v(i, j))
            } else {
                T::zero()
            };
            let we = half * (uc + w.u(i + 1, j));
            let ww = half * (w.u(i - 1, j) + uc);
            let wn = if j + 1 < ny {
                half * (uc + w.u(i, j + 1))
            } else {
                T::zero()
            };
            let ws = if j > 0 {
                half * (w.u(i, j - 1) + uc)
            } else {
                T::zero()
            };
            let flux = (ae * we - aw * ww) / dx + (an * wn - as_ * ws) / dy;
            let cv_div = (ae - aw) / dx + (an - as_) / dy;
            out.set_u(i, j, flux - half * cv_div * uc);
        }
    }

    // v control volumes: centered on horizontal faces.
    for j in 1..ny {
        for i in 0..nx {
            let vc = w.v(i, j);
            let an = half * (a.v(i, j) + a.v(i, j + 1));
            let as_ = half * (a.v(i, j - 1) + a.v(i, j));
            let ae = if i + 1 < nx {
                half * (a.u(i + 1, j - 1) + a.u(i + 1, j))
            } else {
                T::zero()
            };
            let aw = if i > 0 {
                half * (a.u(i, j - 1) + a.u(i, j))
            } else {
                T::zero()
            };
            let wn = half * (vc + w.v(i, j + 1));
            let ws = half * (w.v(i, j - 1) + vc);
            let we = if i + 1 < nx {
                half * (vc + w.v(i + 1, j))
            } else {
                T::zero()
            };
            let ww = if i > 0 {
                half * (w.v(i - 1, j) + vc)
            } else {
                T::zero()
            };
            let flux = (ae * we - aw * ww) / dx + (an * wn - as_ * ws) / dy;
            let cv_div = (ae - aw) / dx + (an - as_) / dy;
            out.set_v(i, j, flux - half * cv_div * vc);
        }
    }
    out
}

/// `(vel . grad) vel` in skew-symmetric form.
pub fn advect_velocity_skew<T: Real>(vel: &VectorField<T>, grid: &Grid<T>) -> VectorField<T> {
    skew_advection(vel, vel, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::L2Field;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid<f64> {
        Grid::new(16, 12, 1.0, 0.75).unwrap()
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = grid();
        let s = ScalarField::constant(16, 12, 3.5);
        assert!(laplacian(&s, &g).max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_of_quadratic_is_exact_inside() {
        let g = grid();
        let s = g.scalar_from_fn(|x, _| x * x);
        let l = laplacian(&s, &g);
        for j in 0..12 {
            for i in 1..15 {
                assert_abs_diff_eq!(l[(i, j)], 2.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn div_grad_matches_laplacian() {
        let g = grid();
        let s = g.scalar_from_fn(|x, y| (3.0 * x).sin() * (2.0 * y).cos() + x * y);
        let a = div(&grad(&s, &g), &g);
        let b = laplacian(&s, &g);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn div_grad_of_linear_vanishes_inside() {
        let g = grid();
        let s = g.scalar_from_fn(|x, y| 2.0 * x - 3.0 * y + 1.0);
        let d = div(&grad(&s, &g), &g);
        for j in 1..11 {
            for i in 1..15 {
                assert_abs_diff_eq!(d[(i, j)], 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn dirichlet_laplacian_reproduces_linear_profile() {
        // s = 2 + y with exact wall values is harmonic
        let g = grid();
        let s = g.scalar_from_fn(|_, y| 2.0 + y);
        let bottom = vec![2.0; 16];
        let top = vec![2.0 + g.ly; 16];
        let l = laplacian_dirichlet_y(&s, &g, &bottom, &top);
        assert!(l.max_abs() < 1e-10);
    }

    #[test]
    fn vector_laplacian_is_symmetric_negative() {
        let g = grid();
        let a = g.vector_from_fn(|x, y| (x * 5.0).sin() + y, |x, y| (y * 3.0).cos() * x);
        let b = g.vector_from_fn(|x, y| x * y, |x, y| (x + y).sin());
        let lab = vector_laplacian(&a, &g).inner(&b, &g).unwrap();
        let lba = vector_laplacian(&b, &g).inner(&a, &g).unwrap();
        assert_abs_diff_eq!(lab, lba, epsilon = 1e-9);
        assert!(vector_laplacian(&a, &g).inner(&a, &g).unwrap() < 0.0);
    }

    #[test]
    fn zero_velocity_transports_nothing() {
        let g = grid();
        let q = g.scalar_from_fn(|x, y| x + y * y);
        let z = g.vector();
        assert_eq!(advect_scalar_flux(&z, &q, &g).max_abs(), 0.0);
        assert_eq!(advect_velocity_skew(&z, &g).max_abs(), 0.0);
    }

    #[test]
    fn uniform_velocity_has_no_interior_self_advection() {
        let g = grid();
        let w = g.vector_from_fn(|_, _| 0.7, |_, _| -0.4);
        let n = advect_velocity_skew(&w, &g);
        for j in 1..11 {
            for i in 2..15 {
                assert_abs_diff_eq!(n.u(i, j), 0.0, epsilon = 1e-12);
            }
        }
        for j in 2..11 {
            for i in 1..15 {
                assert_abs_diff_eq!(n.v(i, j), 0.0, epsilon = 1e-12);
            }
        }
    }
}
