//! Admissible initial states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{theta_lift, State};
use crate::real::{from_usize, lit, Real};
use crate::stepper::Problem;

/// Uniform concentration `c_total / |Omega|`, the temperature lift at `t = 0`
/// and fluid at rest.
pub fn rest_state<T: Real>(problem: &Problem<T>) -> Result<State<T>> {
    let grid = &problem.grid;
    let mut s = State::zeros(grid);
    let c_mean = problem.params.c_total / grid.area();
    s.c = s.c.map(|_| c_mean);
    s.theta = theta_lift(grid, &problem.bc, T::zero())?;
    Ok(s)
}

/// Smooth random perturbation of [`rest_state`].
///
/// The concentration keeps its total and stays inside `[0, c_e]`, the
/// temperature stays between the extremes of the wall data, and the velocity
/// comes from a stream function, so it is discretely solenoidal with zero wall
/// flux. `velocity` is the target velocity magnitude; `amplitude` in `[0, 1]`
/// scales the scalar perturbations relative to their admissible range.
pub fn random_state<T: Real>(
    problem: &Problem<T>,
    seed: u64,
    amplitude: T,
    velocity: T,
) -> Result<State<T>> {
    let grid = &problem.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = rest_state(problem)?;
    let pi = T::PI();
    const MODES: usize = 3;

    let mut coeffs =
        |n: usize| -> Vec<T> { (0..n).map(|_| lit::<T>(rng.gen_range(-1.0..1.0))).collect() };

    // concentration: cosine modes have zero discrete mean
    let a = coeffs(MODES * MODES);
    let mut pert = grid.scalar_from_fn(|x, y| {
        let mut v = T::zero();
        for k in 0..MODES {
            for l in 0..MODES {
                if k + l == 0 {
                    continue;
                }
                let fx = (pi * from_usize::<T>(k) * x / grid.lx).cos();
                let fy = (pi * from_usize::<T>(l) * y / grid.ly).cos();
                v = v + a[k * MODES + l] * fx * fy;
            }
        }
        v
    });
    let mean = pert.mean();
    pert = pert.map(|v| v - mean);
    let c_mean = problem.params.c_total / grid.area();
    let room = c_mean.min(problem.phase.c_e - c_mean).max(T::zero());
    let scale = if pert.max_abs() > T::zero() {
        amplitude * room / pert.max_abs() * lit(0.999)
    } else {
        T::zero()
    };
    s.c = pert.map(|v| c_mean + scale * v);

    // temperature: sine modes vanish on the walls
    let b = coeffs(MODES * MODES);
    let (lo, hi) = problem.bc.bounds();
    let pert = grid.scalar_from_fn(|x, y| {
        let mut v = T::zero();
        for k in 0..MODES {
            for l in 1..=MODES {
                let fx = (pi * from_usize::<T>(k) * x / grid.lx).cos();
                let fy = (pi * from_usize::<T>(l) * y / grid.ly).sin();
                v = v + b[k * MODES + l - 1] * fx * fy;
            }
        }
        v
    });
    let span = (hi - lo) * amplitude * lit(0.5);
    let norm = pert.max_abs().max(T::min_positive_value());
    s.theta = s
        .theta
        .zip_map(&pert, |th, p| (th + span * p / norm).max(lo).min(hi));

    // velocity from a stream function vanishing on the walls
    let w = coeffs(MODES * MODES);
    let (nx, ny) = (grid.nx, grid.ny);
    let mut psi = Vec::with_capacity((nx - 1) * (ny - 1));
    for j in 1..ny {
        for i in 1..nx {
            let x = from_usize::<T>(i) * grid.dx;
            let y = from_usize::<T>(j) * grid.dy;
            let mut v = T::zero();
            for k in 1..=MODES {
                for l in 1..=MODES {
                    let fx = (pi * from_usize::<T>(k) * x / grid.lx).sin();
                    let fy = (pi * from_usize::<T>(l) * y / grid.ly).sin();
                    v = v + w[(k - 1) * MODES + l - 1] * fx * fy;
                }
            }
            psi.push(v);
        }
    }
    let vel = grid.velocity_from_streamfunction(&psi)?;
    let peak = vel.max_abs();
    s.vel = if peak > T::zero() {
        vel.map(|v| v * velocity / peak)
    } else {
        vel
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{div, BoundaryData, Grid};
    use crate::phase::{sample_diagram, sample_params};
    use crate::stepper::total_solute;

    #[test]
    fn random_state_is_admissible() {
        let grid = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let p = Problem::new(
            grid,
            sample_diagram(),
            sample_params(),
            BoundaryData::uniform(0.4),
        )
        .unwrap();
        let s = random_state(&p, 7, 0.5, 0.05).unwrap();
        assert!((total_solute(&s.c, &grid) - 0.1).abs() < 1e-14);
        assert!(s.c.min() >= 0.0 && s.c.max() <= 0.5);
        assert!(s.theta.min() >= 0.4 - 1e-15 && s.theta.max() <= 0.4 + 1e-15);
        assert!(div(&s.vel, &grid).max_abs() < 1e-12);
        assert!((s.vel.max_abs() - 0.05).abs() < 1e-12);
        assert_eq!(s, random_state(&p, 7, 0.5, 0.05).unwrap());
    }
}
