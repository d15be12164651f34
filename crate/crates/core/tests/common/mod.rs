#![allow(dead_code)]

use alloyfreeze_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default convection setup: cold bottom at the eutectic temperature, warm
/// top with a horizontal gradient and a periodic modulation.
pub fn convection_problem(n: usize) -> Problem64 {
    let grid = Grid::new(n, n, 1.0, 1.0).unwrap();
    let pd = PhaseDiagram::linear(1.0, 0.0, 0.5, 0.2).unwrap();
    let bc = BoundaryData {
        bottom: WallTemperature::constant(0.0),
        top: WallTemperature {
            profile: Profile::LinearInX {
                left: 0.8,
                right: 0.9,
            },
            modulation: TimeModulation::Sinusoidal {
                amplitude: 0.05,
                period: 1.0,
                phase: 0.0,
            },
        },
    };
    Problem::new(grid, pd, PhysicalParams::default(), bc).unwrap()
}

pub fn convection_step() -> StepConfig64 {
    StepConfig {
        cfl_max: 0.25,
        ..StepConfig::new(0.01, 0.1)
    }
}

/// Zero wall temperature, no gravity, and a phase diagram placing every
/// state near `theta = 0` in the liquid region.
pub fn zero_data_problem(n: usize) -> Problem64 {
    let grid = Grid::new(n, n, 1.0, 1.0).unwrap();
    let pd = PhaseDiagram::linear(-1.0, -2.0, 0.5, 0.2).unwrap();
    let pp = PhysicalParams {
        gravity: 0.0,
        ..PhysicalParams::default()
    };
    Problem::new(grid, pd, pp, BoundaryData::uniform(0.0)).unwrap()
}

/// Random discretely solenoidal velocity of magnitude about one.
pub fn random_solenoidal(grid: &Grid64, seed: u64) -> VectorField64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi: Vec<f64> = (0..(grid.nx - 1) * (grid.ny - 1))
        .map(|_| rng.gen_range(-1.0..1.0) * grid.dx)
        .collect();
    grid.velocity_from_streamfunction(&psi).unwrap()
}

pub fn random_scalar(grid: &Grid64, seed: u64) -> ScalarField64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.cells())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    ScalarField::from_vec(grid.nx, grid.ny, data).unwrap()
}

/// Random velocity with arbitrary interior values and zero wall-normal components.
pub fn random_wall_compatible(grid: &Grid64, seed: u64) -> VectorField64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = grid.vector();
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            w.set_u(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            w.set_v(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    w
}
