//! Solver for the regularized solidification of a binary alloy in a rectangular
//! mould: incompressible Boussinesq flow with Carman-Kozeny drag, coupled to
//! solute and heat transport, plus a fixed-point search for time-periodic
//! (reproductive) solutions and checks of the associated a-priori bounds.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod init;
mod linalg;
pub mod phase;
pub mod real;
pub mod repro;
pub mod stepper;

pub use diagnostics::{
    check_max_principles, check_solute, decay_check, energy_budget, poincare_eigenvalues,
    record_trajectory, scaling_fit, solid_velocity_integral, DecayReport, EnergyReport,
    MaxPrincipleReport, SolidRegion, SoluteReport, StepRecord, TrajectoryStats,
};
pub use error::{Error, Result};
pub use field::{
    BoundaryData, Grid, L2Field, Profile, ScalarField, State, TimeModulation, VectorField,
    WallTemperature,
};
pub use phase::{carman_kozeny, CurveKind, PhaseDiagram, PhysicalParams, Region};
pub use real::Real;
pub use repro::{
    eps_continuation, find_reproductive, propagate, Continuation, EpsRun, FixedPointReport,
    ReproConfig,
};
pub use stepper::{
    solve_helmholtz, step, step_with_report, total_solute, EnergyTerms, MomentumTimeCoeff, Problem,
    ScalarBc, StepConfig, StepReport,
};

pub type Grid64 = Grid<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type VectorField64 = VectorField<f64>;
pub type State64 = State<f64>;
pub type PhaseDiagram64 = PhaseDiagram<f64>;
pub type PhysicalParams64 = PhysicalParams<f64>;
pub type BoundaryData64 = BoundaryData<f64>;
pub type Problem64 = Problem<f64>;
pub type StepConfig64 = StepConfig<f64>;
pub type ReproConfig64 = ReproConfig<f64>;

pub type Grid32 = Grid<f32>;
pub type State32 = State<f32>;
pub type PhaseDiagram32 = PhaseDiagram<f32>;
pub type PhysicalParams32 = PhysicalParams<f32>;
pub type Problem32 = Problem<f32>;
pub type StepConfig32 = StepConfig<f32>;
