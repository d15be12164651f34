//! Checks of the certified bounds on recorded trajectories.

use crate::error::{Error, Result};
use crate::field::{theta_lift, Grid, State, VectorField};
use crate::linalg::{pcg, SolveOptions, Stencil5};
use crate::real::{from_usize, lit, neumaier_sum, to_f64, Real};
use crate::stepper::{step_with_report, total_solute, EnergyTerms, Problem, StepConfig};

/// Tolerance of the maximum-principle checks.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;
/// Admissible normalized negative slack of the energy recursion.
pub const ENERGY_SLACK_TOL: f64 = 1e-10;
/// Relative allowance of the decay bound.
pub const DECAY_SLACK: f64 = 0.1;

/// Cells where the solid fraction equals one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolidRegion {
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
}

impl SolidRegion {
    pub fn from_state<T: Real>(problem: &Problem<T>, state: &State<T>) -> Self {
        let fs = problem.solid_fraction(state);
        Self {
            nx: problem.grid.nx,
            ny: problem.grid.ny,
            mask: fs.as_slice().iter().map(|&f| f == T::one()).collect(),
        }
    }

    pub fn from_mask(nx: usize, ny: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{} cells", nx * ny),
                found: mask.len().to_string(),
            });
        }
        Ok(Self { nx, ny, mask })
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.nx + i]
    }

    pub fn cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells() == 0
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `|v|^2` over the faces whose two neighbouring cells both lie in the region.
    pub fn velocity_norm2<T: Real>(&self, vel: &VectorField<T>, grid: &Grid<T>) -> T {
        let (nx, ny) = (self.nx, self.ny);
        let mut terms = Vec::new();
        for j in 0..ny {
            for i in 1..nx {
                if self.contains(i - 1, j) && self.contains(i, j) {
                    terms.push(vel.u(i, j) * vel.u(i, j));
                }
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                if self.contains(i, j - 1) && self.contains(i, j) {
                    terms.push(vel.v(i, j) * vel.v(i, j));
                }
            }
        }
        neumaier_sum(terms) * grid.cell_area()
    }
}

/// Quantities recorded at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T> {
    pub t: T,
    /// `|Z|^2`.
    pub norm_z2: T,
    /// Dissipation of the step that produced this level (zero for the initial level).
    pub dissipation: T,
    pub c_min: T,
    pub c_max: T,
    pub theta_min: T,
    pub theta_max: T,
    pub total_solute: T,
    /// `|v|^2` over the solid region, zero when none is tracked.
    pub solid_v2: T,
    pub div_inf: T,
    /// Energy terms of the step that produced this level.
    pub energy: Option<EnergyTerms<T>>,
}

impl<T: Real> StepRecord<T> {
    pub fn from_state(
        problem: &Problem<T>,
        state: &State<T>,
        energy: Option<EnergyTerms<T>>,
        solid: Option<&SolidRegion>,
    ) -> Result<Self> {
        let grid = &problem.grid;
        let lift = theta_lift(grid, &problem.bc, state.t)?;
        let z = state.deviation(grid, problem.params.c_total, &lift);
        Ok(Self {
            t: state.t,
            norm_z2: z.norm2(grid),
            dissipation: energy.map_or(T::zero(), |e| e.dissipation),
            c_min: state.c.min(),
            c_max: state.c.max(),
            theta_min: state.theta.min(),
            theta_max: state.theta.max(),
            total_solute: total_solute(&state.c, grid),
            solid_v2: solid.map_or(T::zero(), |k| k.velocity_norm2(&state.vel, grid)),
            div_inf: crate::field::div(&state.vel, grid).max_abs(),
            energy,
        })
    }
}

/// Per-level records of one trajectory; `records.len()` is the step count plus one.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats<T> {
    pub records: Vec<StepRecord<T>>,
}

impl<T: Real> TrajectoryStats<T> {
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// Number of steps covering `horizon` and the step size adjusted so that they fit exactly.
pub fn fitted_steps<T: Real>(horizon: T, dt: T) -> (usize, T) {
    if horizon <= T::zero() {
        return (0, dt);
    }
    let ratio = horizon / dt;
    let mut n = ratio.round();
    if (ratio - n).abs() > lit::<T>(1e-9) * ratio.max(T::one()) {
        n = ratio.ceil();
    }
    let n = n.to_usize().unwrap_or(1).max(1);
    (n, horizon / from_usize(n))
}

/// Advances `x0` over `horizon` and records every level.
pub fn record_trajectory<T: Real>(
    x0: &State<T>,
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
    horizon: T,
    solid: Option<&SolidRegion>,
) -> Result<(State<T>, TrajectoryStats<T>)> {
    let (n, dt) = fitted_steps(horizon, cfg.dt);
    let cfg = StepConfig { dt, ..*cfg };
    let mut records = Vec::with_capacity(n + 1);
    records.push(StepRecord::from_state(problem, x0, None, solid)?);
    let mut state = x0.clone();
    for _ in 0..n {
        let (next, report) = step_with_report(&state, problem, &cfg)?;
        records.push(StepRecord::from_state(
            problem,
            &next,
            Some(report.energy),
            solid,
        )?);
        state = next;
    }
    Ok((state, TrajectoryStats { records }))
}

/// One failed bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub t: f64,
    pub quantity: &'static str,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleReport {
    pub passed: bool,
    pub tol: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub violations: Vec<Violation>,
}

/// Checks `0 <= c <= gamma_l(theta_e)` and `theta_inf <= theta <= theta_sup` at
/// every level, with `theta_inf = min(inf theta_0, inf theta_delta)` and
/// `theta_sup` the analogous maximum.
pub fn check_max_principles<T: Real>(
    stats: &TrajectoryStats<T>,
    problem: &Problem<T>,
) -> MaxPrincipleReport {
    let tol = MAX_PRINCIPLE_TOL;
    let (bc_lo, bc_hi) = problem.bc.bounds();
    let (th0_lo, th0_hi) = stats
        .records
        .first()
        .map_or((bc_lo, bc_hi), |r| (r.theta_min, r.theta_max));
    let theta_lower = to_f64(bc_lo.min(th0_lo));
    let theta_upper = to_f64(bc_hi.max(th0_hi));
    let c_upper = to_f64(problem.phase.liquidus(problem.phase.theta_e));
    let mut violations = Vec::new();
    let mut extremes = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (k, r) in stats.records.iter().enumerate() {
        let t = to_f64(r.t);
        let (cmin, cmax, tmin, tmax) = (
            to_f64(r.c_min),
            to_f64(r.c_max),
            to_f64(r.theta_min),
            to_f64(r.theta_max),
        );
        extremes = (
            extremes.0.min(cmin),
            extremes.1.max(cmax),
            extremes.2.min(tmin),
            extremes.3.max(tmax),
        );
        let checks = [
            ("c_min", cmin, 0.0, !(cmin >= -tol)),
            ("c_max", cmax, c_upper, !(cmax <= c_upper + tol)),
            ("theta_min", tmin, theta_lower, !(tmin >= theta_lower - tol)),
            ("theta_max", tmax, theta_upper, !(tmax <= theta_upper + tol)),
        ];
        for (quantity, value, bound, failed) in checks {
            if failed {
                violations.push(Violation {
                    step: k,
                    t,
                    quantity,
                    value,
                    bound,
                });
            }
        }
    }
    MaxPrincipleReport {
        passed: violations.is_empty(),
        tol,
        c_lower: 0.0,
        c_upper,
        theta_lower,
        theta_upper,
        c_min: extremes.0,
        c_max: extremes.1,
        theta_min: extremes.2,
        theta_max: extremes.3,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoluteReport {
    pub passed: bool,
    pub c_total: f64,
    pub max_drift: f64,
    pub tol: f64,
}

/// Checks `|total_solute(t) - c_total| <= 1e-12 max(c_total, 1)` at every level.
pub fn check_solute<T: Real>(stats: &TrajectoryStats<T>, c_total: T) -> SoluteReport {
    let target = to_f64(c_total);
    let tol = 1e-12 * target.max(1.0);
    let max_drift = stats
        .records
        .iter()
        .map(|r| (to_f64(r.total_solute) - target).abs())
        .fold(0.0, f64::max);
    SoluteReport {
        passed: max_drift <= tol,
        c_total: target,
        max_drift,
        tol,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub passed: bool,
    pub steps: usize,
    /// Smallest `(rhs - lhs) / max(1, rhs)` over all steps.
    pub min_slack: f64,
    pub worst_step: usize,
    pub max_norm_z2: f64,
    /// `sum dt * dissipation`.
    pub dissipated: f64,
    /// Largest penalty work, never positive when the drag is dissipative.
    pub max_penalty_work: f64,
}

/// Checks `|Z|^2_{n+1} + dt D_{n+1} <= |Z|^2_n + dt (A_n |Z|^2_n + B_n)` at every step.
pub fn energy_budget<T: Real>(stats: &TrajectoryStats<T>) -> EnergyReport {
    let mut min_slack = f64::INFINITY;
    let mut worst_step = 0;
    let mut dissipated = 0.0;
    let mut max_penalty_work = f64::NEG_INFINITY;
    let mut max_norm_z2 = stats.records.first().map_or(0.0, |r| to_f64(r.norm_z2));
    let mut all_present = true;
    for (k, pair) in stats.records.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        max_norm_z2 = max_norm_z2.max(to_f64(next.norm_z2));
        let Some(e) = next.energy else {
            all_present = false;
            continue;
        };
        let dt = to_f64(next.t - prev.t);
        let z0 = to_f64(prev.norm_z2);
        let rhs = z0 + dt * (to_f64(e.growth) * z0 + to_f64(e.forcing));
        let lhs = to_f64(next.norm_z2) + dt * to_f64(e.dissipation);
        let slack = (rhs - lhs) / rhs.max(1.0);
        if slack < min_slack {
            min_slack = slack;
            worst_step = k + 1;
        }
        dissipated += dt * to_f64(e.dissipation);
        max_penalty_work = max_penalty_work.max(to_f64(e.penalty_work));
    }
    let steps = stats.steps();
    if steps == 0 {
        min_slack = 0.0;
        max_penalty_work = 0.0;
    }
    EnergyReport {
        passed: all_present && min_slack >= -ENERGY_SLACK_TOL && max_penalty_work <= 0.0,
        steps,
        min_slack,
        worst_step,
        max_norm_z2,
        dissipated,
        max_penalty_work,
    }
}

/// Smallest eigenvalues of the three discrete operators entering the Poincare inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareEigenvalues {
    /// Neumann Laplacian on mean-free concentrations.
    pub concentration: f64,
    /// Laplacian with Dirichlet bottom/top walls, for temperature deviations.
    pub temperature: f64,
    /// Vector Laplacian under the velocity wall conditions.
    pub velocity: f64,
}

impl PoincareEigenvalues {
    /// `C_Omega = 1 / min(lambda)`.
    pub fn constant(&self) -> f64 {
        1.0 / self.concentration.min(self.temperature).min(self.velocity)
    }
}

fn smallest_eigenvalue(a: &Stencil5<f64>, singular: bool) -> Result<f64> {
    let n = a.len();
    // deterministic start with components along every low mode
    let mut x: Vec<f64> = (0..n)
        .map(|k| 1.0 + 0.5 * ((k as f64) * 0.618).sin() + 0.25 * ((k as f64) * 1.7).cos())
        .collect();
    let normalize = |x: &mut Vec<f64>| {
        if singular {
            let mean = neumaier_sum(x.iter().copied()) / n as f64;
            x.iter_mut().for_each(|v| *v -= mean);
        }
        let norm = neumaier_sum(x.iter().map(|v| v * v)).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    };
    normalize(&mut x);
    let opts = SolveOptions {
        rel_tol: 1e-13,
        abs_inf_tol: None,
        max_iter: 20 * n,
        singular,
    };
    let mut ax = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        let mut y = x.clone();
        pcg(a, &x, &mut y, opts, "eigenvalue")?;
        normalize(&mut y);
        a.apply(&y, &mut ax);
        let next = neumaier_sum(y.iter().zip(&ax).map(|(u, v)| u * v));
        x = y;
        if (next - lambda).abs() <= 1e-13 * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}

/// Computes the smallest eigenvalues by inverse iteration.
pub fn poincare_eigenvalues<T: Real>(grid: &Grid<T>) -> Result<PoincareEigenvalues> {
    let g = Grid::new(grid.nx, grid.ny, to_f64(grid.lx), to_f64(grid.ly))?;
    let (nx, ny) = (g.nx, g.ny);
    let (wx, wy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let scalar = |dirichlet: bool| {
        let mut a = Stencil5::zeros(nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                let m = j * nx + i;
                if i + 1 < nx {
                    a.couple_east(m, wx);
                }
                if j + 1 < ny {
                    a.couple_north(m, wy);
                }
                if dirichlet && (j == 0 || j == ny - 1) {
                    a.diag[m] += 2.0 * wy;
                }
            }
        }
        a
    };
    let concentration = smallest_eigenvalue(&scalar(false), true)?;
    let temperature = smallest_eigenvalue(&scalar(true), false)?;
    let (au, av) = crate::stepper::velocity_matrices(&g, None, 1.0);
    let velocity = smallest_eigenvalue(&au, false)?.min(smallest_eigenvalue(&av, false)?);
    Ok(PoincareEigenvalues {
        concentration,
        temperature,
        velocity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// False when the wall data or gravity is nonzero; the bound is then not asserted.
    pub applicable: bool,
    pub passed: bool,
    pub poincare_constant: f64,
    pub beta: f64,
    pub horizon: f64,
    pub initial: f64,
    pub final_value: f64,
    pub bound: f64,
}

/// Checks `|Z(T)|^2 <= exp(-beta T) |Z(0)|^2 (1 + 0.1)` with
/// `beta = min(eta, kappa, nu) / C_Omega`.
pub fn decay_check<T: Real>(
    problem: &Problem<T>,
    stats: &TrajectoryStats<T>,
) -> Result<DecayReport> {
    let eig = poincare_eigenvalues(&problem.grid)?;
    let pp = &problem.params;
    let c_omega = eig.constant();
    let beta = to_f64(pp.eta.min(pp.kappa).min(pp.nu)) / c_omega;
    let (first, last) = match (stats.records.first(), stats.records.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(crate::error::invalid("trajectory", "no recorded levels")),
    };
    let horizon = to_f64(last.t - first.t);
    let initial = to_f64(first.norm_z2);
    let final_value = to_f64(last.norm_z2);
    let bound = (-beta * horizon).exp() * initial * (1.0 + DECAY_SLACK);
    let applicable = problem.bc.is_zero() && pp.gravity == T::zero();
    Ok(DecayReport {
        applicable,
        passed: !applicable || final_value <= bound,
        poincare_constant: c_omega,
        beta,
        horizon,
        initial,
        final_value,
        bound,
    })
}

/// Trapezoidal time integral of `|v|^2_{L2(K)}` over the recorded levels.
pub fn solid_velocity_integral<T: Real>(stats: &TrajectoryStats<T>) -> T {
    let half: T = lit(0.5);
    neumaier_sum(
        stats
            .records
            .windows(2)
            .map(|w| (w[1].t - w[0].t) * half * (w[0].solid_v2 + w[1].solid_v2)),
    )
}

/// Least-squares slope of `ln(integral)` against `ln(eps)`.
pub fn scaling_fit(samples: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(e, v)| *e > 0.0 && *v > 0.0 && e.is_finite() && v.is_finite())
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Err(Error::DegenerateFit { samples: pts.len() });
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit { samples: pts.len() });
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundaryData;
    use crate::phase::{sample_diagram, sample_params};

    fn problem() -> Problem<f64> {
        let grid = Grid::new(8, 8, 1.0, 1.0).unwrap();
        Problem::new(
            grid,
            sample_diagram(),
            sample_params(),
            BoundaryData::uniform(0.5),
        )
        .unwrap()
    }

    fn constant_stats(p: &Problem<f64>, c: f64, levels: usize) -> TrajectoryStats<f64> {
        let mut s = State::zeros(&p.grid);
        s.c = s.c.map(|_| c);
        s.theta = s.theta.map(|_| 0.5);
        let r = StepRecord::from_state(p, &s, None, None).unwrap();
        TrajectoryStats {
            records: vec![r; levels],
        }
    }

    #[test]
    fn constant_admissible_fields_pass() {
        let p = problem();
        let stats = constant_stats(&p, 0.1, 3);
        assert!(check_max_principles(&stats, &p).passed);
    }

    #[test]
    fn injected_violation_is_located() {
        let p = problem();
        let mut stats = constant_stats(&p, 0.1, 4);
        stats.records[2].c_max = 1.5;
        let rep = check_max_principles(&stats, &p);
        assert!(!rep.passed);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].step, 2);
        assert_eq!(rep.violations[0].quantity, "c_max");
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.03, 0.01]
            .iter()
            .map(|&e| (e, 2.0 * e * e * e))
            .collect();
        assert!((scaling_fit(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            scaling_fit(&pts[..1]),
            Err(Error::DegenerateFit { .. })
        ));
    }

    #[test]
    fn fitted_steps_cover_horizon() {
        assert_eq!(fitted_steps(1.0, 0.01), (100, 0.01));
        let (n, dt) = fitted_steps(1.0f64, 0.3);
        assert_eq!(n, 4);
        assert!((dt - 0.25).abs() < 1e-15);
        assert_eq!(fitted_steps(0.0, 0.1).0, 0);
    }

    #[test]
    fn solid_norm_uses_interior_faces_only() {
        let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
        let mut mask = vec![false; 16];
        mask[5] = true;
        mask[6] = true;
        let k = SolidRegion::from_mask(4, 4, mask).unwrap();
        let mut w = g.vector();
        w.set_u(2, 1, 2.0);
        w.set_u(1, 1, 5.0);
        assert_eq!(k.velocity_norm2(&w, &g), 4.0 * g.cell_area());
    }
}
