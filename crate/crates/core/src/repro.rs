//! Period map and reproductive (time-periodic) solutions.

use crate::diagnostics::{fitted_steps, record_trajectory, solid_velocity_integral, SolidRegion};
use crate::error::{invalid, Error, Result};
use crate::field::{theta_lift, State};
use crate::real::{lit, Real};
use crate::stepper::{step, total_solute, Problem, StepConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ReproConfig<T> {
    pub period: T,
    pub fp_tol: T,
    pub fp_max_iter: usize,
    /// Relaxation `omega` of the Picard update.
    pub relaxation: T,
    /// Homotopy parameters, ending at 1.
    pub homotopy: Vec<T>,
    /// Strictly decreasing regularization values for the continuation study.
    pub eps_schedule: Vec<T>,
}

impl<T: Real> ReproConfig<T> {
    pub fn new(period: T) -> Self {
        Self {
            period,
            fp_tol: lit(1e-8),
            fp_max_iter: 200,
            relaxation: T::one(),
            homotopy: vec![T::one()],
            eps_schedule: vec![lit(0.1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > T::zero() && self.period.is_finite()) {
            return Err(invalid("period", "must be positive and finite"));
        }
        if !(self.fp_tol > T::zero()) {
            return Err(invalid("fp_tol", "must be positive"));
        }
        if self.fp_max_iter == 0 {
            return Err(invalid("fp_max_iter", "must be positive"));
        }
        if !(self.relaxation > T::zero() && self.relaxation <= T::one()) {
            return Err(invalid("relaxation", "must lie in (0, 1]"));
        }
        if self.homotopy.is_empty() || self.homotopy.last() != Some(&T::one()) {
            return Err(invalid(
                "homotopy",
                "schedule must be nonempty and end at 1",
            ));
        }
        if self
            .homotopy
            .iter()
            .any(|&l| !(l > T::zero() && l <= T::one()))
        {
            return Err(invalid("homotopy", "values must lie in (0, 1]"));
        }
        if self.eps_schedule.is_empty() {
            return Err(invalid("eps_schedule", "must be nonempty"));
        }
        if self
            .eps_schedule
            .iter()
            .any(|&e| !(e > T::zero() && e <= T::one()))
        {
            return Err(invalid("eps_schedule", "values must lie in (0, 1]"));
        }
        if self.eps_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid(
                "eps_schedule",
                "values must be strictly decreasing",
            ));
        }
        Ok(())
    }
}

/// The period map: advances `x0` over `horizon` with the step adjusted
/// downward so that a whole number of steps fits.
pub fn propagate<T: Real>(
    x0: &State<T>,
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
    horizon: T,
) -> Result<State<T>> {
    let (n, dt) = fitted_steps(horizon, cfg.dt);
    let cfg = StepConfig { dt, ..*cfg };
    let mut state = x0.clone();
    for _ in 0..n {
        state = step(&state, problem, &cfg)?;
    }
    Ok(state)
}

/// Iterations spent at one homotopy parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyStage<T> {
    pub lambda: T,
    pub iterations: usize,
    pub converged: bool,
    /// Last relative defect `|lambda Phi(X) - X| / max(|X|, 1)`.
    pub defect: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport<T> {
    /// Evaluations of the period map over all stages.
    pub iterations: usize,
    /// `|X_{m+1} - X_m| / max(|X_m|, 1)` for every update.
    pub residual_history: Vec<T>,
    pub converged: bool,
    /// Relative defect of the returned state's predecessor at the final stage.
    pub defect: T,
    /// Estimated relative distance of `final_state` from the fixed point.
    pub error_estimate: T,
    /// `lambda Phi(X_m)` of the last evaluated iterate.
    pub final_state: State<T>,
    pub stages: Vec<HomotopyStage<T>>,
    pub eps: T,
}

impl<T: Real> FixedPointReport<T> {
    /// Turns a report that hit the iteration cap into [`Error::NotConverged`].
    pub fn ensure_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: crate::real::to_f64(self.defect),
            })
        }
    }
}

/// A-posteriori estimate `q / (1 - q) * defect` of the distance between
/// `lambda Phi(X_m)` and the fixed point, with the contraction factor `q` of
/// the period map inferred from the last two defects. Infinite while no
/// contraction has been observed.
fn error_estimate<T: Real>(defect: T, prev: Option<T>, omega: T) -> T {
    let Some(prev) = prev else {
        return T::infinity();
    };
    if !(prev > T::zero()) {
        return T::infinity();
    }
    let ratio = defect / prev;
    let q = (ratio - T::one() + omega) / omega;
    if !(q < T::one()) {
        return T::infinity();
    }
    q.max(T::zero()) / (T::one() - q) * defect
}

/// `lambda` applied to the deviation from the mean concentration, the
/// temperature lift at `t = 0`, and the velocity.
fn homotopy_scale<T: Real>(
    x: &State<T>,
    lambda: T,
    c_mean: T,
    lift: &crate::field::ScalarField<T>,
) -> State<T> {
    if lambda == T::one() {
        return x.clone();
    }
    State {
        c: x.c.map(|c| c_mean + lambda * (c - c_mean)),
        theta: x.theta.zip_map(lift, |th, l| l + lambda * (th - l)),
        vel: x.vel.map(|v| lambda * v),
        p: x.p.clone(),
        t: x.t,
    }
}

fn check_preconditions<T: Real>(
    guess: &State<T>,
    problem: &Problem<T>,
    rcfg: &ReproConfig<T>,
) -> Result<()> {
    rcfg.validate()?;
    if !problem.bc.is_periodic_over(rcfg.period) {
        return Err(invalid(
            "period",
            "wall temperature must take equal values at t = 0 and t = period",
        ));
    }
    let total = total_solute(&guess.c, &problem.grid);
    let c_total = problem.params.c_total;
    if (total - c_total).abs() > lit::<T>(1e-9) * c_total.max(T::one()) {
        return Err(invalid(
            "guess",
            "total solute of the guess differs from c_total",
        ));
    }
    if !guess.all_finite() {
        return Err(Error::NonFinite { what: "guess" });
    }
    Ok(())
}

/// Relaxed Picard iteration `X <- (1 - omega) X + omega lambda Phi(X)` for
/// every homotopy parameter, warm-started across parameters.
///
/// A stage stops once the relative defect `|lambda Phi(X) - X| / max(|X|, 1)`
/// and the estimated distance of `lambda Phi(X)` from the fixed point are both
/// at most `fp_tol`. Hitting the iteration cap is not an error: the report comes back with
/// `converged == false`.
pub fn find_reproductive<T: Real>(
    guess: &State<T>,
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
    rcfg: &ReproConfig<T>,
) -> Result<FixedPointReport<T>> {
    cfg.validate()?;
    check_preconditions(guess, problem, rcfg)?;
    let grid = &problem.grid;
    let c_mean = problem.params.c_total / grid.area();
    let lift = theta_lift(grid, &problem.bc, T::zero())?;
    let omega = rcfg.relaxation;

    let mut x = guess.clone();
    x.t = T::zero();
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut stages = Vec::new();
    let mut image = x.clone();
    let mut defect = T::infinity();
    let mut converged = false;

    let mut estimate = T::infinity();
    for &lambda in &rcfg.homotopy {
        let mut prev_defect = None;
        let mut stage_iters = 0;
        converged = false;
        while stage_iters < rcfg.fp_max_iter {
            stage_iters += 1;
            iterations += 1;
            let mut y = propagate(&x, problem, cfg, rcfg.period)?;
            y.t = T::zero();
            image = homotopy_scale(&y, lambda, c_mean, &lift);
            let scale = x.norm2(grid).sqrt().max(T::one());
            defect = image.distance2(&x, grid).sqrt() / scale;
            if !defect.is_finite() {
                return Err(Error::NonFinite {
                    what: "fixed-point iterate",
                });
            }
            let next = if omega == T::one() {
                image.clone()
            } else {
                State {
                    c: x.c
                        .zip_map(&image.c, |a, b| (T::one() - omega) * a + omega * b),
                    theta: x
                        .theta
                        .zip_map(&image.theta, |a, b| (T::one() - omega) * a + omega * b),
                    vel: x
                        .vel
                        .zip_map(&image.vel, |a, b| (T::one() - omega) * a + omega * b),
                    p: image.p.clone(),
                    t: T::zero(),
                }
            };
            history.push(omega * defect);
            x = next;
            estimate = error_estimate(defect, prev_defect, omega);
            prev_defect = Some(defect);
            if defect == T::zero() || (defect <= rcfg.fp_tol && estimate <= rcfg.fp_tol) {
                converged = true;
                break;
            }
        }
        stages.push(HomotopyStage {
            lambda,
            iterations: stage_iters,
            converged,
            defect,
        });
    }

    Ok(FixedPointReport {
        iterations,
        residual_history: history,
        converged,
        defect,
        error_estimate: estimate,
        final_state: image,
        stages,
        eps: cfg.eps,
    })
}

/// Outcome of the reproductive search at one regularization value.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRun<T> {
    pub eps: T,
    pub report: Option<FixedPointReport<T>>,
    /// `int_0^T |v|^2_{L2(K)} dt` along the converged cycle.
    pub solid_velocity_integral: Option<T>,
    /// Error or non-convergence encountered at this value.
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation<T> {
    pub runs: Vec<EpsRun<T>>,
    /// Region frozen from the first converged solution.
    pub solid_region: Option<SolidRegion>,
}

impl<T: Real> Continuation<T> {
    /// `(eps, integral)` pairs of the successful runs.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.runs
            .iter()
            .filter(|r| r.failure.is_none())
            .filter_map(|r| {
                r.solid_velocity_integral
                    .map(|v| (crate::real::to_f64(r.eps), crate::real::to_f64(v)))
            })
            .collect()
    }
}

/// Reproductive solutions along the decreasing `eps` schedule, each warm-started
/// from the previous one, with the solid-region velocity integral of each cycle.
pub fn eps_continuation<T: Real>(
    guess: &State<T>,
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
    rcfg: &ReproConfig<T>,
) -> Result<Continuation<T>> {
    rcfg.validate()?;
    let mut start = guess.clone();
    let mut runs = Vec::with_capacity(rcfg.eps_schedule.len());
    let mut region: Option<SolidRegion> = None;
    for &eps in &rcfg.eps_schedule {
        let cfg_eps = StepConfig { eps, ..*cfg };
        let report = match find_reproductive(&start, problem, &cfg_eps, rcfg) {
            Ok(r) => r,
            Err(e) => {
                runs.push(EpsRun {
                    eps,
                    report: None,
                    solid_velocity_integral: None,
                    failure: Some(e),
                });
                continue;
            }
        };
        let mut failure = report.ensure_converged().err();
        if region.is_none() && report.converged {
            region = Some(SolidRegion::from_state(problem, &report.final_state));
        }
        let integral = match &region {
            Some(k) if k.is_empty() => {
                failure.get_or_insert(Error::EmptySolidRegion);
                None
            }
            Some(k) => match record_trajectory(
                &report.final_state,
                problem,
                &cfg_eps,
                rcfg.period,
                Some(k),
            ) {
                Ok((_, stats)) => Some(solid_velocity_integral(&stats)),
                Err(e) => {
                    failure.get_or_insert(e);
                    None
                }
            },
            None => None,
        };
        start = report.final_state.clone();
        runs.push(EpsRun {
            eps,
            report: Some(report),
            solid_velocity_integral: integral,
            failure,
        });
    }
    Ok(Continuation {
        runs,
        solid_region: region,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        let mut r = ReproConfig::new(1.0);
        assert!(r.validate().is_ok());
        r.homotopy = vec![0.5];
        assert!(r.validate().is_err());
        r.homotopy = vec![0.5, 1.0];
        r.eps_schedule = vec![0.1, 0.1];
        assert!(r.validate().is_err());
        r.eps_schedule = vec![0.1, 0.01];
        r.relaxation = 0.0;
        assert!(r.validate().is_err());
    }
}
