//! Wall data and boundary conditions.
//!
//! * concentration: zero normal flux on every wall,
//! * temperature: prescribed on the bottom and top walls, adiabatic on the vertical walls,
//! * velocity: no-slip on the bottom and top walls, zero normal velocity and zero
//!   tangential stress on the vertical walls.

use super::{Grid, ScalarField, State, VectorField};
use crate::error::{invalid, Error, Result};
use crate::real::{lit, to_f64, Real};

/// Spatial shape of a wall temperature along `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    Constant(T),
    /// Linear from `left` at `x = 0` to `right` at `x = lx`.
    LinearInX {
        left: T,
        right: T,
    },
    /// Piecewise-linear through `(x[k], values[k])`, constant beyond the end points.
    Tabulated {
        x: Vec<T>,
        values: Vec<T>,
    },
}

impl<T: Real> Profile<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant(v) if !v.is_finite() => {
                Err(invalid("profile", "value must be finite"))
            }
            Profile::LinearInX { left, right } if !(left.is_finite() && right.is_finite()) => {
                Err(invalid("profile", "end values must be finite"))
            }
            Profile::Tabulated { x, values } => {
                if x.is_empty() || x.len() != values.len() {
                    return Err(invalid(
                        "profile",
                        "tabulated breakpoints need matching, nonempty x and values",
                    ));
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(invalid(
                        "profile",
                        "tabulated x must be strictly increasing",
                    ));
                }
                if x.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(invalid("profile", "tabulated entries must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: T, lx: T) -> T {
        match self {
            Profile::Constant(v) => *v,
            Profile::LinearInX { left, right } => *left + (*right - *left) * (x / lx),
            Profile::Tabulated { x: xs, values } => {
                let n = xs.len();
                if x <= xs[0] {
                    return values[0];
                }
                if x >= xs[n - 1] {
                    return values[n - 1];
                }
                let k = xs.partition_point(|&b| b <= x);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let s = (x - x0) / (x1 - x0);
                values[k - 1] + (values[k] - values[k - 1]) * s
            }
        }
    }

    fn range(&self) -> (T, T) {
        match self {
            Profile::Constant(v) => (*v, *v),
            Profile::LinearInX { left, right } => (left.min(*right), left.max(*right)),
            Profile::Tabulated { values, .. } => values
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
        }
    }
}

/// Additive time dependence of a wall temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeModulation<T> {
    Steady,
    /// `amplitude * sin(2 pi t / period + phase)`.
    Sinusoidal {
        amplitude: T,
        period: T,
        phase: T,
    },
}

impl<T: Real> TimeModulation<T> {
    pub fn eval(&self, t: T) -> T {
        match *self {
            TimeModulation::Steady => T::zero(),
            TimeModulation::Sinusoidal {
                amplitude,
                period,
                phase,
            } => amplitude * (T::TAU() * t / period + phase).sin(),
        }
    }

    /// True when the modulation repeats after `horizon`.
    pub fn is_periodic_over(&self, horizon: T) -> bool {
        match *self {
            TimeModulation::Steady => true,
            TimeModulation::Sinusoidal {
                amplitude, period, ..
            } => {
                if amplitude == T::zero() {
                    return true;
                }
                let cycles = horizon / period;
                (cycles - cycles.round()).abs() <= lit::<T>(1e-9) * cycles.abs().max(T::one())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallTemperature<T> {
    pub profile: Profile<T>,
    pub modulation: TimeModulation<T>,
}

impl<T: Real> WallTemperature<T> {
    pub fn constant(value: T) -> Self {
        Self {
            profile: Profile::Constant(value),
            modulation: TimeModulation::Steady,
        }
    }

    pub fn eval(&self, x: T, t: T, lx: T) -> T {
        self.profile.eval(x, lx) + self.modulation.eval(t)
    }

    /// Bounds over all `x` and `t`.
    pub fn bounds(&self) -> (T, T) {
        let (lo, hi) = self.profile.range();
        let amp = match self.modulation {
            TimeModulation::Steady => T::zero(),
            TimeModulation::Sinusoidal { amplitude, .. } => amplitude.abs(),
        };
        (lo - amp, hi + amp)
    }
}

/// Temperature prescribed on the bottom and top walls.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    pub bottom: WallTemperature<T>,
    pub top: WallTemperature<T>,
}

impl<T: Real> BoundaryData<T> {
    pub fn uniform(value: T) -> Self {
        Self {
            bottom: WallTemperature::constant(value),
            top: WallTemperature::constant(value),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for wall in [&self.bottom, &self.top] {
            wall.profile.validate()?;
            if let TimeModulation::Sinusoidal {
                amplitude,
                period,
                phase,
            } = wall.modulation
            {
                if !(period > T::zero() && period.is_finite()) {
                    return Err(invalid("period", "modulation period must be positive"));
                }
                if !(amplitude.is_finite() && phase.is_finite()) {
                    return Err(invalid("amplitude", "modulation must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `theta(., 0) = theta(., horizon)` on both walls.
    pub fn is_periodic_over(&self, horizon: T) -> bool {
        self.bottom.modulation.is_periodic_over(horizon)
            && self.top.modulation.is_periodic_over(horizon)
    }

    /// True when the data does not depend on time or on `x` and vanishes.
    pub fn is_zero(&self) -> bool {
        let zero_wall = |w: &WallTemperature<T>| {
            let (lo, hi) = w.bounds();
            lo == T::zero() && hi == T::zero()
        };
        zero_wall(&self.bottom) && zero_wall(&self.top)
    }

    /// Bounds of the wall data over the whole space-time boundary.
    pub fn bounds(&self) -> (T, T) {
        let (a, b) = self.bottom.bounds();
        let (c, d) = self.top.bounds();
        (a.min(c), b.max(d))
    }

    /// Wall values at the cell-center abscissae, `(bottom, top)`.
    pub fn wall_values(&self, grid: &Grid<T>, t: T) -> Result<(Vec<T>, Vec<T>)> {
        let eval = |wall: &WallTemperature<T>| -> Result<Vec<T>> {
            (0..grid.nx)
                .map(|i| {
                    let x = grid.xc(i);
                    let v = wall.eval(x, t, grid.lx);
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::BoundaryEvaluation {
                            x: to_f64(x),
                            t: to_f64(t),
                        })
                    }
                })
                .collect()
        };
        Ok((eval(&self.bottom)?, eval(&self.top)?))
    }
}

/// Lift of the wall temperature into the mould: linear in `y` between the
/// bottom and top values at each column. Its Dirichlet ghost values coincide
/// with its own linear extension, so `theta - lift` has homogeneous wall data.
pub fn theta_lift<T: Real>(grid: &Grid<T>, bc: &BoundaryData<T>, t: T) -> Result<ScalarField<T>> {
    let (bottom, top) = bc.wall_values(grid, t)?;
    let mut lift = grid.scalar();
    for j in 0..grid.ny {
        let s = grid.yc(j) / grid.ly;
        for i in 0..grid.nx {
            lift[(i, j)] = bottom[i] * (T::one() - s) + top[i] * s;
        }
    }
    Ok(lift)
}

/// Ghost values outside the mould implied by the boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostLayers<T> {
    /// Row below the bottom wall / above the top wall (`nx` values).
    pub c_south: Vec<T>,
    pub c_north: Vec<T>,
    /// Column left of `x = 0` / right of `x = lx` (`ny` values).
    pub c_west: Vec<T>,
    pub c_east: Vec<T>,
    pub theta_south: Vec<T>,
    pub theta_north: Vec<T>,
    pub theta_west: Vec<T>,
    pub theta_east: Vec<T>,
    /// `u` rows mirrored across the bottom/top walls (`nx + 1` values).
    pub u_south: Vec<T>,
    pub u_north: Vec<T>,
    /// `v` columns mirrored across the vertical walls (`ny + 1` values).
    pub v_west: Vec<T>,
    pub v_east: Vec<T>,
}

/// Returns `state` with wall-normal velocities zeroed and the time stamp set,
/// after checking that the wall data can be evaluated at `t`.
pub fn apply_bc<T: Real>(
    state: &State<T>,
    bc: &BoundaryData<T>,
    grid: &Grid<T>,
    t: T,
) -> Result<State<T>> {
    bc.wall_values(grid, t)?;
    let mut out = state.clone();
    zero_normal_velocity(&mut out.vel, grid);
    out.t = t;
    Ok(out)
}

pub(crate) fn zero_normal_velocity<T: Real>(vel: &mut VectorField<T>, grid: &Grid<T>) {
    for j in 0..grid.ny {
        vel.set_u(0, j, T::zero());
        vel.set_u(grid.nx, j, T::zero());
    }
    for i in 0..grid.nx {
        vel.set_v(i, 0, T::zero());
        vel.set_v(i, grid.ny, T::zero());
    }
}

/// Ghost layers of `state` under the wall conditions at time `t`.
pub fn ghost_layers<T: Real>(
    state: &State<T>,
    bc: &BoundaryData<T>,
    grid: &Grid<T>,
    t: T,
) -> Result<GhostLayers<T>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (bottom, top) = bc.wall_values(grid, t)?;
    let two: T = lit(2.0);
    let row = |f: &ScalarField<T>, j: usize| (0..nx).map(|i| f[(i, j)]).collect::<Vec<_>>();
    let col = |f: &ScalarField<T>, i: usize| (0..ny).map(|j| f[(i, j)]).collect::<Vec<_>>();
    Ok(GhostLayers {
        c_south: row(&state.c, 0),
        c_north: row(&state.c, ny - 1),
        c_west: col(&state.c, 0),
        c_east: col(&state.c, nx - 1),
        theta_south: (0..nx)
            .map(|i| two * bottom[i] - state.theta[(i, 0)])
            .collect(),
        theta_north: (0..nx)
            .map(|i| two * top[i] - state.theta[(i, ny - 1)])
            .collect(),
        theta_west: col(&state.theta, 0),
        theta_east: col(&state.theta, nx - 1),
        u_south: (0..=nx).map(|i| -state.vel.u(i, 0)).collect(),
        u_north: (0..=nx).map(|i| -state.vel.u(i, ny - 1)).collect(),
        v_west: (0..=ny).map(|j| state.vel.v(0, j)).collect(),
        v_east: (0..=ny).map(|j| state.vel.v(nx - 1, j)).collect(),
    })
}
