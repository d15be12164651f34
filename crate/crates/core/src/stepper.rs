//! Semi-implicit time stepping of the regularized system.
//!
//! One step from `t` to `t + dt`:
//!
//! 1. concentration: explicit upwind transport of `c_l(c, theta)`, implicit diffusion;
//! 2. temperature: explicit upwind transport, implicit diffusion with the wall
//!    temperature of the new time level;
//! 3. momentum predictor with implicit viscosity and Carman-Kozeny drag;
//! 4. projection onto discretely solenoidal fields, weighted by the drag factor.

use crate::error::{invalid, Error, Result};
use crate::field::{
    advect_scalar_flux, advect_velocity_skew, div, laplacian, laplacian_dirichlet_y, theta_lift,
    vector_laplacian, BoundaryData, Grid, L2Field, ScalarField, State, VectorField,
};
use crate::linalg::{pcg, SolveOptions, Stencil5};
use crate::phase::{buoyancy_y, drag, PhaseDiagram, PhysicalParams};
use crate::real::{from_usize, lit, neumaier_sum, Real};

/// Coefficient multiplying the time derivative of the velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentumTimeCoeff {
    #[default]
    Unit,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig<T> {
    pub dt: T,
    /// Carman-Kozeny regularization.
    pub eps: T,
    pub cfl_max: T,
    pub elliptic_tol: T,
    pub elliptic_max_iter: usize,
    pub momentum_time_coeff: MomentumTimeCoeff,
}

impl<T: Real> StepConfig<T> {
    pub fn new(dt: T, eps: T) -> Self {
        Self {
            dt,
            eps,
            cfl_max: lit(0.5),
            elliptic_tol: lit(1e-11),
            elliptic_max_iter: 5000,
            momentum_time_coeff: MomentumTimeCoeff::Unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.eps > T::zero() && self.eps <= T::one()) {
            return Err(invalid("eps", "must lie in (0, 1]"));
        }
        if !(self.cfl_max > T::zero() && self.cfl_max.is_finite()) {
            return Err(invalid("cfl_max", "must be positive and finite"));
        }
        if !(self.elliptic_tol > T::zero() && self.elliptic_tol < T::one()) {
            return Err(invalid("elliptic_tol", "must lie in (0, 1)"));
        }
        if self.elliptic_max_iter == 0 {
            return Err(invalid("elliptic_max_iter", "must be positive"));
        }
        Ok(())
    }

    /// Value of the momentum time coefficient `m`.
    pub fn mass(&self, pp: &PhysicalParams<T>) -> T {
        match self.momentum_time_coeff {
            MomentumTimeCoeff::Unit => T::one(),
            MomentumTimeCoeff::Density => pp.rho,
        }
    }

    fn solve_options(&self, singular: bool) -> SolveOptions<T> {
        // the projection targets an absolute divergence bound
        SolveOptions {
            rel_tol: if singular {
                T::max_value()
            } else {
                self.elliptic_tol
            },
            abs_inf_tol: if singular {
                Some(self.elliptic_tol)
            } else {
                None
            },
            max_iter: self.elliptic_max_iter,
            singular,
        }
    }
}

/// Grid, closures, physical constants and wall data of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<T> {
    pub grid: Grid<T>,
    pub phase: PhaseDiagram<T>,
    pub params: PhysicalParams<T>,
    pub bc: BoundaryData<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(
        grid: Grid<T>,
        phase: PhaseDiagram<T>,
        params: PhysicalParams<T>,
        bc: BoundaryData<T>,
    ) -> Result<Self> {
        phase.validate()?;
        params.validate(&phase, grid.area())?;
        bc.validate()?;
        Ok(Self {
            grid,
            phase,
            params,
            bc,
        })
    }

    /// Cellwise `c_l(c, theta)`.
    pub fn liquid_concentration(&self, state: &State<T>) -> ScalarField<T> {
        state
            .c
            .zip_map(&state.theta, |c, th| self.phase.liquid_concentration(c, th))
    }

    /// Cellwise solid fraction.
    pub fn solid_fraction(&self, state: &State<T>) -> ScalarField<T> {
        state
            .c
            .zip_map(&state.theta, |c, th| self.phase.solid_fraction(c, th))
    }

    /// Cellwise regularized Carman-Kozeny coefficient.
    pub fn drag_field(&self, state: &State<T>, eps: T) -> ScalarField<T> {
        let c0 = self.params.carman_kozeny;
        self.solid_fraction(state).map(|fs| drag(c0, fs, eps))
    }

    /// Vertical Boussinesq force at cell centers.
    pub fn buoyancy_field(&self, state: &State<T>) -> ScalarField<T> {
        state.c.zip_map(&state.theta, |c, th| {
            buoyancy_y(&self.params, &self.phase, c, th)
        })
    }
}

/// Terms of the discrete energy inequality
/// `|Z|^2_{n+1} + dt D_{n+1} <= |Z|^2_n + dt (A_n |Z|^2_n + B_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms<T> {
    /// `A_n`.
    pub growth: T,
    /// `B_n`.
    pub forcing: T,
    /// `D_{n+1} = eta |grad c|^2 + kappa |grad theta~|^2 + (nu/m) |grad v*|^2`.
    pub dissipation: T,
    /// `-(F v*, v*)`, never positive.
    pub penalty_work: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport<T> {
    /// Time level reached.
    pub t: T,
    /// `max(|u| dt/dx, |v| dt/dy)` of the transporting velocity.
    pub cfl: T,
    /// Largest cell outflow fraction times the transport amplification.
    pub transport_cfl: T,
    pub energy: EnergyTerms<T>,
    pub div_inf: T,
    pub iterations: usize,
}

/// `max(|u| dt/dx, |v| dt/dy)`.
pub fn cfl_number<T: Real>(vel: &VectorField<T>, grid: &Grid<T>, dt: T) -> T {
    (vel.max_abs_u() * dt / grid.dx).max(vel.max_abs_v() * dt / grid.dy)
}

/// Largest fraction of a cell's content that upwind transport removes in one step.
fn outflow_fraction<T: Real>(vel: &VectorField<T>, grid: &Grid<T>, dt: T) -> T {
    let mut worst = T::zero();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let out = vel.u(i + 1, j).max(T::zero()) / grid.dx
                + (-vel.u(i, j)).max(T::zero()) / grid.dx
                + vel.v(i, j + 1).max(T::zero()) / grid.dy
                + (-vel.v(i, j)).max(T::zero()) / grid.dy;
            worst = worst.max(out);
        }
    }
    worst * dt
}

/// Wall conditions of a cell-centered Helmholtz problem.
#[derive(Debug, Clone, Copy)]
pub enum ScalarBc<'a, T> {
    /// Zero normal derivative on every wall.
    Neumann,
    /// Values on the bottom and top walls (one per column), zero normal derivative on the vertical walls.
    DirichletY { bottom: &'a [T], top: &'a [T] },
}

fn scalar_matrix<T: Real>(
    grid: &Grid<T>,
    coeff: &ScalarField<T>,
    k: T,
    dirichlet: bool,
) -> Stencil5<T> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (wx, wy) = (k / (grid.dx * grid.dx), k / (grid.dy * grid.dy));
    let mut a = Stencil5::zeros(nx, ny);
    a.diag.copy_from_slice(coeff.as_slice());
    for j in 0..ny {
        for i in 0..nx {
            let m = j * nx + i;
            if i + 1 < nx {
                a.couple_east(m, wx);
            }
            if j + 1 < ny {
                a.couple_north(m, wy);
            }
        }
    }
    if dirichlet {
        let two: T = lit(2.0);
        for i in 0..nx {
            a.diag[i] = a.diag[i] + two * wy;
            a.diag[(ny - 1) * nx + i] = a.diag[(ny - 1) * nx + i] + two * wy;
        }
    }
    a
}

/// Solves `coeff x - dt_diffusivity * Laplacian(x) = rhs` under `bc`, starting from `guess`.
///
/// The residual satisfies `|r|_2 <= cfg.elliptic_tol |rhs|_2`, with the wall
/// values of a Dirichlet condition folded into the right-hand side.
pub fn solve_helmholtz<T: Real>(
    grid: &Grid<T>,
    guess: &ScalarField<T>,
    coeff: &ScalarField<T>,
    dt_diffusivity: T,
    rhs: &ScalarField<T>,
    bc: ScalarBc<'_, T>,
    cfg: &StepConfig<T>,
) -> Result<ScalarField<T>> {
    solve_helmholtz_counted(
        grid,
        guess,
        coeff,
        dt_diffusivity,
        rhs,
        bc,
        cfg,
        "helmholtz",
    )
    .map(|(x, _)| x)
}

#[allow(clippy::too_many_arguments)]
fn solve_helmholtz_counted<T: Real>(
    grid: &Grid<T>,
    guess: &ScalarField<T>,
    coeff: &ScalarField<T>,
    k: T,
    rhs: &ScalarField<T>,
    bc: ScalarBc<'_, T>,
    cfg: &StepConfig<T>,
    system: &'static str,
) -> Result<(ScalarField<T>, usize)> {
    if coeff.as_slice().iter().any(|&a| !(a > T::zero())) || k < T::zero() {
        return Err(invalid(
            "coeff",
            "Helmholtz operator must be positive definite",
        ));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let dirichlet = matches!(bc, ScalarBc::DirichletY { .. });
    let a = scalar_matrix(grid, coeff, k, dirichlet);
    let mut b = rhs.as_slice().to_vec();
    if let ScalarBc::DirichletY { bottom, top } = bc {
        if bottom.len() != nx || top.len() != nx {
            return Err(Error::ShapeMismatch {
                expected: format!("{nx} wall values"),
                found: format!("{} / {}", bottom.len(), top.len()),
            });
        }
        let w: T = lit::<T>(2.0) * k / (grid.dy * grid.dy);
        for i in 0..nx {
            b[i] = b[i] + w * bottom[i];
            b[(ny - 1) * nx + i] = b[(ny - 1) * nx + i] + w * top[i];
        }
    }
    let mut x = guess.as_slice().to_vec();
    let stats = pcg(&a, &b, &mut x, cfg.solve_options(false), system)?;
    Ok((ScalarField::from_vec(nx, ny, x)?, stats.iterations))
}

/// Advances `state` by one step.
pub fn step<T: Real>(
    state: &State<T>,
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
) -> Result<State<T>> {
    step_with_report(state, problem, cfg).map(|(s, _)| s)
}

/// Advances `state` by one step and reports the energy terms of the step.
pub fn step_with_report<T: Real>(
    state: &State<T>,
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
) -> Result<(State<T>, StepReport<T>)> {
    let grid = &problem.grid;
    let (pd, pp, bc) = (&problem.phase, &problem.params, &problem.bc);
    let (nx, ny) = (grid.nx, grid.ny);
    let dt = cfg.dt;
    let m = cfg.mass(pp);
    let t_new = state.t + dt;
    let vel = &state.vel;
    let rho_cp = pp.rho * pp.heat_capacity;

    let cfl = cfl_number(vel, grid, dt);
    if !cfl.is_finite() {
        return Err(Error::NonFinite { what: "velocity" });
    }
    if cfl > cfg.cfl_max {
        return Err(Error::CflExceeded {
            measure: "cfl",
            value: crate::real::to_f64(cfl),
            limit: crate::real::to_f64(cfg.cfl_max),
        });
    }
    let amplification = T::one().max(rho_cp).max(pd.transport_amplification());
    let transport_cfl = outflow_fraction(vel, grid, dt) * amplification;
    if transport_cfl > T::one() {
        return Err(Error::CflExceeded {
            measure: "transport outflow",
            value: crate::real::to_f64(transport_cfl),
            limit: 1.0,
        });
    }

    let mut iterations = 0;
    let ones = ScalarField::constant(nx, ny, T::one());

    // concentration
    let cl = problem.liquid_concentration(state);
    let c_star = state
        .c
        .zip_map(&advect_scalar_flux(vel, &cl, grid), |c, a| c - dt * a);
    let (mut c_new, it) = solve_helmholtz_counted(
        grid,
        &state.c,
        &ones,
        dt * pp.eta,
        &c_star,
        ScalarBc::Neumann,
        cfg,
        "concentration",
    )?;
    iterations += it;
    restore_total(&mut c_new, state.c.sum());

    // temperature
    let (bottom, top) = bc.wall_values(grid, t_new)?;
    let theta_star = state
        .theta
        .zip_map(&advect_scalar_flux(vel, &state.theta, grid), |th, a| {
            th - dt * rho_cp * a
        });
    let (theta_new, it) = solve_helmholtz_counted(
        grid,
        &state.theta,
        &ones,
        dt * pp.kappa,
        &theta_star,
        ScalarBc::DirichletY {
            bottom: &bottom,
            top: &top,
        },
        cfg,
        "temperature",
    )?;
    iterations += it;

    // momentum predictor
    let drag_cells = problem.drag_field(state, cfg.eps);
    let force_cells = problem.buoyancy_field(state);
    let conv = advect_velocity_skew(vel, grid);
    let half: T = lit(0.5);
    let mut drag_faces = grid.vector();
    let mut force_faces = grid.vector();
    for j in 0..ny {
        for i in 1..nx {
            drag_faces.set_u(i, j, half * (drag_cells[(i - 1, j)] + drag_cells[(i, j)]));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            drag_faces.set_v(i, j, half * (drag_cells[(i, j - 1)] + drag_cells[(i, j)]));
            force_faces.set_v(i, j, half * (force_cells[(i, j - 1)] + force_cells[(i, j)]));
        }
    }
    let weight = drag_faces.map(|f| T::one() + dt * f / m);
    let nu_m = pp.nu / m;
    let rhs = vel
        .zip_map(&conv, |w, n| w - dt * pp.rho / m * n)
        .zip_map(&force_faces, |w, f| w + dt / m * f);
    let (v_star, it) = solve_momentum(grid, vel, &weight, dt * nu_m, &rhs, cfg)?;
    iterations += it;

    // projection
    let (vel_new, psi, it) = project(grid, &v_star, &weight, &state.p.map(|p| p * dt), cfg)?;
    iterations += it;
    let div_inf = div(&vel_new, grid).max_abs();

    let next = State {
        c: c_new,
        theta: theta_new,
        vel: vel_new,
        p: psi.map(|x| x / dt),
        t: t_new,
    };
    if !next.all_finite() {
        return Err(Error::NonFinite { what: "state" });
    }

    let energy = energy_terms(
        problem,
        cfg,
        EnergyInputs {
            state,
            next: &next,
            cl: &cl,
            conv: &conv,
            force_faces: &force_faces,
            drag_faces: &drag_faces,
            v_star: &v_star,
            bottom: &bottom,
            top: &top,
        },
    )?;

    Ok((
        next,
        StepReport {
            t: t_new,
            cfl,
            transport_cfl,
            energy,
            div_inf,
            iterations,
        },
    ))
}

/// Shifts `c` by a constant so that its cell sum equals `target`.
fn restore_total<T: Real>(c: &mut ScalarField<T>, target: T) {
    let n: T = from_usize(c.as_slice().len());
    for _ in 0..2 {
        let shift = (target - c.sum()) / n;
        if shift == T::zero() {
            break;
        }
        c.as_mut_slice().iter_mut().for_each(|v| *v = *v + shift);
    }
}

/// Matrices of `weight w - k Laplacian(w)` for the interior `u` and `v` faces.
///
/// `u` vanishes on the vertical walls and obeys no-slip on the bottom/top
/// walls; `v` vanishes on the bottom/top walls and is mirrored across the
/// vertical walls. Without `weight` the identity part is dropped.
pub(crate) fn velocity_matrices<T: Real>(
    grid: &Grid<T>,
    weight: Option<&VectorField<T>>,
    k: T,
) -> (Stencil5<T>, Stencil5<T>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (wx, wy) = (k / (grid.dx * grid.dx), k / (grid.dy * grid.dy));
    let two: T = lit(2.0);

    let mx = nx - 1;
    let mut au = Stencil5::zeros(mx, ny);
    for j in 0..ny {
        for i in 1..nx {
            let m = j * mx + (i - 1);
            if let Some(w) = weight {
                au.diag[m] = au.diag[m] + w.u(i, j);
            }
            if i + 1 < nx {
                au.couple_east(m, wx);
            }
            if j + 1 < ny {
                au.couple_north(m, wy);
            }
            if i == 1 {
                au.diag[m] = au.diag[m] + wx;
            }
            if i == nx - 1 {
                au.diag[m] = au.diag[m] + wx;
            }
            if j == 0 {
                au.diag[m] = au.diag[m] + two * wy;
            }
            if j == ny - 1 {
                au.diag[m] = au.diag[m] + two * wy;
            }
        }
    }

    let my = ny - 1;
    let mut av = Stencil5::zeros(nx, my);
    for j in 1..ny {
        for i in 0..nx {
            let m = (j - 1) * nx + i;
            if let Some(w) = weight {
                av.diag[m] = av.diag[m] + w.v(i, j);
            }
            if i + 1 < nx {
                av.couple_east(m, wx);
            }
            if j + 1 < ny {
                av.couple_north(m, wy);
            }
            if j == 1 {
                av.diag[m] = av.diag[m] + wy;
            }
            if j == ny - 1 {
                av.diag[m] = av.diag[m] + wy;
            }
        }
    }
    (au, av)
}

/// Solves `weight w - k Laplacian(w) = rhs` for both velocity components.
fn solve_momentum<T: Real>(
    grid: &Grid<T>,
    guess: &VectorField<T>,
    weight: &VectorField<T>,
    k: T,
    rhs: &VectorField<T>,
    cfg: &StepConfig<T>,
) -> Result<(VectorField<T>, usize)> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (au, av) = velocity_matrices(grid, Some(weight), k);
    let mut out = grid.vector();

    let mx = nx - 1;
    let mut b = vec![T::zero(); mx * ny];
    let mut x = vec![T::zero(); mx * ny];
    for j in 0..ny {
        for i in 1..nx {
            b[j * mx + i - 1] = rhs.u(i, j);
            x[j * mx + i - 1] = guess.u(i, j);
        }
    }
    let su = pcg(&au, &b, &mut x, cfg.solve_options(false), "momentum u")?;
    for j in 0..ny {
        for i in 1..nx {
            out.set_u(i, j, x[j * mx + i - 1]);
        }
    }

    let mut b = vec![T::zero(); nx * (ny - 1)];
    let mut x = vec![T::zero(); nx * (ny - 1)];
    for j in 1..ny {
        for i in 0..nx {
            b[(j - 1) * nx + i] = rhs.v(i, j);
            x[(j - 1) * nx + i] = guess.v(i, j);
        }
    }
    let sv = pcg(&av, &b, &mut x, cfg.solve_options(false), "momentum v")?;
    for j in 1..ny {
        for i in 0..nx {
            out.set_v(i, j, x[(j - 1) * nx + i]);
        }
    }
    Ok((out, su.iterations + sv.iterations))
}

/// Weighted projection: finds `psi` with `div(v* - a grad psi) = 0`, `a = 1/weight`.
fn project<T: Real>(
    grid: &Grid<T>,
    v_star: &VectorField<T>,
    weight: &VectorField<T>,
    guess: &ScalarField<T>,
    cfg: &StepConfig<T>,
) -> Result<(VectorField<T>, ScalarField<T>, usize)> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (idx2, idy2) = (
        T::one() / (grid.dx * grid.dx),
        T::one() / (grid.dy * grid.dy),
    );
    let mut a = Stencil5::zeros(nx, ny);
    for j in 0..ny {
        for i in 0..nx {
            let m = j * nx + i;
            if i + 1 < nx {
                a.couple_east(m, idx2 / weight.u(i + 1, j));
            }
            if j + 1 < ny {
                a.couple_north(m, idy2 / weight.v(i, j + 1));
            }
        }
    }
    let b: Vec<T> = div(v_star, grid).as_slice().iter().map(|&d| -d).collect();
    let mut psi = guess.as_slice().to_vec();
    let stats = pcg(&a, &b, &mut psi, cfg.solve_options(true), "projection")?;
    let psi = ScalarField::from_vec(nx, ny, psi)?;
    let mut out = v_star.clone();
    for j in 0..ny {
        for i in 1..nx {
            let g = (psi[(i, j)] - psi[(i - 1, j)]) / grid.dx;
            out.set_u(i, j, v_star.u(i, j) - g / weight.u(i, j));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let g = (psi[(i, j)] - psi[(i, j - 1)]) / grid.dy;
            out.set_v(i, j, v_star.v(i, j) - g / weight.v(i, j));
        }
    }
    Ok((out, psi, stats.iterations))
}

/// Smallest eigenvalue of `-d^2/dy^2` on cell centers with homogeneous
/// Dirichlet conditions at the bottom and top walls; bounds the discrete
/// Poincare constant of temperature deviations and of velocities.
pub fn dirichlet_y_eigenvalue<T: Real>(grid: &Grid<T>) -> T {
    let s = (T::PI() * grid.dy / (lit::<T>(2.0) * grid.ly)).sin();
    lit::<T>(4.0) * s * s / (grid.dy * grid.dy)
}

/// `-(Laplacian_0 s, s)`, the squared discrete gradient norm with homogeneous
/// Dirichlet values on the bottom and top walls.
pub(crate) fn grad_norm2_dirichlet<T: Real>(s: &ScalarField<T>, grid: &Grid<T>) -> T {
    let zeros = vec![T::zero(); grid.nx];
    -laplacian_dirichlet_y(s, grid, &zeros, &zeros)
        .inner(s, grid)
        .expect("same grid")
}

pub(crate) fn grad_norm2_neumann<T: Real>(s: &ScalarField<T>, grid: &Grid<T>) -> T {
    -laplacian(s, grid).inner(s, grid).expect("same grid")
}

pub(crate) fn grad_norm2_vector<T: Real>(w: &VectorField<T>, grid: &Grid<T>) -> T {
    -vector_laplacian(w, grid).inner(w, grid).expect("same grid")
}

struct EnergyInputs<'a, T> {
    state: &'a State<T>,
    next: &'a State<T>,
    cl: &'a ScalarField<T>,
    conv: &'a VectorField<T>,
    force_faces: &'a VectorField<T>,
    drag_faces: &'a VectorField<T>,
    v_star: &'a VectorField<T>,
    bottom: &'a [T],
    top: &'a [T],
}

fn energy_terms<T: Real>(
    problem: &Problem<T>,
    cfg: &StepConfig<T>,
    e: EnergyInputs<'_, T>,
) -> Result<EnergyTerms<T>> {
    let grid = &problem.grid;
    let pp = &problem.params;
    let dt = cfg.dt;
    let m = cfg.mass(pp);
    let nu_m = pp.nu / m;
    let three: T = lit(3.0);
    let rho_cp = pp.rho * pp.heat_capacity;
    let poincare = T::one() / dirichlet_y_eigenvalue(grid);

    let lift_old = theta_lift(grid, &problem.bc, e.state.t)?;
    let lift_new = theta_lift(grid, &problem.bc, e.next.t)?;
    let lift_rate = lift_new.zip_map(&lift_old, |a, b| (a - b) / dt);
    let lift_lap = laplacian_dirichlet_y(&lift_new, grid, e.bottom, e.top);
    let theta_dev = e.next.theta.zip_map(&lift_new, |a, b| a - b);

    let cl_max = e.cl.max_abs();
    let rcp_theta = rho_cp * e.state.theta.max_abs();
    let growth = cl_max * cl_max / pp.eta + three * rcp_theta * rcp_theta / pp.kappa;

    let rho_m = pp.rho / m;
    let force_m = e.force_faces.map(|f| f / m);
    let forcing = three * poincare * lift_rate.norm2(grid) / pp.kappa
        + three * pp.kappa * poincare * lift_lap.norm2(grid)
        + dt * rho_m * rho_m * e.conv.norm2(grid)
        + poincare * force_m.norm2(grid) / nu_m;

    let dissipation = pp.eta * grad_norm2_neumann(&e.next.c, grid)
        + pp.kappa * grad_norm2_dirichlet(&theta_dev, grid)
        + nu_m * grad_norm2_vector(e.v_star, grid);

    let weighted = e.v_star.zip_map(e.drag_faces, |w, f| w * f);
    let penalty_work = -weighted.inner(e.v_star, grid)?;

    Ok(EnergyTerms {
        growth,
        forcing,
        dissipation,
        penalty_work,
    })
}

/// Cell sum of `c` times the cell area.
pub fn total_solute<T: Real>(c: &ScalarField<T>, grid: &Grid<T>) -> T {
    neumaier_sum(c.as_slice().iter().copied()) * grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundaryData;
    use crate::phase::{sample_diagram, sample_params};

    fn problem(gravity: f64) -> Problem<f64> {
        let grid = Grid::new(12, 10, 1.0, 1.0).unwrap();
        let mut pp = sample_params();
        pp.gravity = gravity;
        Problem::new(grid, sample_diagram(), pp, BoundaryData::uniform(0.5)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(StepConfig::new(0.0, 0.1).validate().is_err());
        assert!(StepConfig::new(0.01, 0.0).validate().is_err());
        assert!(StepConfig::new(0.01, 1.5).validate().is_err());
        assert!(StepConfig::new(0.01, 1.0).validate().is_ok());
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let p = problem(0.0);
        let mut s = State::zeros(&p.grid);
        s.theta = ScalarField::constant(12, 10, 0.5);
        s.vel.set_u(5, 5, 100.0);
        let cfg = StepConfig::new(0.01, 0.1);
        assert!(matches!(step(&s, &p, &cfg), Err(Error::CflExceeded { .. })));
    }

    #[test]
    fn penalty_work_is_nonpositive() {
        let p = problem(1.0);
        let mut s = State::zeros(&p.grid);
        s.c = ScalarField::constant(12, 10, 0.1);
        s.theta = p.grid.scalar_from_fn(|x, _| 0.3 + 0.4 * x);
        let cfg = StepConfig::new(0.01, 0.1);
        let (_, rep) = step_with_report(&s, &p, &cfg).unwrap();
        assert!(rep.energy.penalty_work <= 0.0);
        assert!(rep.div_inf <= 1e-10);
    }

    #[test]
    fn eigenvalue_closed_form_approaches_continuum() {
        let g = Grid::new(64, 256, 1.0, 2.0).unwrap();
        let lam = dirichlet_y_eigenvalue(&g);
        let exact = (std::f64::consts::PI / 2.0).powi(2);
        assert!((lam - exact).abs() / exact < 1e-4);
    }
}
