//! Staggered (MAC) discretization of the rectangular mould.
//!
//! Scalars (`c`, `theta`, `p`) live at cell centers. The horizontal velocity
//! `u` lives on vertical cell faces and the vertical velocity `v` on horizontal
//! faces. The bottom wall is `y = 0`, the top wall `y = ly`, and the two vertical
//! walls are `x = 0` and `x = lx`.

mod bc;
mod ops;

pub use bc::{
    apply_bc, ghost_layers, theta_lift, BoundaryData, GhostLayers, Profile, TimeModulation,
    WallTemperature,
};
pub use ops::{
    advect_scalar_flux, advect_velocity_skew, div, grad, laplacian, laplacian_dirichlet_y,
    skew_advection, vector_laplacian,
};

use crate::error::{invalid, Error, Result};
use crate::real::{from_usize, lit, neumaier_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    pub nx: usize,
    pub ny: usize,
    pub lx: T,
    pub ly: T,
    pub dx: T,
    pub dy: T,
}

impl<T: Real> Grid<T> {
    pub fn new(nx: usize, ny: usize, lx: T, ly: T) -> Result<Self> {
        if nx < 4 {
            return Err(invalid("nx", "need at least 4 cells"));
        }
        if ny < 4 {
            return Err(invalid("ny", "need at least 4 cells"));
        }
        if !(lx > T::zero() && lx.is_finite()) {
            return Err(invalid("lx", "must be positive and finite"));
        }
        if !(ly > T::zero() && ly.is_finite()) {
            return Err(invalid("ly", "must be positive and finite"));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx: lx / from_usize(nx),
            dy: ly / from_usize(ny),
        })
    }

    /// `|Omega|`.
    pub fn area(&self) -> T {
        self.lx * self.ly
    }

    pub fn cell_area(&self) -> T {
        self.dx * self.dy
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// x coordinate of cell center column `i`.
    pub fn xc(&self, i: usize) -> T {
        (from_usize::<T>(i) + lit(0.5)) * self.dx
    }

    /// y coordinate of cell center row `j`.
    pub fn yc(&self, j: usize) -> T {
        (from_usize::<T>(j) + lit(0.5)) * self.dy
    }

    pub fn scalar(&self) -> ScalarField<T> {
        ScalarField::zeros(self.nx, self.ny)
    }

    pub fn vector(&self) -> VectorField<T> {
        VectorField::zeros(self.nx, self.ny)
    }

    pub fn scalar_from_fn(&self, f: impl Fn(T, T) -> T) -> ScalarField<T> {
        let mut s = self.scalar();
        for j in 0..self.ny {
            for i in 0..self.nx {
                s[(i, j)] = f(self.xc(i), self.yc(j));
            }
        }
        s
    }

    /// Velocity sampled at the face positions; boundary normal components are left at zero.
    pub fn vector_from_fn(&self, fu: impl Fn(T, T) -> T, fv: impl Fn(T, T) -> T) -> VectorField<T> {
        let mut w = self.vector();
        for j in 0..self.ny {
            for i in 1..self.nx {
                w.set_u(i, j, fu(from_usize::<T>(i) * self.dx, self.yc(j)));
            }
        }
        for j in 1..self.ny {
            for i in 0..self.nx {
                w.set_v(i, j, fv(self.xc(i), from_usize::<T>(j) * self.dy));
            }
        }
        w
    }

    /// Velocity from a stream function given at the interior grid nodes
    /// (`(nx-1) x (ny-1)`, row-major). Nodes on the walls carry zero stream
    /// function, so the result is exactly discretely divergence-free with zero
    /// normal flux through every wall.
    pub fn velocity_from_streamfunction(&self, psi_interior: &[T]) -> Result<VectorField<T>> {
        let (nx, ny) = (self.nx, self.ny);
        let expected = (nx - 1) * (ny - 1);
        if psi_interior.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} interior nodes"),
                found: psi_interior.len().to_string(),
            });
        }
        let psi = |i: usize, j: usize| -> T {
            if i == 0 || j == 0 || i == nx || j == ny {
                T::zero()
            } else {
                psi_interior[(j - 1) * (nx - 1) + (i - 1)]
            }
        };
        let mut w = self.vector();
        for j in 0..ny {
            for i in 1..nx {
                w.set_u(i, j, (psi(i, j + 1) - psi(i, j)) / self.dy);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                w.set_v(i, j, -(psi(i + 1, j) - psi(i, j)) / self.dx);
            }
        }
        Ok(w)
    }
}

/// Cell-centered scalar field, row-major with `i` (x) fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::constant(nx, ny, T::zero())
    }

    pub fn constant(nx: usize, ny: usize, value: T) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", nx * ny),
                found: data.len().to_string(),
            });
        }
        Ok(Self { nx, ny, data })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Unweighted sum of cell values.
    pub fn sum(&self) -> T {
        neumaier_sum(self.data.iter().copied())
    }

    pub fn mean(&self) -> T {
        self.sum() / from_usize(self.data.len())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.nx, self.ny),
                found: format!("{}x{}", other.nx, other.ny),
            });
        }
        Ok(())
    }
}

impl<T> std::ops::Index<(usize, usize)> for ScalarField<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[j * self.nx + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ScalarField<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[j * self.nx + i]
    }
}

/// MAC velocity: `u` on the `(nx+1) x ny` vertical faces, `v` on the
/// `nx x (ny+1)` horizontal faces.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    nx: usize,
    ny: usize,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> VectorField<T> {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            u: vec![T::zero(); (nx + 1) * ny],
            v: vec![T::zero(); nx * (ny + 1)],
        }
    }

    pub fn from_parts(nx: usize, ny: usize, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        if u.len() != (nx + 1) * ny || v.len() != nx * (ny + 1) {
            return Err(Error::ShapeMismatch {
                expected: format!("u {} / v {}", (nx + 1) * ny, nx * (ny + 1)),
                found: format!("u {} / v {}", u.len(), v.len()),
            });
        }
        Ok(Self { nx, ny, u, v })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn u(&self, i: usize, j: usize) -> T {
        self.u[j * (self.nx + 1) + i]
    }

    #[inline]
    pub fn v(&self, i: usize, j: usize) -> T {
        self.v[j * self.nx + i]
    }

    #[inline]
    pub fn set_u(&mut self, i: usize, j: usize, value: T) {
        self.u[j * (self.nx + 1) + i] = value;
    }

    #[inline]
    pub fn set_v(&mut self, i: usize, j: usize, value: T) {
        self.v[j * self.nx + i] = value;
    }

    pub fn u_slice(&self) -> &[T] {
        &self.u
    }

    pub fn v_slice(&self) -> &[T] {
        &self.v
    }

    pub fn u_mut(&mut self) -> &mut [T] {
        &mut self.u
    }

    pub fn v_mut(&mut self) -> &mut [T] {
        &mut self.v
    }

    pub fn max_abs(&self) -> T {
        self.u
            .iter()
            .chain(&self.v)
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_u(&self) -> T {
        self.u.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_v(&self) -> T {
        self.v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            u: self.u.iter().map(|&x| f(x)).collect(),
            v: self.v.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            u: self
                .u
                .iter()
                .zip(&other.u)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.nx, self.ny),
                found: format!("{}x{}", other.nx, other.ny),
            });
        }
        Ok(())
    }
}

/// Weighted L2 structure of a discrete field.
pub trait L2Field<T: Real> {
    /// `(a, b)` in L2(Omega): sum of pointwise products times the cell area.
    fn inner(&self, other: &Self, grid: &Grid<T>) -> Result<T>;

    fn norm2(&self, grid: &Grid<T>) -> T {
        self.inner(self, grid)
            .expect("field is shape-compatible with itself")
    }

    fn norm(&self, grid: &Grid<T>) -> T {
        self.norm2(grid).sqrt()
    }

    fn all_finite(&self) -> bool;
}

impl<T: Real> L2Field<T> for ScalarField<T> {
    fn inner(&self, other: &Self, grid: &Grid<T>) -> Result<T> {
        self.check_shape(other)?;
        let s = neumaier_sum(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b));
        Ok(s * grid.cell_area())
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T: Real> L2Field<T> for VectorField<T> {
    fn inner(&self, other: &Self, grid: &Grid<T>) -> Result<T> {
        self.check_shape(other)?;
        let s = neumaier_sum(
            self.u
                .iter()
                .zip(&other.u)
                .chain(self.v.iter().zip(&other.v))
                .map(|(&a, &b)| a * b),
        );
        Ok(s * grid.cell_area())
    }

    fn all_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|v| v.is_finite())
    }
}

/// `(a, b)` for either field kind.
pub fn inner_product<T: Real, F: L2Field<T>>(a: &F, b: &F, grid: &Grid<T>) -> Result<T> {
    a.inner(b, grid)
}

/// Discrete solution at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub c: ScalarField<T>,
    pub theta: ScalarField<T>,
    pub vel: VectorField<T>,
    pub p: ScalarField<T>,
    pub t: T,
}

impl<T: Real> State<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            c: grid.scalar(),
            theta: grid.scalar(),
            vel: grid.vector(),
            p: grid.scalar(),
            t: T::zero(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.c.all_finite()
            && self.theta.all_finite()
            && self.vel.all_finite()
            && self.p.all_finite()
    }

    /// Combined squared L2 norm of `(c, theta, vel)`; pressure is excluded.
    pub fn norm2(&self, grid: &Grid<T>) -> T {
        self.c.norm2(grid) + self.theta.norm2(grid) + self.vel.norm2(grid)
    }

    /// Squared L2 distance over `(c, theta, vel)`.
    pub fn distance2(&self, other: &Self, grid: &Grid<T>) -> T {
        let dc = self.c.zip_map(&other.c, |a, b| a - b);
        let dt = self.theta.zip_map(&other.theta, |a, b| a - b);
        let dv = self.vel.zip_map(&other.vel, |a, b| a - b);
        dc.norm2(grid) + dt.norm2(grid) + dv.norm2(grid)
    }

    /// Components of the deviation vector `Z = (c - c_total/|Omega|, theta - lift, vel)`.
    pub fn deviation(&self, grid: &Grid<T>, c_total: T, lift: &ScalarField<T>) -> Deviation<T> {
        let c_mean = c_total / grid.area();
        Deviation {
            c: self.c.map(|c| c - c_mean),
            theta: self.theta.zip_map(lift, |a, b| a - b),
            vel: self.vel.clone(),
        }
    }
}

/// Deviation of a state from the mean concentration and the boundary lift.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation<T> {
    pub c: ScalarField<T>,
    pub theta: ScalarField<T>,
    pub vel: VectorField<T>,
}

impl<T: Real> Deviation<T> {
    /// `||Z||^2 = ||c~||^2 + ||theta~||^2 + ||vel||^2`.
    pub fn norm2(&self, grid: &Grid<T>) -> T {
        self.c.norm2(grid) + self.theta.norm2(grid) + self.vel.norm2(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 0.0, 1.0).is_err());
        let g = Grid::new(8, 4, 2.0, 1.0).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.dy, 0.25);
        assert_eq!(g.area(), 2.0);
    }

    #[test]
    fn unit_inner_product_is_area() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let one = ScalarField::constant(16, 16, 1.0);
        assert_abs_diff_eq!(inner_product(&one, &one, &g).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fourier_modes_are_orthogonal() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let f = g.scalar_from_fn(|x, y| (pi * x).cos() * (2.0 * pi * y).cos());
        let h = g.scalar_from_fn(|x, y| (2.0 * pi * x).cos() * (pi * y).cos());
        assert_abs_diff_eq!(inner_product(&f, &h, &g).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let a = ScalarField::<f64>::zeros(8, 8);
        let b = ScalarField::<f64>::zeros(8, 9);
        assert!(matches!(a.inner(&b, &g), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn streamfunction_velocity_has_zero_wall_flux() {
        let g = Grid::new(6, 5, 1.0, 1.0).unwrap();
        let psi: Vec<f64> = (0..20).map(|k| (k as f64 * 0.37).sin()).collect();
        let w = g.velocity_from_streamfunction(&psi).unwrap();
        for j in 0..5 {
            assert_eq!(w.u(0, j), 0.0);
            assert_eq!(w.u(6, j), 0.0);
        }
        for i in 0..6 {
            assert_eq!(w.v(i, 0), 0.0);
            assert_eq!(w.v(i, 5), 0.0);
        }
        let d = div(&w, &g);
        assert!(d.max_abs() < 1e-12);
    }

    #[test]
    fn deviation_norm_is_sum_of_parts() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let mut s = State::zeros(&g);
        s.c = ScalarField::constant(8, 8, 0.3);
        s.theta = g.scalar_from_fn(|x, _| x);
        s.vel.set_u(3, 3, 2.0);
        let lift = ScalarField::constant(8, 8, 0.1);
        let z = s.deviation(&g, 0.1, &lift);
        let expected = z.c.norm2(&g) + z.theta.norm2(&g) + z.vel.norm2(&g);
        assert_eq!(z.norm2(&g), expected);
    }
}
