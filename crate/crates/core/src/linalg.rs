//! Sparse symmetric five-point systems and a preconditioned conjugate-gradient solver.

use crate::error::{Error, Result};
use crate::real::{from_usize, neumaier_sum, to_f64, Real};

/// Symmetric five-point matrix on an `mx x my` lattice, row-major.
///
/// `east[k]` couples `k` with `k + 1` (zero on the last column), `north[k]`
/// couples `k` with `k + mx` (zero on the last row).
#[derive(Debug, Clone)]
pub(crate) struct Stencil5<T> {
    pub mx: usize,
    pub my: usize,
    pub diag: Vec<T>,
    pub east: Vec<T>,
    pub north: Vec<T>,
}

impl<T: Real> Stencil5<T> {
    pub fn zeros(mx: usize, my: usize) -> Self {
        let n = mx * my;
        Self {
            mx,
            my,
            diag: vec![T::zero(); n],
            east: vec![T::zero(); n],
            north: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.mx * self.my
    }

    /// Adds a symmetric coupling of strength `w` between `k` and its east
    /// neighbour, as for the term `w (x_k - x_{k+1})^2 / 2` in an energy.
    pub fn couple_east(&mut self, k: usize, w: T) {
        self.east[k] = self.east[k] - w;
        self.diag[k] = self.diag[k] + w;
        self.diag[k + 1] = self.diag[k + 1] + w;
    }

    pub fn couple_north(&mut self, k: usize, w: T) {
        let mx = self.mx;
        self.north[k] = self.north[k] - w;
        self.diag[k] = self.diag[k] + w;
        self.diag[k + mx] = self.diag[k + mx] + w;
    }

    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let mx = self.mx;
        let n = self.len();
        for k in 0..n {
            let mut s = self.diag[k] * x[k];
            if k + 1 < n {
                s = s + self.east[k] * x[k + 1];
            }
            if k >= 1 {
                s = s + self.east[k - 1] * x[k - 1];
            }
            if k + mx < n {
                s = s + self.north[k] * x[k + mx];
            }
            if k >= mx {
                s = s + self.north[k - mx] * x[k - mx];
            }
            y[k] = s;
        }
    }
}

/// Incomplete Cholesky factor without fill, `M = (D + L) D^-1 (D + L^T)`.
struct IncompleteCholesky<T> {
    pivots: Vec<T>,
}

impl<T: Real> IncompleteCholesky<T> {
    fn new(a: &Stencil5<T>) -> Self {
        let mx = a.mx;
        let n = a.len();
        let mut pivots = vec![T::zero(); n];
        let floor = T::unit_roundoff().sqrt();
        for k in 0..n {
            let mut d = a.diag[k];
            if k >= 1 {
                d = d - a.east[k - 1] * a.east[k - 1] / pivots[k - 1];
            }
            if k >= mx {
                d = d - a.north[k - mx] * a.north[k - mx] / pivots[k - mx];
            }
            // singular systems can leave a vanishing last pivot
            if !(d > floor * a.diag[k]) {
                d = a.diag[k];
            }
            pivots[k] = d;
        }
        Self { pivots }
    }

    fn solve(&self, a: &Stencil5<T>, r: &[T], z: &mut [T]) {
        let mx = a.mx;
        let n = a.len();
        for k in 0..n {
            let mut s = r[k];
            if k >= 1 {
                s = s - a.east[k - 1] * z[k - 1];
            }
            if k >= mx {
                s = s - a.north[k - mx] * z[k - mx];
            }
            z[k] = s / self.pivots[k];
        }
        for k in (0..n).rev() {
            let mut s = T::zero();
            if k + 1 < n {
                s = s + a.east[k] * z[k + 1];
            }
            if k + mx < n {
                s = s + a.north[k] * z[k + mx];
            }
            z[k] = z[k] - s / self.pivots[k];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolveOptions<T> {
    /// Stop once `||r||_2 <= rel_tol ||b||_2` ...
    pub rel_tol: T,
    /// ... and, when set, `||r||_inf <= abs_inf_tol`.
    pub abs_inf_tol: Option<T>,
    pub max_iter: usize,
    /// The matrix annihilates constants; solutions are kept mean-free.
    pub singular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    neumaier_sum(a.iter().zip(b).map(|(&x, &y)| x * y))
}

fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

fn remove_mean<T: Real>(a: &mut [T]) {
    let mean = neumaier_sum(a.iter().copied()) / from_usize(a.len());
    a.iter_mut().for_each(|v| *v = *v - mean);
}

/// Solves `A x = b` by PCG starting from the contents of `x`.
pub(crate) fn pcg<T: Real>(
    a: &Stencil5<T>,
    b: &[T],
    x: &mut [T],
    opts: SolveOptions<T>,
    system: &'static str,
) -> Result<SolveStats> {
    let n = a.len();
    let mut b = b.to_vec();
    if opts.singular {
        remove_mean(&mut b);
        remove_mean(x);
    }
    let b_norm = dot(&b, &b).sqrt();
    if b_norm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    if !b_norm.is_finite() {
        return Err(Error::NonFinite { what: system });
    }
    let precond = IncompleteCholesky::new(a);
    let mut r = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];

    let residual = |x: &[T], r: &mut [T], q: &mut [T]| {
        a.apply(x, q);
        for k in 0..n {
            r[k] = b[k] - q[k];
        }
        if opts.singular {
            remove_mean(r);
        }
    };
    let converged = |r: &[T]| {
        let ok2 = dot(r, r).sqrt() <= opts.rel_tol * b_norm;
        let okinf = opts.abs_inf_tol.is_none_or(|tol| max_abs(r) <= tol);
        ok2 && okinf
    };

    residual(x, &mut r, &mut q);
    let mut iterations = 0;
    // outer loop restarts from the true residual when the recursive one has converged
    loop {
        if converged(&r) {
            return Ok(SolveStats {
                iterations,
                residual: to_f64(dot(&r, &r).sqrt() / b_norm),
            });
        }
        precond.solve(a, &r, &mut z);
        if opts.singular {
            remove_mean(&mut z);
        }
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let start = iterations;
        while iterations < opts.max_iter {
            iterations += 1;
            a.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > T::zero()) {
                break;
            }
            let alpha = rz / pq;
            for k in 0..n {
                x[k] = x[k] + alpha * p[k];
                r[k] = r[k] - alpha * q[k];
            }
            if converged(&r) {
                break;
            }
            precond.solve(a, &r, &mut z);
            if opts.singular {
                remove_mean(&mut z);
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: system });
        }
        residual(x, &mut r, &mut q);
        if converged(&r) {
            continue;
        }
        if iterations >= opts.max_iter || iterations == start {
            return Err(Error::EllipticDiverged {
                system,
                iterations,
                residual: to_f64(dot(&r, &r).sqrt() / b_norm),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace(mx: usize, my: usize, shift: f64) -> Stencil5<f64> {
        let mut a = Stencil5::zeros(mx, my);
        for j in 0..my {
            for i in 0..mx {
                let k = j * mx + i;
                a.diag[k] += shift;
                if i + 1 < mx {
                    a.couple_east(k, 1.0);
                }
                if j + 1 < my {
                    a.couple_north(k, 1.0);
                }
            }
        }
        a
    }

    fn opts(singular: bool) -> SolveOptions<f64> {
        SolveOptions {
            rel_tol: 1e-12,
            abs_inf_tol: Some(1e-12),
            max_iter: 500,
            singular,
        }
    }

    #[test]
    fn recovers_known_solution() {
        let a = laplace(10, 7, 0.3);
        let exact: Vec<f64> = (0..70).map(|k| (k as f64 * 0.41).sin()).collect();
        let mut b = vec![0.0; 70];
        a.apply(&exact, &mut b);
        let mut x = vec![0.0; 70];
        pcg(&a, &b, &mut x, opts(false), "test").unwrap();
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_neumann_system() {
        let a = laplace(9, 9, 0.0);
        let mut exact: Vec<f64> = (0..81).map(|k| (k as f64 * 0.73).cos()).collect();
        remove_mean(&mut exact);
        let mut b = vec![0.0; 81];
        a.apply(&exact, &mut b);
        let mut x = vec![1.0; 81];
        pcg(&a, &b, &mut x, opts(true), "test").unwrap();
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplace(5, 5, 1.0);
        let mut x = vec![3.0; 25];
        let s = pcg(&a, &[0.0; 25], &mut x, opts(false), "test").unwrap();
        assert_eq!(s.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let a = laplace(30, 30, 0.0);
        let b: Vec<f64> = (0..900).map(|k| (k as f64).sin()).collect();
        let mut x = vec![0.0; 900];
        let o = SolveOptions {
            max_iter: 2,
            ..opts(true)
        };
        assert!(matches!(
            pcg(&a, &b, &mut x, o, "test"),
            Err(Error::EllipticDiverged { .. })
        ));
    }
}
