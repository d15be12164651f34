//! Closures derived from the binary phase diagram.
//!
//! The diagram is described by a liquidus curve `gamma_l(theta)` and a solidus
//! curve `gamma_s(theta)` joining the solvent fusion point `(0, theta_f)` to the
//! eutectic endpoints `(c_e, theta_e)` and `(c_a, theta_e)`. Everything the flow,
//! solute and heat equations need from the diagram (liquid concentration, solid
//! fraction, Carman-Kozeny drag, buoyancy) is a pure function of `(c, theta)`.

use crate::error::{invalid, Result};
use crate::real::{lit, Real};

/// Shape of the liquidus/solidus curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurveKind {
    /// Straight lines between the fusion point and the eutectic endpoints.
    #[default]
    Linear,
}

/// Region of the `(c, theta)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Liquid,
    Mixture,
    Solid,
    /// Negative concentrations.
    NegativeExt,
    /// Positive concentrations outside the closure of liquid, mixture and solid.
    PositiveExt,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Liquid,
        Region::Mixture,
        Region::Solid,
        Region::NegativeExt,
        Region::PositiveExt,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDiagram<T> {
    /// Fusion temperature of the pure solvent.
    pub theta_f: T,
    /// Eutectic temperature.
    pub theta_e: T,
    /// Eutectic concentration, `gamma_l(theta_e)`.
    pub c_e: T,
    /// Solidus concentration at the eutectic temperature, `gamma_s(theta_e)`.
    pub c_a: T,
    pub curve: CurveKind,
}

impl<T: Real> PhaseDiagram<T> {
    pub fn new(theta_f: T, theta_e: T, c_e: T, c_a: T, curve: CurveKind) -> Result<Self> {
        let pd = Self {
            theta_f,
            theta_e,
            c_e,
            c_a,
            curve,
        };
        pd.validate()?;
        Ok(pd)
    }

    pub fn linear(theta_f: T, theta_e: T, c_e: T, c_a: T) -> Result<Self> {
        Self::new(theta_f, theta_e, c_e, c_a, CurveKind::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("theta_f", self.theta_f),
            ("theta_e", self.theta_e),
            ("c_e", self.c_e),
            ("c_a", self.c_a),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.theta_e >= self.theta_f {
            return Err(invalid(
                "theta_e",
                "eutectic temperature must lie strictly below the fusion temperature",
            ));
        }
        if self.c_a <= T::zero() {
            return Err(invalid("c_a", "must be strictly positive"));
        }
        if self.c_a >= self.c_e {
            return Err(invalid("c_a", "must be strictly below c_e"));
        }
        Ok(())
    }

    fn span(&self) -> T {
        self.theta_f - self.theta_e
    }

    /// Normalized undercooling `(theta_f - theta) / (theta_f - theta_e)` clamped to `[0, 1]`.
    fn undercooling(&self, theta: T) -> T {
        let s = (self.theta_f - theta) / self.span();
        s.max(T::zero()).min(T::one())
    }

    /// Liquidus `gamma_l(theta)`, clamped to its endpoint values outside `[theta_e, theta_f]`.
    pub fn liquidus(&self, theta: T) -> T {
        match self.curve {
            CurveKind::Linear => self.c_e * self.undercooling(theta),
        }
    }

    /// Solidus `gamma_s(theta)`, clamped like [`Self::liquidus`].
    pub fn solidus(&self, theta: T) -> T {
        match self.curve {
            CurveKind::Linear => self.c_a * self.undercooling(theta),
        }
    }

    /// Temperature at which the liquidus reaches `c`, for `c` clamped to `[0, c_e]`.
    pub fn liquidus_inverse(&self, c: T) -> T {
        match self.curve {
            CurveKind::Linear => {
                let c = c.max(T::zero()).min(self.c_e);
                self.theta_f - c / self.c_e * self.span()
            }
        }
    }

    /// Temperature at which the solidus reaches `c`, for `c` clamped to `[0, c_a]`.
    pub fn solidus_inverse(&self, c: T) -> T {
        match self.curve {
            CurveKind::Linear => {
                let c = c.max(T::zero()).min(self.c_a);
                self.theta_f - c / self.c_a * self.span()
            }
        }
    }

    /// Region tag of `(c, theta)`.
    ///
    /// Cases are tested in the order negative extension, positive extension,
    /// liquid, solid; whatever remains (including points lying exactly on the
    /// liquidus or solidus) is tagged as mixture.
    pub fn classify(&self, c: T, theta: T) -> Region {
        if c < T::zero() {
            Region::NegativeExt
        } else if c >= self.c_e || (theta <= self.theta_e && c >= self.c_a) {
            Region::PositiveExt
        } else if theta > self.liquidus_inverse(c) {
            Region::Liquid
        } else if c < self.c_a && theta < self.solidus_inverse(c) {
            Region::Solid
        } else {
            Region::Mixture
        }
    }

    /// Extended liquid concentration `c_l(c, theta)`, valued in `[0, c_e]`.
    pub fn liquid_concentration(&self, c: T, theta: T) -> T {
        match self.classify(c, theta) {
            Region::Liquid => c,
            Region::Mixture => self.liquidus(theta),
            Region::Solid => self.liquidus(self.solidus_inverse(c)),
            Region::NegativeExt => T::zero(),
            Region::PositiveExt => self.c_e,
        }
    }

    /// Solid mass fraction by the lever rule, extended by 1 on the closure of
    /// the solid and positive-extension regions and by 0 elsewhere.
    pub fn solid_fraction(&self, c: T, theta: T) -> T {
        match self.classify(c, theta) {
            Region::Liquid | Region::NegativeExt => T::zero(),
            Region::Solid | Region::PositiveExt => T::one(),
            Region::Mixture => {
                let a = self.liquidus(theta) - c;
                let b = c - self.solidus(theta);
                let width = a + b;
                if width > T::zero() {
                    (a / width).max(T::zero()).min(T::one())
                } else {
                    // only the fusion point (0, theta_f), which sits on the solid closure
                    T::one()
                }
            }
        }
    }

    /// Upper bound of `c_l(c, theta) / c` over `c > 0`; governs the monotonicity
    /// limit of explicit upwind transport of `c_l`.
    pub fn transport_amplification(&self) -> T {
        self.c_e / self.c_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    pub rho: T,
    /// Dynamic viscosity.
    pub nu: T,
    /// Solute diffusivity.
    pub eta: T,
    /// Heat conductivity.
    pub kappa: T,
    /// Caloric capacity.
    pub heat_capacity: T,
    /// Thermal expansion coefficient in the Boussinesq force.
    pub alpha: T,
    /// Solutal expansion coefficient in the Boussinesq force.
    pub beta: T,
    /// Gravity magnitude; the force points along `-y`.
    pub gravity: T,
    pub theta_ref: T,
    pub c_ref: T,
    /// Carman-Kozeny constant `C_0`.
    pub carman_kozeny: T,
    /// Total amount of solute in the mould.
    pub c_total: T,
}

impl<T: Real> PhysicalParams<T> {
    /// Checks positivity and the compatibility bound `0 <= c_total <= gamma_l(theta_e) |Omega|`.
    pub fn validate(&self, pd: &PhaseDiagram<T>, area: T) -> Result<()> {
        let all = [
            ("rho", self.rho),
            ("nu", self.nu),
            ("eta", self.eta),
            ("kappa", self.kappa),
            ("heat_capacity", self.heat_capacity),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gravity", self.gravity),
            ("theta_ref", self.theta_ref),
            ("c_ref", self.c_ref),
            ("carman_kozeny", self.carman_kozeny),
            ("c_total", self.c_total),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("rho", self.rho),
            ("nu", self.nu),
            ("eta", self.eta),
            ("kappa", self.kappa),
        ] {
            if v <= T::zero() {
                return Err(invalid(name, "must be strictly positive"));
            }
        }
        for (name, v) in [
            ("heat_capacity", self.heat_capacity),
            ("carman_kozeny", self.carman_kozeny),
            ("gravity", self.gravity),
        ] {
            if v < T::zero() {
                return Err(invalid(name, "must be nonnegative"));
            }
        }
        let cap = pd.liquidus(pd.theta_e) * area;
        if self.c_total < T::zero() || self.c_total > cap {
            return Err(invalid(
                "c_total",
                format!(
                    "violates the compatibility relation 0 <= c_total <= gamma_l(theta_e)*|Omega| = {}",
                    cap
                ),
            ));
        }
        Ok(())
    }
}

/// Regularized Carman-Kozeny drag `C_0 fs^2 / (1 - fs + eps)^3`.
pub fn carman_kozeny<T: Real>(pp: &PhysicalParams<T>, fs: T, eps: T) -> Result<T> {
    if !(eps > T::zero() && eps <= T::one()) {
        return Err(invalid("eps", "regularization must lie in (0, 1]"));
    }
    if !(fs >= T::zero() && fs <= T::one()) {
        return Err(invalid("fs", "solid fraction must lie in [0, 1]"));
    }
    Ok(drag(pp.carman_kozeny, fs, eps))
}

#[inline]
pub(crate) fn drag<T: Real>(c0: T, fs: T, eps: T) -> T {
    let gap = T::one() - fs + eps;
    c0 * fs * fs / (gap * gap * gap)
}

/// Boussinesq force `rho g (alpha (theta - theta_r) + beta (c_l - c_r))` with `g = (0, -gravity)`.
pub fn buoyancy<T: Real>(pp: &PhysicalParams<T>, pd: &PhaseDiagram<T>, c: T, theta: T) -> [T; 2] {
    [T::zero(), buoyancy_y(pp, pd, c, theta)]
}

#[inline]
pub(crate) fn buoyancy_y<T: Real>(
    pp: &PhysicalParams<T>,
    pd: &PhaseDiagram<T>,
    c: T,
    theta: T,
) -> T {
    let cl = pd.liquid_concentration(c, theta);
    -pp.rho * pp.gravity * (pp.alpha * (theta - pp.theta_ref) + pp.beta * (cl - pp.c_ref))
}

/// Parameters used by unit tests across the crate.
#[cfg(test)]
pub(crate) fn sample_diagram() -> PhaseDiagram<f64> {
    PhaseDiagram::linear(1.0, 0.0, 0.5, 0.2).unwrap()
}

#[cfg(test)]
pub(crate) fn sample_params() -> PhysicalParams<f64> {
    PhysicalParams {
        rho: 1.0,
        nu: 0.1,
        eta: 0.05,
        kappa: 0.1,
        heat_capacity: 1.0,
        alpha: -1.0,
        beta: 0.5,
        gravity: 1.0,
        theta_ref: 0.5,
        c_ref: 0.1,
        carman_kozeny: 10.0,
        c_total: 0.1,
    }
}

impl<T: Real> Default for PhysicalParams<T> {
    fn default() -> Self {
        Self {
            rho: T::one(),
            nu: lit(0.1),
            eta: lit(0.05),
            kappa: lit(0.1),
            heat_capacity: T::one(),
            alpha: -T::one(),
            beta: lit(0.5),
            gravity: T::one(),
            theta_ref: lit(0.5),
            c_ref: lit(0.1),
            carman_kozeny: lit(10.0),
            c_total: lit(0.1),
        }
    }
}
