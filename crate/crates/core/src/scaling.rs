//! Two-parameter rescalings between a steady state on a period-`P` interval and the
//! normalized system `-phi'' = rho_+ - eps int f dv` on the unit torus.

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Exponents `a, c` and scale `lambda` of
/// `F(x, v) = lambda^a f(lambda x, lambda^c v)`, `phi_F(x) = lambda^d phi(lambda x)`,
/// `rho~(x) = lambda^e rho(lambda x)`, with `d = -2c`, `e = 2 - 2c`, `eps = lambda^(a+c-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    a: f64,
    c: f64,
    lambda: f64,
}

/// Exponents implied by `(a, c)` and the resulting small parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub lambda: f64,
    pub eps: f64,
    /// `1 / (a + c - 2)`: the original period is `P_unit eps^(-1/(a+c-2))`.
    pub period_exponent: f64,
}

impl ScalingParams {
    pub fn new(a: f64, c: f64, lambda: f64) -> Result<Self> {
        if !(a.is_finite() && c.is_finite()) {
            return Err(Error::InvalidParameter("scaling exponents must be finite".into()));
        }
        if (a + c - 2.0).abs() < 1e-12 {
            return Err(Error::InvalidParameter(format!("a + c = 2 (a = {a}, c = {c}) leaves eps undefined")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { a, c, lambda })
    }

    /// Parameters with `lambda = eps^(1/(a+c-2))`.
    pub fn from_eps(a: f64, c: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let s = a + c - 2.0;
        if s.abs() < 1e-12 {
            return Self::new(a, c, 1.0);
        }
        Self::new(a, c, eps.powf(1.0 / s))
    }

    /// Parameters mapping the period `p` onto the unit torus (`lambda = 1/p`).
    pub fn for_period(a: f64, c: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {p}")));
        }
        Self::new(a, c, 1.0 / p)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn b(&self) -> f64 {
        1.0 - self.c
    }

    pub fn d(&self) -> f64 {
        -2.0 * self.c
    }

    pub fn e(&self) -> f64 {
        2.0 - 2.0 * self.c
    }

    pub fn eps(&self) -> f64 {
        self.lambda.powf(self.a + self.c - 2.0)
    }

    pub fn derived(&self) -> DerivedExponents {
        DerivedExponents {
            a: self.a,
            b: self.b(),
            c: self.c,
            d: self.d(),
            e: self.e(),
            lambda: self.lambda,
            eps: self.eps(),
            period_exponent: 1.0 / (self.a + self.c - 2.0),
        }
    }

    /// Period of the rescaled system for an original period `p`: `p lambda = p eps^(1/(a+c-2))`.
    pub fn rescaled_period(&self, p: f64) -> f64 {
        p * self.lambda
    }

    /// Period of the original system for a rescaled period `p`.
    pub fn original_period(&self, p: f64) -> f64 {
        p / self.lambda
    }
}

/// A steady state given by closures: phase-space density, potential, its second
/// derivative and the ion background, on a periodic interval of length `period`.
#[derive(Clone)]
pub struct SteadyState {
    pub density: Fn2,
    pub potential: Fn1,
    pub potential_dd: Fn1,
    pub ion_density: Fn1,
    pub period: f64,
}

impl std::fmt::Debug for SteadyState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SteadyState").field("period", &self.period).finish_non_exhaustive()
    }
}

impl SteadyState {
    /// The equilibrium `(mu(eps^2 E), phi_0, rho_+)` on the unit torus.
    pub fn from_equilibrium(eq: &Equilibrium) -> Self {
        let e1 = eq.clone();
        let e2 = eq.clone();
        let e3 = eq.clone();
        let e4 = eq.clone();
        Self {
            density: Arc::new(move |x, v| e1.f0(x.rem_euclid(1.0), v)),
            potential: Arc::new(move |x| e2.potential().phi(x.rem_euclid(1.0))),
            potential_dd: Arc::new(move |x| e3.potential().d2phi(x.rem_euclid(1.0))),
            ion_density: Arc::new(move |x| e4.ion_density(x.rem_euclid(1.0)).unwrap_or(f64::NAN)),
            period: 1.0,
        }
    }

    /// `int F(x, v) dv` by adaptive quadrature on each velocity half-line.
    pub fn velocity_integral(&self, x: f64) -> Result<f64> {
        let half = |sign: f64| -> Result<f64> {
            let f = |v: f64| (self.density)(x, sign * v);
            let peak = f(0.0).abs().max(f(1e-3).abs());
            let mut vmax: f64 = 1.0;
            let mut doublings = 0;
            while f(vmax).abs() > 1e-17 * peak || f(0.5 * vmax).abs() > 1e-17 * peak {
                vmax *= 2.0;
                doublings += 1;
                if doublings > 60 {
                    return Err(Error::Numerical(format!("density does not decay in v at x = {x}")));
                }
            }
            quad::adaptive(f, 0.0, vmax, 0.0, 1e-14)
        };
        Ok(half(1.0)? + half(-1.0)?)
    }

    /// `max |-phi'' - rho + coupling int F dv|` over `n` equispaced points of one period.
    pub fn poisson_residual(&self, coupling: f64, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let x = self.period * i as f64 / n as f64;
            let r = -(self.potential_dd)(x) - (self.ion_density)(x) + coupling * self.velocity_integral(x)?;
            if !r.is_finite() {
                return Err(Error::Numerical(format!("non-finite Poisson residual at x = {x}")));
            }
            worst = worst.max(r.abs());
        }
        Ok(worst)
    }
}

/// Maps a steady state of the original system on `[0, P]` to the rescaled system on
/// `[0, P lambda]` (the unit torus when `lambda = 1/P`).
pub fn to_unit_torus(original: &SteadyState, params: &ScalingParams) -> SteadyState {
    let ScalingParams { a, c, lambda } = *params;
    let inv = 1.0 / lambda;
    let vs = lambda.powf(-c);
    let fa = lambda.powf(-a);
    let fd = lambda.powf(2.0 * c);
    let fe = lambda.powf(2.0 * c - 2.0);
    let (f, p, pdd, r) = (original.density.clone(), original.potential.clone(), original.potential_dd.clone(), original.ion_density.clone());
    SteadyState {
        density: Arc::new(move |y, w| fa * f(y * inv, w * vs)),
        potential: Arc::new(move |y| fd * p(y * inv)),
        potential_dd: Arc::new(move |y| fe * pdd(y * inv)),
        ion_density: Arc::new(move |y| fe * r(y * inv)),
        period: params.rescaled_period(original.period),
    }
}

/// Inverse of [`to_unit_torus`]: `F(x, v) = lambda^a f(lambda x, lambda^c v)` and so on.
pub fn from_unit_torus(unit: &SteadyState, params: &ScalingParams) -> SteadyState {
    let ScalingParams { a, c, lambda } = *params;
    let vs = lambda.powf(c);
    let fa = lambda.powf(a);
    let fd = lambda.powf(-2.0 * c);
    let fe = lambda.powf(2.0 - 2.0 * c);
    let (f, p, pdd, r) = (unit.density.clone(), unit.potential.clone(), unit.potential_dd.clone(), unit.ion_density.clone());
    SteadyState {
        density: Arc::new(move |x, v| fa * f(lambda * x, vs * v)),
        potential: Arc::new(move |x| fd * p(lambda * x)),
        potential_dd: Arc::new(move |x| fe * pdd(lambda * x)),
        ion_density: Arc::new(move |x| fe * r(lambda * x)),
        period: params.original_period(unit.period),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_boltzmannian, make_potential_family, PotentialShape};
    use proptest::prelude::*;

    fn analytic() -> SteadyState {
        SteadyState {
            density: Arc::new(|x, v| (-(0.5 * v * v) + 0.3 * (2.0 * std::f64::consts::PI * x).cos()).exp()),
            potential: Arc::new(|x| (2.0 * std::f64::consts::PI * x).sin().powi(2)),
            potential_dd: Arc::new(|x| 8.0 * std::f64::consts::PI.powi(2) * (4.0 * std::f64::consts::PI * x).cos()),
            ion_density: Arc::new(|x| 1.0 + x.sin()),
            period: 1.0,
        }
    }

    fn boltzmann_unit(eps: f64) -> SteadyState {
        let eq = Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), make_potential_family(PotentialShape::Sin2, 0.5).unwrap(), eps, 16).unwrap();
        SteadyState::from_equilibrium(&eq)
    }

    #[test]
    fn exponent_relations_and_degenerate_sum() {
        let p = ScalingParams::new(0.5, 0.75, 3.0).unwrap();
        let d = p.derived();
        assert_eq!((d.b, d.d, d.e), (0.25, -1.5, 0.5));
        assert!((d.eps - 3f64.powf(-0.75)).abs() < 1e-15);
        assert!(ScalingParams::new(1.0, 1.0, 2.0).is_err());
        assert!(ScalingParams::from_eps(0.5, 1.5, 0.1).is_err());
        assert!(ScalingParams::new(0.0, 1.0, -1.0).is_err());
        let q = ScalingParams::from_eps(0.0, 1.0, 0.05).unwrap();
        assert!((q.lambda() - 20.0).abs() < 1e-12);
        assert!((q.rescaled_period(0.05) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn critical_scaling_reduces_to_plain_dilation() {
        let eps = 0.05;
        let params = ScalingParams::from_eps(0.0, 1.0, eps).unwrap();
        let unit = analytic();
        let orig = from_unit_torus(&unit, &params);
        assert!((orig.period - eps).abs() < 1e-15);
        for &(x, v) in &[(0.001, 0.3), (0.02, -0.7), (0.049, 0.01)] {
            assert!(((orig.density)(x, v) - (unit.density)(x / eps, v / eps)).abs() < 1e-14);
            assert!(((orig.potential)(x) - eps * eps * (unit.potential)(x / eps)).abs() < 1e-15);
            assert!(((orig.ion_density)(x) - (unit.ion_density)(x / eps)).abs() < 1e-14);
        }
    }

    #[test]
    fn period_shrinks_or_grows_with_the_exponent_sign() {
        let eps = 0.1;
        let small = ScalingParams::from_eps(0.0, 1.0, eps).unwrap();
        let large = ScalingParams::from_eps(2.0, 1.0, eps).unwrap();
        assert!(small.original_period(1.0) < 1.0);
        assert!(large.original_period(1.0) > 1.0);
        assert!((large.original_period(1.0) - eps.powf(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn mapped_equilibrium_solves_the_original_poisson_equation() {
        let eps = 0.05;
        let unit = boltzmann_unit(eps);
        assert!(unit.poisson_residual(eps, 32).unwrap() < 1e-8);
        for (a, c) in [(0.0, 1.0), (0.5, 0.5), (3.0, 1.0)] {
            let params = ScalingParams::from_eps(a, c, eps).unwrap();
            let orig = from_unit_torus(&unit, &params);
            let scale = (orig.ion_density)(0.3 * orig.period).abs();
            let res = orig.poisson_residual(1.0, 32).unwrap();
            assert!(res < 1e-8 * scale.max(1.0), "a = {a}, c = {c}: {res:e}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(a in -2.0..3.0f64, c in -1.0..2.0f64, lambda in 0.05..20.0f64, x in 0.0..1.0f64, v in -3.0..3.0f64) {
            prop_assume!((a + c - 2.0).abs() > 0.1);
            let params = ScalingParams::new(a, c, lambda).unwrap();
            let unit = analytic();
            let back = to_unit_torus(&from_unit_torus(&unit, &params), &params);
            let rel = |p: f64, q: f64| (p - q).abs() / q.abs().max(1e-300);
            prop_assert!(rel((back.density)(x, v), (unit.density)(x, v)) < 1e-13);
            prop_assert!(rel((back.potential)(x), (unit.potential)(x)) < 1e-13);
            prop_assert!(rel((back.potential_dd)(x), (unit.potential_dd)(x)) < 1e-13);
            prop_assert!(rel((back.ion_density)(x), (unit.ion_density)(x)) < 1e-13);
            prop_assert!(rel(back.period, 1.0) < 1e-14);
        }
    }
}
