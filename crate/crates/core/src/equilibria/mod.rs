//! Steady states: equation-of-state profiles, prescribed potentials and the ion background.

mod assumptions;
mod potential;
mod profile;

pub use assumptions::{
    tail_integral, verify_assumptions, verify_assumptions_with, AssumptionCheck, AssumptionReport, Regularity, ScanSettings,
};
pub use potential::{make_potential_family, PotentialProfile, PotentialShape};
pub use profile::{
    make_boltzmannian, make_even_nonmonotone, make_polytrope, make_schamel, Branch, BranchKind,
    MicroProfile, MonotonicityClass,
};

use crate::error::{Error, Result};
use crate::quad;

/// Default number of spatial grid points for the ion background table.
pub const DEFAULT_X_GRID: usize = 2048;

/// The steady state `f0 = mu(eps^2 E)`, its potential and the induced ion background.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    profile: MicroProfile,
    potential: PotentialProfile,
    eps: f64,
    x_grid: Vec<f64>,
    rho_plus: Vec<f64>,
}

impl Equilibrium {
    pub fn new(profile: MicroProfile, potential: PotentialProfile, eps: f64) -> Result<Self> {
        Self::with_grid(profile, potential, eps, DEFAULT_X_GRID)
    }

    /// Builds the equilibrium and tabulates the ion density on `n` uniform points of [0, 1).
    pub fn with_grid(profile: MicroProfile, potential: PotentialProfile, eps: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
        }
        if n < 8 {
            return Err(Error::InvalidParameter("spatial grid needs at least 8 points".into()));
        }
        let e_min = -potential.phi_max();
        if !(eps * eps * e_min > profile.h()) {
            return Err(Error::Assumption(format!(
                "phi1: scaled minimal energy {:e} is outside the profile domain (h = {:e})",
                eps * eps * e_min,
                profile.h()
            )));
        }
        let mut eq = Self { profile, potential, eps, x_grid: Vec::new(), rho_plus: Vec::new() };
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let rho = xs.iter().map(|&x| eq.ion_density(x)).collect::<Result<Vec<_>>>()?;
        eq.x_grid = xs;
        eq.rho_plus = rho;
        Ok(eq)
    }

    pub fn profile(&self) -> &MicroProfile {
        &self.profile
    }

    pub fn potential(&self) -> &PotentialProfile {
        &self.potential
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Minimal particle energy `-phi(x0)`.
    pub fn e_min(&self) -> f64 {
        -self.potential.phi_max()
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    /// Tabulated ion density on [`Self::x_grid`].
    pub fn rho_plus(&self) -> &[f64] {
        &self.rho_plus
    }

    /// Particle energy `v^2/2 - phi(x)`.
    pub fn energy(&self, x: f64, v: f64) -> f64 {
        0.5 * v * v - self.potential.phi(x)
    }

    /// Distribution `mu(eps^2 E(x, v))` on the branch matching the sign of `v`.
    pub fn f0(&self, x: f64, v: f64) -> f64 {
        self.mu_at_energy(self.energy(x, v), Branch::of_velocity(v))
    }

    /// `mu(eps^2 E)`.
    pub fn mu_at_energy(&self, energy: f64, b: Branch) -> f64 {
        self.profile.mu(self.eps * self.eps * energy, b)
    }

    /// `mu'(eps^2 E)`.
    pub fn dmu_at_energy(&self, energy: f64, b: Branch) -> f64 {
        self.profile.dmu(self.eps * self.eps * energy, b)
    }

    /// `mu''(eps^2 E)`.
    pub fn d2mu_at_energy(&self, energy: f64, b: Branch) -> f64 {
        self.profile.d2mu(self.eps * self.eps * energy, b)
    }

    /// Velocity cutoff past which the integrand is below `1e-14` of its value at v = 0.
    pub fn velocity_cutoff(&self, x: f64, b: Branch) -> Result<f64> {
        let phi = self.potential.phi(x);
        let reference = self.mu_at_energy(-phi, b).max(self.mu_at_energy(0.0, b));
        let vs = (2.0 * phi).sqrt();
        let mut v = vs.max(1.0);
        for _ in 0..200 {
            let m = self.mu_at_energy(0.5 * v * v - phi, b);
            if m < 1e-14 * reference {
                return Ok(v);
            }
            v *= 2.0;
        }
        Err(Error::Numerical(format!("velocity tail of the profile does not decay at x={x}")))
    }

    /// `int f0(x, v) dv` over one velocity half-line, split at the separatrix speed.
    fn half_density(&self, x: f64, b: Branch) -> Result<f64> {
        let phi = self.potential.phi(x);
        let vs = (2.0 * phi.max(0.0)).sqrt();
        let vmax = self.velocity_cutoff(x, b)?;
        let tol = 1e-15;
        let inner = if vs > 0.0 {
            quad::adaptive(|v| self.mu_at_energy(0.5 * v * v - phi, b), 0.0, vs, 0.0, tol)?
        } else {
            0.0
        };
        // v = vs + w^2 absorbs the square-root behaviour of mu just above e = 0
        let wmax = (vmax - vs).max(0.0).sqrt();
        let outer = quad::adaptive(
            |w| {
                let e = w * w * (0.5 * w * w + vs);
                2.0 * w * self.mu_at_energy(e, b)
            },
            0.0,
            wmax,
            0.0,
            tol,
        )?;
        Ok(inner + outer)
    }

    /// `int f0(x, v) dv`.
    pub fn density_integral(&self, x: f64) -> Result<f64> {
        let up = self.half_density(x, Branch::Up)?;
        let down = if self.profile.is_multibranch() { self.half_density(x, Branch::Down)? } else { up };
        Ok(up + down)
    }

    /// Ion background `-phi''(x) + eps int f0 dv`.
    pub fn ion_density(&self, x: f64) -> Result<f64> {
        if !(-1e-12..=1.0 + 1e-12).contains(&x) {
            return Err(Error::InvalidParameter(format!("position {x} outside [0, 1]")));
        }
        Ok(-self.potential.d2phi(x) + self.eps * self.density_integral(x)?)
    }

    /// Electron density by an independent double-exponential route.
    pub fn density_integral_reference(&self, x: f64) -> Result<f64> {
        let phi = self.potential.phi(x);
        let vs = (2.0 * phi.max(0.0)).sqrt();
        let half = |b: Branch| -> Result<f64> {
            let inner = if vs > 0.0 {
                quad::tanh_sinh(|v, _| self.mu_at_energy(0.5 * v * v - phi, b), 0.0, vs, 1e-15)?
            } else {
                0.0
            };
            let scale = 1.0 / self.eps;
            let outer = quad::exp_sinh(
                |u| {
                    let d = u - vs;
                    self.mu_at_energy(d * (0.5 * d + vs), b)
                },
                vs,
                scale,
                1e-14,
            )?;
            Ok(inner + outer)
        };
        let up = half(Branch::Up)?;
        let down = if self.profile.is_multibranch() { half(Branch::Down)? } else { up };
        Ok(up + down)
    }

    /// Poisson residual `|-phi'' + eps int f0 dv - rho_plus|` on the tabulated grid,
    /// with the electron density recomputed by [`Self::density_integral_reference`].
    pub fn poisson_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (&x, &rho) in self.x_grid.iter().zip(&self.rho_plus) {
            let lhs = -self.potential.d2phi(x) + self.eps * self.density_integral_reference(x)?;
            worst = worst.max((lhs - rho).abs());
        }
        Ok(worst)
    }

    /// Smallest tabulated ion density and where it occurs.
    pub fn min_rho_plus(&self) -> (f64, f64) {
        self.x_grid
            .iter()
            .zip(&self.rho_plus)
            .fold((f64::INFINITY, 0.0), |acc, (&x, &r)| if r < acc.0 { (r, x) } else { acc })
    }
}

/// Free-function form of [`Equilibrium::ion_density`].
pub fn ion_density(eq: &Equilibrium, x: f64) -> Result<f64> {
    eq.ion_density(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn boltzmann_eq(a: f64, eps: f64, n: usize) -> Equilibrium {
        Equilibrium::with_grid(
            make_boltzmannian(1.0).unwrap(),
            make_potential_family(PotentialShape::Sin2, a).unwrap(),
            eps,
            n,
        )
        .unwrap()
    }

    #[test]
    fn boltzmann_density_is_gaussian() {
        let eq = boltzmann_eq(0.5, 0.1, 16);
        for &x in &[0.0, 0.2, 0.5] {
            let phi = eq.potential().phi(x);
            let exact = (2.0 * PI).sqrt() / eq.eps() * (eq.eps() * eq.eps() * phi).exp();
            let got = eq.density_integral(x).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-12, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn ion_density_matches_wide_trapezoid() {
        let eq = boltzmann_eq(0.5, 0.1, 16);
        let x = 0.5;
        // the integrand is analytic, so the trapezoid rule is spectrally accurate
        let (l, n) = (400.0, 400_000);
        let h = 2.0 * l / n as f64;
        let s: f64 = (0..=n).map(|i| eq.f0(x, -l + i as f64 * h)).sum::<f64>() * h;
        let oracle = -eq.potential().d2phi(x) + eq.eps() * s;
        let got = eq.ion_density(x).unwrap();
        assert!((got / oracle - 1.0).abs() < 1e-8);
    }

    #[test]
    fn small_eps_limit_is_curvature_plus_unscaled_mass() {
        // eps int mu(eps^2 E) dv -> int mu(v^2/2) dv = sqrt(2 pi) for exp(-e)
        let eq = boltzmann_eq(0.5, 1e-6, 16);
        let mass = (2.0 * PI).sqrt();
        for (&x, &r) in eq.x_grid().iter().zip(eq.rho_plus()) {
            assert!((r + eq.potential().d2phi(x) - mass).abs() < 1e-9);
        }
    }

    #[test]
    fn positivity_follows_the_curvature_condition() {
        // max phi'' = 2 pi^2 a stays below sqrt(2 pi) exactly when a < 0.127
        assert!(boltzmann_eq(0.1, 0.05, 256).min_rho_plus().0 > 0.0);
        let (r, x) = boltzmann_eq(0.5, 0.05, 256).min_rho_plus();
        assert!(r < 0.0 && x < 1e-12);
    }

    #[test]
    fn poisson_residual_small_for_several_profiles() {
        let pot = make_potential_family(PotentialShape::Sin2, 0.2).unwrap();
        for prof in [
            make_boltzmannian(1.0).unwrap(),
            make_polytrope(1, -1.0).unwrap(),
            make_even_nonmonotone(1).unwrap(),
            make_schamel(1.0, 1.0, false).unwrap(),
            make_schamel(1.0, 1.0, true).unwrap(),
        ] {
            let eq = Equilibrium::with_grid(prof, pot.clone(), 0.1, 32).unwrap();
            assert!(eq.poisson_residual().unwrap() < 1e-8, "{}", eq.profile().name());
        }
    }

    #[test]
    fn rejects_bad_eps_and_domain() {
        let pot = make_potential_family(PotentialShape::Sin2, 1.0).unwrap();
        assert!(Equilibrium::new(make_boltzmannian(1.0).unwrap(), pot.clone(), 0.0).is_err());
        assert!(Equilibrium::new(make_boltzmannian(1.0).unwrap(), pot.clone(), 1.0).is_err());
        // eps^2 E_min = -0.25 is below h = -0.1
        assert!(Equilibrium::new(make_polytrope(0, -0.1).unwrap(), pot, 0.5).is_err());
    }

    #[test]
    fn distribution_is_even_for_single_branch() {
        let eq = Equilibrium::with_grid(
            make_schamel(1.0, 1.0, false).unwrap(),
            make_potential_family(PotentialShape::Sin2, 0.3).unwrap(),
            0.5,
            8,
        )
        .unwrap();
        for &(x, v) in &[(0.1, 0.3), (0.5, 2.0), (0.9, 0.01)] {
            assert_eq!(eq.f0(x, v), eq.f0(x, -v));
        }
    }
}
