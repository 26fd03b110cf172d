use super::ActionAngleChart;
use crate::equilibria::Branch;
use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};
use serde::{Deserialize, Serialize};

/// Samples of one orbit at equally spaced angles `theta_j = j / n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Orbit {
    pub energy: f64,
    pub period: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `d x(theta, E) / dE` at fixed angle, when requested.
    pub dx_de: Option<Vec<f64>>,
}

/// Energy derivative of the chart at fixed angle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyDerivative {
    /// Central finite difference of the inverse chart in `E`.
    pub value: f64,
    /// Same quantity from the variational equations.
    pub variational: f64,
    /// Region envelope `r^(-1/2) chi_ell + |E|^(-1) chi_hyp + |E|^(-1) chi_ext`, `r = E - E_min`.
    pub envelope: f64,
}

const ORBIT_TOL: Tolerance = Tolerance { rtol: 1e-12, atol: 1e-15, max_steps: 2_000_000 };

impl ActionAngleChart {
    /// `(x, v, dx/dE)` on the `v >= 0` arc at the increasing angles `thetas`
    /// (`[0, 1/2]` when trapped, `[0, 1]` otherwise).
    ///
    /// The arc is integrated forward from its left end and backward from its right end,
    /// meeting where the potential is largest, so neither half approaches a saddle
    /// along its stable direction.
    fn sample_arc(&self, e: f64, thetas: &[f64], with_derivative: bool) -> Result<Vec<(f64, f64, f64)>> {
        let pot = self.potential().clone();
        let t = self.period(e)?;
        let t1 = if with_derivative { self.period_deriv(e)? } else { 0.0 };
        let fwd = |_: f64, y: &[f64; 4]| [y[1], pot.dphi(y[0]), y[3], pot.d2phi(y[0]) * y[2]];
        let bwd = |_: f64, y: &[f64; 4]| [-y[1], -pot.dphi(y[0]), -y[3], -pot.d2phi(y[0]) * y[2]];
        let (start, end, th_end) = if e < 0.0 {
            let (xl, xr) = self.turning_points(e)?;
            ([xl, 0.0, -1.0 / pot.dphi(xl), 0.0], [xr, 0.0, -1.0 / pot.dphi(xr), 0.0], 0.5)
        } else {
            let v0 = (2.0 * e).sqrt();
            ([0.0, v0, 0.0, 1.0 / v0], [1.0, v0, 0.0, 1.0 / v0], 1.0)
        };
        let th_split = (self.time_to(e, self.potential().x0())? / t).clamp(0.0, th_end);
        let split = thetas.partition_point(|&th| th <= th_split);
        let mut out = Vec::with_capacity(thetas.len());
        let times: Vec<f64> = thetas[..split].iter().map(|th| th * t).collect();
        for (s, th) in ode::solve(fwd, 0.0, start, &times, ORBIT_TOL)?.iter().zip(&thetas[..split]) {
            out.push((s[0], s[1], s[1] * th * t1 + s[2]));
        }
        let back: Vec<f64> = thetas[split..].iter().rev().map(|th| (th_end - th) * t).collect();
        let states = ode::solve(bwd, 0.0, end, &back, ORBIT_TOL)?;
        for (s, th) in states.iter().rev().zip(&thetas[split..]) {
            out.push((s[0], s[1], s[2] - s[1] * (th_end - th) * t1));
        }
        Ok(out)
    }

    /// Orbit samples on the `v > 0` side of untrapped energies (`Branch::Down` mirrors `v`).
    pub fn orbit(&self, e: f64, n_theta: usize, with_derivative: bool) -> Result<Orbit> {
        if n_theta < 2 || n_theta % 2 != 0 {
            return Err(Error::InvalidParameter("angle samples must be an even number >= 2".into()));
        }
        let t = self.period(e)?;
        let count = if e < 0.0 { n_theta / 2 + 1 } else { n_theta };
        let thetas: Vec<f64> = (0..count).map(|j| j as f64 / n_theta as f64).collect();
        let arc = self.sample_arc(e, &thetas, with_derivative)?;
        let mut x = vec![0.0; n_theta];
        let mut v = vec![0.0; n_theta];
        let mut d = vec![0.0; n_theta];
        for (j, s) in arc.iter().enumerate() {
            x[j] = s.0;
            v[j] = s.1;
            d[j] = s.2;
        }
        if e < 0.0 {
            let pot = self.potential();
            let (xl, xr) = self.turning_points(e)?;
            let half = n_theta / 2;
            x[0] = xl;
            v[0] = 0.0;
            x[half] = xr;
            v[half] = 0.0;
            d[half] = -1.0 / pot.dphi(xr);
            for j in half + 1..n_theta {
                x[j] = x[n_theta - j];
                v[j] = -v[n_theta - j];
                d[j] = d[n_theta - j];
            }
        }
        Ok(Orbit { energy: e, period: t, x, v, dx_de: with_derivative.then_some(d) })
    }

    /// Phase-space point at angle `theta` and energy `E` (untrapped: `v > 0` branch).
    pub fn from_action_angle(&self, theta: f64, e: f64) -> Result<(f64, f64)> {
        self.from_action_angle_branch(theta, e, Branch::Up)
    }

    /// Phase-space point at `(theta, E)` on the given velocity branch for untrapped energies.
    pub fn from_action_angle_branch(&self, theta: f64, e: f64, b: Branch) -> Result<(f64, f64)> {
        let (x, v, _) = self.chart_point(theta, e, false)?;
        Ok(if e > 0.0 && b == Branch::Down { (x, -v) } else { (x, v) })
    }

    /// `(x, v, dx/dE)` at `(theta, E)`; the derivative is zero unless requested.
    pub fn chart_point(&self, theta: f64, e: f64, with_derivative: bool) -> Result<(f64, f64, f64)> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("angle {theta} outside [0, 1)")));
        }
        let pot = self.potential();
        if e < 0.0 {
            let (xl, xr) = self.turning_points(e)?;
            let (th, flip) = if theta <= 0.5 { (theta, 1.0) } else { (1.0 - theta, -1.0) };
            if th == 0.0 {
                return Ok((xl, 0.0, -1.0 / pot.dphi(xl)));
            }
            if th == 0.5 {
                return Ok((xr, 0.0, -1.0 / pot.dphi(xr)));
            }
            // d/dE of x(1 - theta) equals d/dE of x(theta) by time reversal
            let (x, v, d) = self.sample_arc(e, &[th], with_derivative)?[0];
            Ok((x, flip * v, if with_derivative { d } else { 0.0 }))
        } else {
            let (x, v, d) = self.sample_arc(e, &[theta], with_derivative)?[0];
            Ok((x, v, if with_derivative { d } else { 0.0 }))
        }
    }

    /// Region envelope for `|d x / dE|`.
    pub fn energy_derivative_envelope(&self, e: f64) -> f64 {
        let mut env = 0.0;
        if self.in_elliptic(e) {
            env += (e - self.e_min()).powf(-0.5);
        }
        if self.in_hyperbolic(e) {
            env += 1.0 / e.abs();
        }
        if self.in_exterior(e) {
            env += 1.0 / e.abs();
        }
        env
    }
}

/// `d x(theta, E) / dE` by central differences of the inverse chart, with the
/// variational value and the region envelope.
pub fn chart_energy_derivative(chart: &ActionAngleChart, theta: f64, e: f64) -> Result<EnergyDerivative> {
    let scale = (e - chart.e_min()).min(e.abs());
    let h = 1e-4 * scale;
    let (xp, _, _) = chart.chart_point(theta, e + h, false)?;
    let (xm, _, _) = chart.chart_point(theta, e - h, false)?;
    let (_, _, var) = chart.chart_point(theta, e, true)?;
    Ok(EnergyDerivative { value: (xp - xm) / (2.0 * h), variational: var, envelope: chart.energy_derivative_envelope(e) })
}
