use super::grid::Sheet;
use super::table::KernelTable;
use super::trial::TrialPotential;
use crate::action_angle::ActionAngleChart;
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, `C^inf` in between.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Smooth cutoff that keeps a trial field away from the center, the separatrix, high
/// energies and the resonances `T = +- l q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityCutoff {
    /// Zero within `edge |E_min|` of `E_min` and of the separatrix, one beyond `2 edge |E_min|`.
    pub edge: f64,
    /// Zero above `exterior_max |E_min|`, one below half of it.
    pub exterior_max: f64,
    /// Zero where `|T/(l q) -+ 1| < gap`, one where it exceeds `2 gap`.
    pub gap: f64,
}

impl Default for IdentityCutoff {
    fn default() -> Self {
        Self { edge: 0.05, exterior_max: 4.0, gap: 0.1 }
    }
}

impl IdentityCutoff {
    /// Energy factor of the cutoff.
    pub fn energy_factor(&self, e: f64, e_min: f64) -> f64 {
        let a = e_min.abs();
        let (lo, hi) = (self.edge, 2.0 * self.edge);
        let ramp = |d: f64| smooth_step((d / a - lo) / (hi - lo));
        if e < 0.0 {
            ramp(e - e_min) * ramp(-e)
        } else {
            let m = self.exterior_max;
            ramp(e) * smooth_step((m - e / a) / (0.5 * m))
        }
    }

    /// Resonance factor at detuning `T/(l q) - s`.
    pub fn resonance_factor(&self, detuning: f64) -> f64 {
        smooth_step((detuning.abs() - self.gap) / self.gap)
    }

    /// Energy intervals carrying the support on the trapped and untrapped sheets.
    pub fn support(&self, e_min: f64) -> [(f64, f64); 2] {
        let a = e_min.abs();
        [(e_min + self.edge * a, -self.edge * a), (self.edge * a, self.exterior_max * a)]
    }
}

/// Quadrature resolution of the two sides of the energy identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentitySettings {
    pub cutoff: IdentityCutoff,
    /// Angle modes `1 <= |l| <= modes` of the field.
    pub modes: usize,
    /// Periodic trapezoid points in `x`.
    pub x_points: usize,
    /// Gauss-Legendre panels per velocity band.
    pub v_panels: usize,
    /// Gauss-Legendre panels per energy interval.
    pub e_panels: usize,
    /// Order of the Gauss-Legendre panels.
    pub order: usize,
}

impl Default for IdentitySettings {
    fn default() -> Self {
        Self { cutoff: IdentityCutoff::default(), modes: 12, x_points: 256, v_panels: 96, e_panels: 192, order: 8 }
    }
}

impl IdentitySettings {
    /// Every panel and point count scaled by 3/2.
    pub fn refined(&self) -> Self {
        let up = |n: usize| n + n / 2;
        Self { x_points: up(self.x_points), v_panels: up(self.v_panels), e_panels: up(self.e_panels), ..*self }
    }
}

/// The two sides of the energy identity for one trial potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    pub q: f64,
    /// `-eps int int phi g dx dv` by phase-space quadrature (real part).
    pub lhs: f64,
    /// Imaginary part of the phase-space integral (zero in exact arithmetic).
    pub lhs_imag: f64,
    /// `-eps^3 sum_sheets int T sum_l chi s mu' |phi^|^2 / (T/(l q) - s) dE`.
    pub rhs: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`, zero when both vanish.
    pub residual: f64,
}

/// Angle coefficient of the trial field:
/// `g^(l, E) = chi s eps^2 mu' phi^(l, E) / (T/(l q) - s)`.
fn ghat_coefficient(chi: f64, s: f64, eps2: f64, dmu: f64, phi: Complex64, detuning: f64) -> Complex64 {
    if chi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    phi * (chi * s * eps2 * dmu / detuning)
}

/// Composite Gauss-Legendre points on `[b_0, b_n]` with panel edges at every breakpoint;
/// `panels` are shared in proportion to length with at least `min_panels` per piece.
/// Pieces where `keep` is false at the midpoint are skipped.
fn split_points<F: Fn(f64) -> bool>(gl: &GaussLegendre, breaks: &[f64], panels: usize, min_panels: usize, keep: F) -> Vec<(f64, f64)> {
    let total = breaks[breaks.len() - 1] - breaks[0];
    let mut out = Vec::new();
    if !(total > 0.0) {
        return out;
    }
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) || !keep(0.5 * (a + b)) {
            continue;
        }
        let n = ((panels as f64 * (b - a) / total).ceil() as usize).max(min_panels);
        out.extend(gl.composite_points(a, b, n));
    }
    out
}

/// Velocity quadrature at a point with potential `p0`: panels split at the separatrix and
/// at the ramp energies of the cutoff, pieces outside the support skipped.
fn velocity_points<F: Fn(f64) -> bool>(gl: &GaussLegendre, ramps: &[[f64; 4]; 2], p0: f64, panels: usize, keep: F) -> Vec<(f64, f64)> {
    let speed = |e: f64| (2.0 * (e + p0)).max(0.0).sqrt();
    let energy = |v: f64| 0.5 * v * v - p0;
    let vs = speed(0.0);
    let mut up = vec![vs];
    up.extend(ramps[1].iter().map(|&e| speed(e)));
    let down: Vec<f64> = up.iter().rev().map(|v| -v).collect();
    let mut inner: Vec<f64> = ramps[0].iter().filter(|&&e| e > -p0).map(|&e| speed(e)).collect();
    inner.push(vs);
    let mut trapped: Vec<f64> = inner.iter().rev().map(|v| -v).collect();
    trapped.extend(inner);
    let keep_v = |v: f64| keep(energy(v));
    let mut points = split_points(gl, &down, panels, 2, keep_v);
    points.extend(split_points(gl, &up, panels, 2, keep_v));
    if vs > 0.0 {
        points.extend(split_points(gl, &trapped, panels, 2, keep_v));
    }
    points
}

fn sheet_of(e: f64, v: f64) -> Sheet {
    if e < 0.0 {
        Sheet::Trapped
    } else if v > 0.0 {
        Sheet::Up
    } else {
        Sheet::Down
    }
}

impl IdentityCutoff {
    /// Energies where the energy factor starts or stops ramping, sorted, on each side.
    fn ramp_energies(&self, e_min: f64) -> [[f64; 4]; 2] {
        let a = e_min.abs();
        let (d1, d2) = (self.edge * a, 2.0 * self.edge * a);
        let m = self.exterior_max * a;
        [[e_min + d1, e_min + d2, -d2, -d1], [d1, d2, 0.5 * m, m]]
    }
}

/// Evaluates the energy identity `||d_x phi_g||^2 = -eps int int phi_g g dx dv = rhs` in its
/// pre-substitution form for a batch of trial potentials `phi` and eigenvalue parameters `q`,
/// where `g` is built from `phi` through the dispersion relation and the smooth cutoff.
///
/// The left side integrates `-eps phi(x) g(x, v)` over phase space with `g` synthesized
/// from its angle coefficients at `theta(x, v)`; the right side is the closed-form energy
/// integral of the angle-Fourier coefficients.
pub fn energy_identity(
    chart: &ActionAngleChart,
    table: &KernelTable,
    trials: &[(TrialPotential, f64)],
    settings: &IdentitySettings,
) -> Result<Vec<EnergyIdentity>> {
    let eq = chart.equilibrium();
    let pot = chart.potential();
    let eps = eq.eps();
    let eps2 = eps * eps;
    let e_min = chart.e_min();
    let lm = settings.modes as i32;
    if settings.modes == 0 || settings.modes > table.modes() {
        return Err(Error::InvalidParameter(format!("identity needs 1..={} angle modes", table.modes())));
    }
    if settings.order < 2 || settings.x_points < 4 || settings.v_panels == 0 || settings.e_panels == 0 {
        return Err(Error::InvalidParameter("identity resolution too small".into()));
    }
    for (t, q) in trials {
        t.check(table.spatial_modes())?;
        if *q == 0.0 || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("q must be finite and non-zero, got {q}")));
        }
    }
    let cut = settings.cutoff;
    let ramps = cut.ramp_energies(e_min);
    let gl = GaussLegendre::new(settings.order);
    let n = trials.len();
    let ells: Vec<i32> = (-lm..=-1).chain(1..=lm).collect();
    let nl = ells.len();
    let km = trials.iter().map(|(t, _)| t.modes()).max().unwrap_or(0) as i32;
    let nk = 2 * km as usize + 1;
    let keep = |e: f64| cut.energy_factor(e, e_min) > 0.0;

    // Angle coefficients of every trial field at energy `e` on `sheet`; when `weight` is
    // given, also accumulates `weight Re(conj(phi^) g^)` per trial.
    let mut kernel = vec![Complex64::new(0.0, 0.0); nk * nl];
    let mut coefs = |e: f64, sheet: Sheet, out: &mut [Complex64], weight: Option<f64>, acc: &mut [f64]| -> Result<()> {
        let chi_e = cut.energy_factor(e, e_min);
        if chi_e == 0.0 {
            out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            return Ok(());
        }
        let sample = table.sample(e)?;
        let [period, _, _] = sample.period();
        for k in (-km..=km).filter(|&k| k != 0) {
            for (i, &l) in ells.iter().enumerate() {
                kernel[(k + km) as usize * nl + i] = sample.kernel(k, l).0;
            }
        }
        let s = sheet.sign();
        let dmu = eq.dmu_at_energy(e, sheet.branch());
        for (j, (trial, q)) in trials.iter().enumerate() {
            let tk = trial.modes() as i32;
            for (i, &l) in ells.iter().enumerate() {
                let p: Complex64 = (-tk..=tk)
                    .filter(|&k| k != 0)
                    .map(|k| trial.mode(k) * kernel[(k + km) as usize * nl + i])
                    .sum();
                let d = period / (l as f64 * q) - s;
                let chi = chi_e * cut.resonance_factor(d);
                let g = ghat_coefficient(chi, s, eps2, dmu, p, d);
                out[j * nl + i] = g;
                if let Some(w) = weight {
                    acc[j] += w * (p.conj() * g).re;
                }
            }
        }
        Ok(())
    };

    // Energy route.
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n * nl];
    let trapped = split_points(&gl, &ramps[0], settings.e_panels, 2, keep);
    let exterior = split_points(&gl, &ramps[1], settings.e_panels, 2, keep);
    for (sheet, pts) in [(Sheet::Trapped, &trapped), (Sheet::Up, &exterior), (Sheet::Down, &exterior)] {
        for &(e, w) in pts {
            let jac = chart.period(e)?;
            coefs(e, sheet, &mut scratch, Some(w * jac), &mut rhs)?;
        }
    }
    rhs.iter_mut().for_each(|r| *r *= -eps);

    // Phase-space route.
    let mut lhs = vec![Complex64::new(0.0, 0.0); n];
    let nx = settings.x_points;
    let mut rot = vec![Complex64::new(0.0, 0.0); nl];
    for ix in 0..nx {
        let x = ix as f64 / nx as f64;
        let p0 = pot.phi(x);
        let energy = |v: f64| 0.5 * v * v - p0;
        let points = velocity_points(&gl, &ramps, p0, settings.v_panels, keep);
        let mut rho = vec![Complex64::new(0.0, 0.0); n];
        for (v, w) in points {
            let e = energy(v);
            if cut.energy_factor(e, e_min) == 0.0 {
                continue;
            }
            let sheet = sheet_of(e, v);
            let period = table.period(e)?[0];
            let theta = chart.angle_with_period(x, v, period)?;
            coefs(e, sheet, &mut scratch, None, &mut [])?;
            for (r, &l) in rot.iter_mut().zip(&ells) {
                *r = Complex64::from_polar(1.0, 2.0 * PI * l as f64 * theta);
            }
            for (j, r) in rho.iter_mut().enumerate() {
                let g: Complex64 = scratch[j * nl..(j + 1) * nl].iter().zip(&rot).map(|(c, z)| c * z).sum();
                *r += w * g;
            }
        }
        for (j, (trial, _)) in trials.iter().enumerate() {
            lhs[j] += rho[j] * trial.value(x) / nx as f64;
        }
    }
    Ok(trials
        .iter()
        .enumerate()
        .map(|(j, (_, q))| {
            let l = -eps * lhs[j];
            let r = rhs[j];
            let scale = l.re.abs().max(r.abs());
            let residual = if scale == 0.0 { 0.0 } else { (l.re - r).abs().max(l.im.abs()) / scale };
            EnergyIdentity { q: *q, lhs: l.re, lhs_imag: l.im, rhs: r, residual }
        })
        .collect())
}

/// Weighted norm `(sum_sheets int int |g|^2 / |mu'(eps^2 E)| dx dv)^(1/2)` of the field with
/// angle coefficients `coeff(E, sheet, out)` (modes `-L..=-1, 1..=L`), computed twice: from
/// the coefficients by Plancherel in the angle, and by quadrature in `(x, v)` with `g`
/// synthesized at `theta(x, v)`. The coefficients must vanish outside the cutoff support.
pub fn plancherel_check<F>(chart: &ActionAngleChart, table: &KernelTable, settings: &IdentitySettings, mut coeff: F) -> Result<(f64, f64)>
where
    F: FnMut(f64, Sheet, &mut [Complex64]) -> Result<()>,
{
    let eq = chart.equilibrium();
    let e_min = chart.e_min();
    let lm = settings.modes as i32;
    let ells: Vec<i32> = (-lm..=-1).chain(1..=lm).collect();
    let cut = settings.cutoff;
    let ramps = cut.ramp_energies(e_min);
    let gl = GaussLegendre::new(settings.order);
    let keep = |e: f64| cut.energy_factor(e, e_min) > 0.0;
    let mut buf = vec![Complex64::new(0.0, 0.0); ells.len()];

    let mut coef_sum = 0.0;
    let trapped = split_points(&gl, &ramps[0], settings.e_panels, 2, keep);
    let exterior = split_points(&gl, &ramps[1], settings.e_panels, 2, keep);
    for (sheet, pts) in [(Sheet::Trapped, &trapped), (Sheet::Up, &exterior), (Sheet::Down, &exterior)] {
        for &(e, w) in pts {
            coeff(e, sheet, &mut buf)?;
            let m = eq.dmu_at_energy(e, sheet.branch()).abs();
            coef_sum += w * chart.period(e)? / m * buf.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
    }

    let mut phase_sum = 0.0;
    let nx = settings.x_points;
    for ix in 0..nx {
        let x = ix as f64 / nx as f64;
        let p0 = chart.potential().phi(x);
        for (v, w) in velocity_points(&gl, &ramps, p0, settings.v_panels, keep) {
            let e = 0.5 * v * v - p0;
            let sheet = sheet_of(e, v);
            coeff(e, sheet, &mut buf)?;
            let theta = chart.angle_with_period(x, v, table.period(e)?[0])?;
            let g: Complex64 = buf.iter().zip(&ells).map(|(c, &l)| c * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * theta)).sum();
            let m = eq.dmu_at_energy(e, sheet.branch()).abs();
            phase_sum += w * g.norm_sqr() / m / nx as f64;
        }
    }
    Ok((coef_sum.sqrt(), phase_sum.sqrt()))
}
