//! Time integration of the linearized flow in action-angle Fourier variables and the
//! time-averaged force diagnostic.

use crate::error::{Error, Result};
use crate::spectral_analysis::{Sheet, SpectralField, SpectralGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Drops the `l = 0` coefficients of a field given with all modes `-L..=L` per node
/// (node-major, `2L + 1` entries per node).
pub fn project_out_kernel(grid: &SpectralGrid, full: &[Complex64]) -> Result<SpectralField> {
    let width = 2 * grid.modes() + 1;
    if full.len() != grid.nodes().len() * width {
        return Err(Error::InvalidParameter(format!("expected {} coefficients", grid.nodes().len() * width)));
    }
    let lm = grid.modes() as i32;
    Ok(SpectralField::from_fn(grid, |j, l| full[j * width + (l + lm) as usize]))
}

/// Embeds a field into the `-L..=L` layout with zero `l = 0` coefficients.
pub fn embed(grid: &SpectralGrid, f: &SpectralField) -> Vec<Complex64> {
    let width = 2 * grid.modes() + 1;
    let lm = grid.modes() as i32;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.nodes().len() * width];
    for j in 0..grid.nodes().len() {
        for l in grid.ells() {
            out[j * width + (l + lm) as usize] = f.coeffs[grid.index(j, l)];
        }
    }
    out
}

/// Weighted norm of a field in the `-L..=L` layout (the `l = 0` part included).
pub fn full_norm(grid: &SpectralGrid, full: &[Complex64]) -> f64 {
    let width = 2 * grid.modes() + 1;
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(j, n)| n.measure() / n.dmu.abs() * full[j * width..(j + 1) * width].iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Smooth bump initial data `g^(l, E) = amplitude psi(E) / l^2` for `1 <= |l| <= max_ell`,
/// with `psi` supported on `E_min + |E_min| [lo, hi]` on the trapped sheet and, when
/// `exterior` is set, on `|E_min| [lo, hi]` on both untrapped sheets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BumpData {
    pub lo: f64,
    pub hi: f64,
    pub max_ell: usize,
    pub amplitude: f64,
    pub exterior: bool,
}

impl Default for BumpData {
    fn default() -> Self {
        Self { lo: 0.2, hi: 0.8, max_ell: 2, amplitude: 1.0, exterior: false }
    }
}

impl BumpData {
    fn profile(&self, u: f64) -> f64 {
        let t = 2.0 * (u - self.lo) / (self.hi - self.lo) - 1.0;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }

    pub fn field(&self, grid: &SpectralGrid) -> Result<SpectralField> {
        if !(0.0 <= self.lo && self.lo < self.hi) || self.max_ell == 0 {
            return Err(Error::InvalidParameter("bump needs 0 <= lo < hi and max_ell >= 1".into()));
        }
        let a = grid.e_min().abs();
        Ok(SpectralField::from_fn(grid, |j, l| {
            let n = &grid.nodes()[j];
            if l.unsigned_abs() as usize > self.max_ell {
                return Complex64::new(0.0, 0.0);
            }
            let psi = match n.sheet {
                Sheet::Trapped => self.profile((n.energy - grid.e_min()) / a),
                _ if self.exterior => self.profile(n.energy / a),
                _ => 0.0,
            };
            Complex64::new(self.amplitude * psi / (l * l) as f64, 0.0)
        }))
    }
}

/// One record of the force history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    /// `||d_x phi_g(t)||_{L^2}`.
    pub force_l2: f64,
    /// `(1/t) int_0^t ||d_x phi_g|| ds` (trapezoid rule; the initial value at `t = 0`).
    pub running_avg: f64,
}

/// Simulation state: time, coefficients and force history.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub field: SpectralField,
    pub history: Vec<Diagnostic>,
    integral: f64,
}

impl SimState {
    pub fn new(grid: &SpectralGrid, field: SpectralField) -> Result<Self> {
        let f = grid.field_from_g(&field)?.force_l2();
        Ok(Self { t: 0.0, field, history: vec![Diagnostic { t: 0.0, force_l2: f, running_avg: f }], integral: 0.0 })
    }

    fn record(&mut self, grid: &SpectralGrid) -> Result<()> {
        let f = grid.field_from_g(&self.field)?.force_l2();
        let last = *self.history.last().expect("history starts with t = 0");
        self.integral += 0.5 * (self.t - last.t) * (f + last.force_l2);
        let avg = if self.t != 0.0 { self.integral / self.t } else { f };
        self.history.push(Diagnostic { t: self.t, force_l2: f, running_avg: avg });
        Ok(())
    }
}

/// Strang-split integrator of `d/dt g^ = -(+- 2 pi i l omega)(g^ + eps^2 mu' phi^_g)`.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    grid: &'a SpectralGrid,
    /// Field coupling on (off: free transport).
    pub coupling: bool,
    /// `+- 2 pi l omega` per coefficient.
    rates: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &'a SpectralGrid, coupling: bool) -> Self {
        let rates = grid
            .nodes()
            .iter()
            .flat_map(|n| {
                let w = 2.0 * PI * n.sheet.sign() * n.frequency();
                grid.ells().map(move |l| w * l as f64)
            })
            .collect();
        Self { grid, coupling, rates }
    }

    /// `max |2 pi l omega| dt / (2 pi)`, the number of turns per step of the fastest mode.
    pub fn turns_per_step(&self, dt: f64) -> f64 {
        self.rates.iter().fold(0.0, |m: f64, r| m.max(r.abs())) * dt.abs() / (2.0 * PI)
    }

    fn transport(&self, f: &mut SpectralField, dt: f64) {
        for (c, r) in f.coeffs.iter_mut().zip(&self.rates) {
            *c *= Complex64::from_polar(1.0, -r * dt);
        }
    }

    /// `-(+- 2 pi i l omega) eps^2 mu' phi^_g`.
    fn field_rate(&self, f: &SpectralField) -> Result<SpectralField> {
        let pot = self.grid.field_from_g(f)?;
        let e2 = self.grid.eps() * self.grid.eps();
        let two_l = 2 * self.grid.modes();
        let mut out = SpectralField { coeffs: pot.phi_hat };
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let n = &self.grid.nodes()[i / two_l];
            *c *= Complex64::new(0.0, -self.rates[i] * e2 * n.dmu);
        }
        Ok(out)
    }

    /// Field step over `dt` by an Euler predictor and one midpoint correction.
    fn field_step(&self, f: &mut SpectralField, dt: f64) -> Result<()> {
        let k0 = self.field_rate(f)?;
        let mut mid = f.clone();
        for (m, k) in mid.coeffs.iter_mut().zip(&k0.coeffs) {
            *m += 0.5 * dt * k;
        }
        let k1 = self.field_rate(&mid)?;
        for (c, k) in f.coeffs.iter_mut().zip(&k1.coeffs) {
            *c += dt * k;
        }
        Ok(())
    }

    /// One step of size `dt` (negative `dt` runs backwards).
    pub fn step(&self, state: &mut SimState, dt: f64) -> Result<()> {
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::InvalidParameter(format!("time step must be finite and non-zero, got {dt}")));
        }
        if self.coupling {
            self.transport(&mut state.field, 0.5 * dt);
            self.field_step(&mut state.field, dt)?;
            self.transport(&mut state.field, 0.5 * dt);
        } else {
            self.transport(&mut state.field, dt);
        }
        state.t += dt;
        state.record(self.grid)
    }
}

/// Run parameters of [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    pub t_end: f64,
    pub dt: f64,
    pub coupling: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { t_end: 200.0, dt: 0.1, coupling: true }
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub history: Vec<Diagnostic>,
    /// Time after which the discrete energy grid can rephase the initial data.
    pub recurrence_horizon: f64,
    /// `(g, L g)_H` at the start and at the end.
    pub quadratic_form: (f64, f64),
    pub warnings: Vec<String>,
}

impl SimReport {
    /// Running average at the first recorded time `>= t`.
    pub fn running_avg_at(&self, t: f64) -> Option<f64> {
        self.history.iter().find(|d| d.t >= t - 1e-9).map(|d| d.running_avg)
    }
}

/// Integrates from `initial` (already free of `l = 0`) up to `t_end`.
pub fn simulate(grid: &SpectralGrid, initial: SpectralField, settings: &SimSettings) -> Result<SimReport> {
    if !(settings.dt > 0.0) || !(settings.t_end > 0.0) {
        return Err(Error::InvalidParameter("simulation needs dt > 0 and t_end > 0".into()));
    }
    let stepper = Stepper::new(grid, settings.coupling);
    let mut warnings = Vec::new();
    let turns = stepper.turns_per_step(settings.dt) * 2.0 * PI;
    if turns > 10.0 {
        warnings.push(format!("under-resolved rotation: dt * max(2 pi l omega) = {turns:.3e} > 10"));
    }
    let horizon = recurrence_horizon(grid, &initial);
    let q0 = grid.quadratic_form(&initial)?;
    let mut state = SimState::new(grid, initial)?;
    let steps = (settings.t_end / settings.dt).round() as usize;
    for _ in 0..steps {
        stepper.step(&mut state, settings.dt)?;
    }
    let q1 = grid.quadratic_form(&state.field)?;
    if horizon < settings.t_end {
        warnings.push(format!("recurrence horizon {horizon:.3e} is shorter than t_end"));
    }
    Ok(SimReport { history: state.history, recurrence_horizon: horizon, quadratic_form: (q0, q1), warnings })
}

/// `1 / max(|l| |omega_{j+1} - omega_j|)` over modes carrying data and pairs of adjacent
/// energies on the same sheet with data on at least one of them: the time after which
/// neighbouring nodes of the energy quadrature dephase by a full turn.
pub fn recurrence_horizon(grid: &SpectralGrid, f: &SpectralField) -> f64 {
    let two_l = 2 * grid.modes();
    let peak = f.coeffs.iter().fold(0.0, |m: f64, c| m.max(c.norm()));
    if peak == 0.0 {
        return f64::INFINITY;
    }
    let tol = 1e-8 * peak;
    let nodes = grid.nodes();
    let active = |j: usize| -> i32 {
        grid.ells().filter(|&l| f.coeffs[j * two_l + grid.slot(l)].norm() > tol).map(|l| l.abs()).max().unwrap_or(0)
    };
    let mut worst: f64 = 0.0;
    for sheet in [Sheet::Trapped, Sheet::Up, Sheet::Down] {
        let mut idx: Vec<usize> = (0..nodes.len()).filter(|&j| nodes[j].sheet == sheet).collect();
        idx.sort_by(|&a, &b| nodes[a].energy.total_cmp(&nodes[b].energy));
        for w in idx.windows(2) {
            let l = active(w[0]).max(active(w[1]));
            if l > 0 {
                worst = worst.max(l as f64 * (nodes[w[1]].frequency() - nodes[w[0]].frequency()).abs());
            }
        }
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        1.0 / worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_angle::ActionAngleChart;
    use crate::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
    use crate::spectral_analysis::GridSettings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(eps: f64, trapped: usize) -> SpectralGrid {
        let eq = Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), make_potential_family(PotentialShape::Sin2, 0.1).unwrap(), eps, 16)
            .unwrap();
        let chart = ActionAngleChart::new(&eq).unwrap();
        let settings = GridSettings { modes: 4, spatial_modes: 4, trapped_energies: trapped, exterior_energies: 16, exterior_cutoff: 0.002, ..Default::default() };
        SpectralGrid::new(&chart, settings).unwrap()
    }

    fn random_field(g: &SpectralGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::from_fn(g, |_, l| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)) / (l * l) as f64);
        for j in 0..g.nodes().len() {
            for l in 1..=g.modes() as i32 {
                f.coeffs[g.index(j, -l)] = f.coeffs[g.index(j, l)].conj();
            }
        }
        f
    }

    #[test]
    fn projection_drops_energy_functions_and_is_idempotent() {
        let g = grid(0.05, 16);
        let width = 2 * g.modes() + 1;
        let mut full = vec![Complex64::new(0.0, 0.0); g.nodes().len() * width];
        for j in 0..g.nodes().len() {
            full[j * width + g.modes()] = Complex64::new(g.nodes()[j].energy.cos(), 0.0);
        }
        let p = project_out_kernel(&g, &full).unwrap();
        assert!(p.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        let f = random_field(&g, 1);
        let mut with_zero = embed(&g, &f);
        assert_eq!(project_out_kernel(&g, &with_zero).unwrap(), f);
        for j in 0..g.nodes().len() {
            with_zero[j * width + g.modes()] = Complex64::new(1.0, 0.5);
        }
        assert!(g.hilbert_norm(&project_out_kernel(&g, &with_zero).unwrap()).unwrap() <= full_norm(&g, &with_zero));
        let state = SimState::new(&g, p).unwrap();
        assert_eq!(state.history[0].force_l2, 0.0);
    }

    #[test]
    fn free_transport_preserves_moduli_and_returns_after_a_period() {
        let g = grid(0.05, 16);
        let j = 3;
        let n = g.nodes()[j];
        let mut f = SpectralField::zeros(&g);
        f.coeffs[g.index(j, 1)] = Complex64::new(0.3, -0.4);
        f.coeffs[g.index(j, -1)] = Complex64::new(0.3, 0.4);
        let stepper = Stepper::new(&g, false);
        let mut s = SimState::new(&g, f.clone()).unwrap();
        let steps = 37;
        for _ in 0..steps {
            stepper.step(&mut s, n.period / steps as f64).unwrap();
        }
        for (a, b) in s.field.coeffs.iter().zip(&f.coeffs) {
            assert!((a - b).norm() < 1e-13);
        }
        let f = random_field(&g, 2);
        let mut s = SimState::new(&g, f.clone()).unwrap();
        stepper.step(&mut s, 0.731).unwrap();
        for (a, b) in s.field.coeffs.iter().zip(&f.coeffs) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn steps_reverse_in_time() {
        let g = grid(0.2, 16);
        let stepper = Stepper::new(&g, true);
        let f = random_field(&g, 3);
        let mut s = SimState::new(&g, f.clone()).unwrap();
        for _ in 0..10 {
            stepper.step(&mut s, 0.1).unwrap();
        }
        for _ in 0..10 {
            stepper.step(&mut s, -0.1).unwrap();
        }
        let err: f64 = s.field.coeffs.iter().zip(&f.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn splitting_is_second_order() {
        let g = grid(0.2, 16);
        let f = random_field(&g, 4);
        let stepper = Stepper::new(&g, true);
        let run = |dt: f64| {
            let mut s = SimState::new(&g, f.clone()).unwrap();
            for _ in 0..(10.0 / dt).round() as usize {
                stepper.step(&mut s, dt).unwrap();
            }
            s.history.last().unwrap().force_l2
        };
        let (a, b, c) = (run(0.1), run(0.05), run(0.025));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.8, "Richardson ratio {ratio}");
    }

    #[test]
    fn quadratic_form_is_conserved() {
        let g = grid(0.05, 32);
        let f = BumpData { exterior: true, ..Default::default() }.field(&g).unwrap();
        let rep = simulate(&g, f, &SimSettings { t_end: 50.0, dt: 0.1, coupling: true }).unwrap();
        let (q0, q1) = rep.quadratic_form;
        assert!((q1 / q0 - 1.0).abs() < 1e-6, "{q0} -> {q1}");
    }

    #[test]
    fn running_average_uses_trapezoid_rule() {
        let g = grid(0.05, 16);
        let f = random_field(&g, 5);
        let rep = simulate(&g, f, &SimSettings { t_end: 1.0, dt: 0.25, coupling: true }).unwrap();
        let h = &rep.history;
        let integral: f64 = h.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].force_l2 + w[1].force_l2)).sum();
        assert!((h.last().unwrap().running_avg - integral / h.last().unwrap().t).abs() < 1e-14);
        assert_eq!(rep.running_avg_at(0.5), Some(h[2].running_avg));
    }

    #[test]
    fn recurrence_horizon_grows_with_resolution() {
        let bump = BumpData::default();
        let a = grid(0.05, 32);
        let b = grid(0.05, 64);
        let ha = recurrence_horizon(&a, &bump.field(&a).unwrap());
        let hb = recurrence_horizon(&b, &bump.field(&b).unwrap());
        assert!(hb > 1.8 * ha, "{ha} -> {hb}");
        assert_eq!(recurrence_horizon(&a, &SpectralField::zeros(&a)), f64::INFINITY);
    }

    #[test]
    fn free_transport_mixes_and_running_average_decreases_on_dyadic_windows() {
        let g = grid(0.05, 128);
        let f = BumpData::default().field(&g).unwrap();
        let free = simulate(&g, f.clone(), &SimSettings { t_end: 100.0, dt: 0.2, coupling: false }).unwrap();
        let f0 = free.history[0].force_l2;
        let late = free.history.iter().filter(|d| d.t >= 50.0).fold(0.0, |m: f64, d| m.max(d.force_l2));
        assert!(late < 0.1 * f0, "{f0:e} -> {late:e}");
        let rep = simulate(&g, f, &SimSettings { t_end: 200.0, dt: 0.2, coupling: true }).unwrap();
        assert!(rep.recurrence_horizon > 200.0);
        for t in [25.0, 50.0, 100.0] {
            assert!(rep.running_avg_at(2.0 * t).unwrap() < rep.running_avg_at(t).unwrap());
        }
    }
}
