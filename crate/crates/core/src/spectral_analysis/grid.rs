use crate::action_angle::ActionAngleChart;
use crate::equilibria::{Branch, Equilibrium};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Phase-space sheet carrying its own angle-Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    /// Trapped energies `E_min < E < 0`.
    Trapped,
    /// Untrapped energies with `v > 0`.
    Up,
    /// Untrapped energies with `v < 0`.
    Down,
}

impl Sheet {
    /// Sign of the transport term `+- omega d/dtheta`.
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Down => -1.0,
            _ => 1.0,
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            Sheet::Down => Branch::Down,
            _ => Branch::Up,
        }
    }
}

/// Resolution of a spectral grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSettings {
    /// Angle modes `1 <= |l| <= modes`.
    pub modes: usize,
    /// Spatial Fourier modes `1 <= |k| <= spatial_modes` of the potential.
    pub spatial_modes: usize,
    /// Energies on the trapped sheet.
    pub trapped_energies: usize,
    /// Energies on each untrapped sheet.
    pub exterior_energies: usize,
    /// Minimum number of angle samples per orbit (raised near the separatrix).
    pub angle_samples: usize,
    /// Untrapped energies stop at `E_cut` with `eps^2 E_cut = exterior_cutoff`.
    pub exterior_cutoff: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            modes: 16,
            spatial_modes: 16,
            trapped_energies: 64,
            exterior_energies: 64,
            angle_samples: 256,
            exterior_cutoff: 20.0,
        }
    }
}

/// One energy quadrature node on one sheet.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyNode {
    pub sheet: Sheet,
    pub energy: f64,
    /// Quadrature weight in `E`.
    pub weight: f64,
    pub period: f64,
    /// `mu'(eps^2 E)` on the sheet's branch.
    pub dmu: f64,
    /// Row of the kernel table (shared by the two untrapped sheets).
    pub orbit: usize,
}

impl EnergyNode {
    pub fn frequency(&self) -> f64 {
        1.0 / self.period
    }

    /// Phase-space measure `T(E) dE` of the node.
    pub fn measure(&self) -> f64 {
        self.weight * self.period
    }
}

/// Number of angle samples for an orbit of period `t` resolving spatial modes up to `k`.
pub(crate) fn angle_samples_for(min: usize, modes: usize, k: usize, t: f64) -> usize {
    let want = (8.0 * k.max(1) as f64 * t).ceil() as usize;
    want.max(min).max(4 * modes + 4).next_power_of_two().min(1 << 15)
}

/// Fourier data of one orbit: `V_k(l, E) = int_S1 exp(2 pi i k x(theta, E)) exp(-2 pi i l theta) dtheta`
/// for `k = 1..=K`, `l = -L..=L`, optionally with the `E`-derivative.
pub(crate) fn orbit_kernel(
    chart: &ActionAngleChart,
    e: f64,
    modes: usize,
    spatial: usize,
    min_samples: usize,
    with_derivative: bool,
    planner: &mut FftPlanner<f64>,
) -> Result<(Vec<Complex64>, Option<Vec<Complex64>>)> {
    let t = chart.period(e)?;
    let n = angle_samples_for(min_samples, modes, spatial, t);
    let orbit = chart.orbit(e, n, with_derivative)?;
    let fft = planner.plan_fft_forward(n);
    let width = 2 * modes + 1;
    let mut v = vec![Complex64::new(0.0, 0.0); spatial * width];
    let mut dv = with_derivative.then(|| vec![Complex64::new(0.0, 0.0); spatial * width]);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for k in 1..=spatial {
        let kk = 2.0 * PI * k as f64;
        for (b, &x) in buf.iter_mut().zip(&orbit.x) {
            *b = Complex64::from_polar(scale, kk * x);
        }
        fft.process(&mut buf);
        for l in -(modes as i64)..=(modes as i64) {
            v[(k - 1) * width + (l + modes as i64) as usize] = buf[l.rem_euclid(n as i64) as usize];
        }
        if let (Some(dv), Some(dx)) = (dv.as_mut(), orbit.dx_de.as_ref()) {
            for ((b, &x), &d) in buf.iter_mut().zip(&orbit.x).zip(dx) {
                *b = Complex64::from_polar(scale, kk * x) * Complex64::new(0.0, kk * d);
            }
            fft.process(&mut buf);
            for l in -(modes as i64)..=(modes as i64) {
                dv[(k - 1) * width + (l + modes as i64) as usize] = buf[l.rem_euclid(n as i64) as usize];
            }
        }
    }
    Ok((v, dv))
}

/// Gauss-Legendre nodes on the trapped interval, clustered at both ends by
/// `E = E_min + |E_min| sin^2(pi s / 2)`.
pub fn trapped_nodes(e_min: f64, n: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(n);
    let a = e_min.abs();
    gl.mapped(0.0, 1.0)
        .map(|(s, w)| {
            let u = (0.5 * PI * s).sin().powi(2);
            (e_min + a * u, w * a * 0.5 * PI * (PI * s).sin())
        })
        .collect()
}

/// Gauss-Legendre nodes on `(0, e_cut)`: a quadratic map on `(0, |E_min|)` and a
/// logarithmic map above.
pub fn exterior_nodes(e_min: f64, e_cut: f64, n: usize) -> Vec<(f64, f64)> {
    let a = e_min.abs();
    let n_low = (n / 4).max(2);
    let n_high = n.saturating_sub(n_low).max(2);
    let mut out = Vec::with_capacity(n_low + n_high);
    for (s, w) in GaussLegendre::new(n_low).mapped(0.0, 1.0) {
        out.push((a * s * s, w * 2.0 * a * s));
    }
    let ratio = (e_cut / a).max(1.0 + 1e-9).ln();
    for (s, w) in GaussLegendre::new(n_high).mapped(0.0, 1.0) {
        let e = a * (s * ratio).exp();
        out.push((e, w * e * ratio));
    }
    out
}

/// Energy quadrature on the three sheets together with the orbit kernel `V_k(l, E)`.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    eps: f64,
    e_min: f64,
    e_cut: f64,
    settings: GridSettings,
    nodes: Vec<EnergyNode>,
    energies: Vec<f64>,
    kernel: Vec<Complex64>,
    excluded: usize,
}

impl SpectralGrid {
    pub fn new(chart: &ActionAngleChart, settings: GridSettings) -> Result<Self> {
        if settings.modes == 0 || settings.spatial_modes == 0 {
            return Err(Error::InvalidParameter("grid needs at least one angle and one spatial mode".into()));
        }
        if settings.trapped_energies < 2 || settings.exterior_energies < 4 {
            return Err(Error::InvalidParameter("grid needs >= 2 trapped and >= 4 untrapped energies".into()));
        }
        if !(settings.exterior_cutoff > 0.0) {
            return Err(Error::InvalidParameter("exterior cutoff must be positive".into()));
        }
        let eq = chart.equilibrium();
        let eps = eq.eps();
        let e_min = chart.e_min();
        let e_cut = (settings.exterior_cutoff / (eps * eps)).max(10.0 * e_min.abs());
        let mut energies = Vec::new();
        let mut nodes = Vec::new();
        let mut excluded = 0;
        let mut push = |sheet: Sheet, e: f64, w: f64, orbit: usize, nodes: &mut Vec<EnergyNode>| {
            let dmu = eq.dmu_at_energy(e, sheet.branch());
            if !dmu.is_finite() || dmu.abs() < 1e-12 {
                excluded += 1;
                return;
            }
            nodes.push(EnergyNode { sheet, energy: e, weight: w, period: 0.0, dmu, orbit });
        };
        for (e, w) in trapped_nodes(e_min, settings.trapped_energies) {
            energies.push(e);
            push(Sheet::Trapped, e, w, energies.len() - 1, &mut nodes);
        }
        let ext = exterior_nodes(e_min, e_cut, settings.exterior_energies);
        for sheet in [Sheet::Up, Sheet::Down] {
            for (j, &(e, w)) in ext.iter().enumerate() {
                let orbit = settings.trapped_energies + j;
                push(sheet, e, w, orbit, &mut nodes);
            }
        }
        energies.extend(ext.iter().map(|p| p.0));
        let width = 2 * settings.modes + 1;
        let mut kernel = vec![Complex64::new(0.0, 0.0); energies.len() * settings.spatial_modes * width];
        let mut periods = vec![0.0; energies.len()];
        let mut planner = FftPlanner::new();
        let used: std::collections::BTreeSet<usize> = nodes.iter().map(|n| n.orbit).collect();
        for &i in &used {
            let e = energies[i];
            periods[i] = chart.period(e)?;
            let (v, _) = orbit_kernel(chart, e, settings.modes, settings.spatial_modes, settings.angle_samples, false, &mut planner)?;
            let stride = settings.spatial_modes * width;
            kernel[i * stride..(i + 1) * stride].copy_from_slice(&v);
        }
        for n in &mut nodes {
            n.period = periods[n.orbit];
        }
        Ok(Self { eps, e_min, e_cut, settings, nodes, energies, kernel, excluded })
    }

    /// Grid with all couplings of `eq` but the geometry of `self` (same chart and nodes).
    pub fn with_equilibrium(&self, eq: &Equilibrium) -> Self {
        let mut g = self.clone();
        g.eps = eq.eps();
        g.nodes = self
            .nodes
            .iter()
            .map(|n| EnergyNode { dmu: eq.dmu_at_energy(n.energy, n.sheet.branch()), ..*n })
            .collect();
        g
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Largest untrapped energy of the grid.
    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    pub fn settings(&self) -> GridSettings {
        self.settings
    }

    pub fn modes(&self) -> usize {
        self.settings.modes
    }

    pub fn spatial_modes(&self) -> usize {
        self.settings.spatial_modes
    }

    pub fn nodes(&self) -> &[EnergyNode] {
        &self.nodes
    }

    /// Nodes dropped because `|mu'(eps^2 E)| < 1e-12` there.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    /// Number of complex coefficients of a field (`nodes x 2L`).
    pub fn len(&self) -> usize {
        self.nodes.len() * 2 * self.settings.modes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Angle modes in storage order: `-L..=-1, 1..=L`.
    pub fn ells(&self) -> impl Iterator<Item = i32> + Clone {
        let l = self.settings.modes as i32;
        (-l..=-1).chain(1..=l)
    }

    /// Storage slot of mode `l != 0`.
    pub fn slot(&self, l: i32) -> usize {
        let lm = self.settings.modes as i32;
        debug_assert!(l != 0 && l.abs() <= lm);
        if l < 0 {
            (l + lm) as usize
        } else {
            (l + lm - 1) as usize
        }
    }

    /// Coefficient index of `(node, l)`.
    pub fn index(&self, node: usize, l: i32) -> usize {
        node * 2 * self.settings.modes + self.slot(l)
    }

    /// `V_k(l, E_node)` for `k != 0`, `|k| <= K`, `|l| <= L` (including `l = 0`).
    pub fn kernel(&self, node: usize, k: i32, l: i32) -> Complex64 {
        self.kernel_row(self.nodes[node].orbit, k, l)
    }

    fn kernel_row(&self, row: usize, k: i32, l: i32) -> Complex64 {
        let width = 2 * self.settings.modes + 1;
        let stride = self.settings.spatial_modes * width;
        let lm = self.settings.modes as i32;
        if k > 0 {
            self.kernel[row * stride + (k as usize - 1) * width + (l + lm) as usize]
        } else {
            self.kernel[row * stride + ((-k) as usize - 1) * width + (-l + lm) as usize].conj()
        }
    }

    /// Distinct energies carrying kernel rows.
    pub fn orbit_energies(&self) -> &[f64] {
        &self.energies
    }
}
