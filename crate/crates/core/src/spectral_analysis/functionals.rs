use super::resonance::{resonance_map, ResonanceMap};
use super::table::{KernelTable, TableSample};
use super::trial::TrialPotential;
use crate::action_angle::ActionAngleChart;
use crate::equilibria::{Branch, MicroProfile, MonotonicityClass};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Quadrature resolution of the energy functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JSettings {
    /// Gauss-Legendre nodes per resonant window (clustered at the resonance).
    pub window_nodes: usize,
    /// Order of the Gauss-Legendre panels on the non-resonant bulk.
    pub panel_order: usize,
    /// Panel width in `log|E|` on the bulk.
    pub panel_width: f64,
    /// Largest angle mode (defaults to all modes of the kernel table).
    pub max_ell: Option<usize>,
}

impl Default for JSettings {
    fn default() -> Self {
        Self { window_nodes: 32, panel_order: 12, panel_width: 1.0, max_ell: None }
    }
}

impl JSettings {
    /// Doubled quadrature resolution.
    pub fn refined(&self) -> Self {
        Self { window_nodes: 2 * self.window_nodes, panel_order: 2 * self.panel_order, ..*self }
    }
}

/// `phi^(l, E)`, `phi^(-l, E)` and their energy derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModePair {
    pub plus: Complex64,
    pub dplus: Complex64,
    pub minus: Complex64,
    pub dminus: Complex64,
}

/// A family of potentials given through their angle-Fourier coefficients.
pub trait ModeSource {
    fn count(&self) -> usize;
    /// Coefficients of every member at the table sample, for mode `ell > 0` and parameter `q`.
    fn eval(&self, s: &TableSample<'_>, ell: i32, q: f64, out: &mut [ModePair]);
}

impl ModeSource for [TrialPotential] {
    fn count(&self) -> usize {
        self.len()
    }

    fn eval(&self, s: &TableSample<'_>, ell: i32, _q: f64, out: &mut [ModePair]) {
        for (t, o) in self.iter().zip(out.iter_mut()) {
            let (plus, dplus) = t.phi_hat(s, ell);
            let (minus, dminus) = t.phi_hat(s, -ell);
            *o = ModePair { plus, dplus, minus, dminus };
        }
    }
}

/// Which sign convention of the energy estimate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JCase {
    /// `mu` decreasing on the whole energy range.
    Monotone,
    /// `mu` increasing on the trapped range and decreasing above it.
    IncreasingTrapped,
}

impl JCase {
    pub fn of_profile(profile: &MicroProfile) -> Result<Self> {
        match profile.class() {
            MonotonicityClass::Decreasing => Ok(JCase::Monotone),
            MonotonicityClass::IncreasingThenDecreasing => Ok(JCase::IncreasingTrapped),
            MonotonicityClass::PerBranch => {
                Err(Error::Unsupported("energy functionals for branch-dependent profiles".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    /// `[E_l^1, E_l^{1,delta}]`, `T/(l q) > 1`.
    TrapWindow,
    /// `[E_l^{2,delta}, E_l^2]`, both untrapped sheets.
    ExtWindow,
    /// `[E_l^{1,-delta}, E_l^1]`, `T/(l q) < 1`.
    TrapUpWindow,
    /// `[E_l^{1,delta}, 0)`.
    NrTrap,
    /// `(0, E_l^{2,delta}]`, both untrapped sheets.
    NrExt,
    /// `(E_min, E_l^{1,-delta}]`.
    NrUpTrap,
    /// Mode `-l` on the whole trapped range.
    NrUpMinus,
}

impl Piece {
    fn sigma(self) -> f64 {
        if self == Piece::TrapUpWindow {
            -1.0
        } else {
            1.0
        }
    }

    fn sheet_factor(self) -> f64 {
        match self {
            Piece::ExtWindow | Piece::NrExt => 2.0,
            _ => 1.0,
        }
    }

    fn trapped(self) -> bool {
        !matches!(self, Piece::ExtWindow | Piece::NrExt)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    piece: Piece,
    ell: usize,
    energy: f64,
    weight: f64,
    period: [f64; 3],
    /// `l q log|T/(l q) - 1|` on windows.
    log_term: f64,
}

/// Per-`q` quadrature plan: nodes with their geometry and the mode values of each source.
/// Independent of `eps` and of the profile.
#[derive(Debug, Clone)]
pub struct JPlan {
    pub q: f64,
    pub delta: f64,
    pub case: JCase,
    /// Levels whose trapped window lies beyond the separatrix cutoff.
    pub beyond_cutoff: usize,
    count: usize,
    nodes: Vec<Node>,
    /// Boundary evaluations at the non-resonant window ends with their sign in the exact value.
    bounds: Vec<(Node, f64)>,
    modes: Vec<ModePair>,
    bound_modes: Vec<ModePair>,
}

/// Values of the energy functionals for one source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JValues {
    pub nr: f64,
    /// Majorant `-sigma int P dF/dE` of the trapped window term (non-resonant boundary term dropped).
    pub trap: f64,
    /// Majorant of the exterior window term.
    pub ext: f64,
    /// Trapped window term including the non-resonant boundary term.
    pub trap_exact: f64,
    /// Exterior window term including the non-resonant boundary term.
    pub ext_exact: f64,
}

impl JValues {
    pub fn total(&self) -> f64 {
        self.nr + self.trap + self.ext
    }
}

fn window_nodes(gl: &GaussLegendre, e_res: f64, e_other: f64) -> Vec<(f64, f64)> {
    let sgn = e_res.signum();
    let (zr, zo) = (e_res.abs().ln(), e_other.abs().ln());
    gl.mapped(0.0, 1.0)
        .map(|(u, w)| {
            let e = sgn * (zr + (zo - zr) * u * u * u).exp();
            (e, w * e.abs() * (zo - zr).abs() * 3.0 * u * u)
        })
        .collect()
}

fn log_panels(gl: &GaussLegendre, e_a: f64, e_b: f64, width: f64) -> Vec<(f64, f64)> {
    let sgn = e_a.signum();
    let (za, zb) = (e_a.abs().ln(), e_b.abs().ln());
    if za == zb {
        return Vec::new();
    }
    let panels = ((za - zb).abs() / width).ceil().max(1.0) as usize;
    gl.composite_points(za.min(zb), za.max(zb), panels)
        .into_iter()
        .map(|(z, w)| {
            let e = sgn * z.exp();
            (e, w * e.abs())
        })
        .collect()
}

impl JPlan {
    pub fn new<S: ModeSource + ?Sized>(
        table: &KernelTable,
        rmap: &ResonanceMap,
        source: &S,
        case: JCase,
        settings: &JSettings,
    ) -> Result<Self> {
        if settings.window_nodes < 2 || settings.panel_order < 2 || !(settings.panel_width > 0.0) {
            return Err(Error::InvalidParameter("energy functional resolution too small".into()));
        }
        if !(rmap.delta > 0.0 && rmap.delta < rmap.delta_bound) {
            return Err(Error::InvalidParameter(format!("delta = {} is not admissible", rmap.delta)));
        }
        let q = rmap.q;
        let (_, neg_tiny, pos_tiny, _) = table.range();
        let e_min = table.e_min();
        let wgl = GaussLegendre::new(settings.window_nodes);
        let pgl = GaussLegendre::new(settings.panel_order);
        let max_ell = settings.max_ell.unwrap_or(table.modes()).min(table.modes());
        let count = source.count();
        let mut plan = JPlan { q, delta: rmap.delta, case, beyond_cutoff: 0, count, nodes: Vec::new(), bounds: Vec::new(), modes: Vec::new(), bound_modes: Vec::new() };
        let mut buf = vec![ModePair::default(); count];
        let mut push = |plan: &mut JPlan, piece: Piece, ell: usize, e: f64, w: f64, t_res: Option<f64>, bound: Option<f64>| -> Result<()> {
            let s = table.sample(e)?;
            let period = s.period();
            let lq = ell as f64 * q;
            let d = match t_res {
                Some(tr) => (period[0] - tr) / lq,
                None => period[0] / lq - 1.0,
            };
            let node = Node { piece, ell, energy: e, weight: w, period, log_term: lq * d.abs().ln() };
            source.eval(&s, ell as i32, q, &mut buf);
            match bound {
                Some(sign) => {
                    plan.bounds.push((node, sign));
                    plan.bound_modes.extend_from_slice(&buf);
                }
                None => {
                    plan.nodes.push(node);
                    plan.modes.extend_from_slice(&buf);
                }
            }
            Ok(())
        };
        for lv in rmap.levels.iter().filter(|lv| lv.ell <= max_ell) {
            let ell = lv.ell;
            // Genuine resonance: T(E_res) = l q, evaluated through the table for consistency.
            let t_res = |e: f64| -> Result<Option<f64>> {
                if e > e_min { Ok(Some(table.period(e)?[0])) } else { Ok(None) }
            };
            match case {
                JCase::Monotone => match (lv.e1, lv.e1_plus) {
                    (None, _) => plan.beyond_cutoff += 1,
                    (Some(e1), e1p) => {
                        let hi = e1p.unwrap_or(neg_tiny);
                        if hi > e1 {
                            let tr = t_res(e1)?;
                            for (e, w) in window_nodes(&wgl, if e1 > e_min { e1 } else { e_min }, hi) {
                                push(&mut plan, Piece::TrapWindow, ell, e, w, tr, None)?;
                            }
                            push(&mut plan, Piece::TrapWindow, ell, hi, 0.0, tr, Some(1.0))?;
                        }
                        if let Some(e1p) = e1p {
                            for (e, w) in log_panels(&pgl, e1p, neg_tiny, settings.panel_width) {
                                push(&mut plan, Piece::NrTrap, ell, e, w, None, None)?;
                            }
                        }
                    }
                },
                JCase::IncreasingTrapped => {
                    let lo = lv.e1_minus.unwrap_or(neg_tiny);
                    if lo > e_min {
                        for (e, w) in log_panels(&pgl, e_min, lo, settings.panel_width) {
                            push(&mut plan, Piece::NrUpTrap, ell, e, w, None, None)?;
                        }
                    }
                    match lv.e1 {
                        None => plan.beyond_cutoff += 1,
                        Some(e1) if e1 > lo => {
                            let tr = t_res(e1)?;
                            for (e, w) in window_nodes(&wgl, e1, lo) {
                                push(&mut plan, Piece::TrapUpWindow, ell, e, w, tr, None)?;
                            }
                            push(&mut plan, Piece::TrapUpWindow, ell, lo, 0.0, tr, Some(-1.0))?;
                        }
                        Some(_) => {}
                    }
                    for (e, w) in log_panels(&pgl, e_min, neg_tiny, settings.panel_width) {
                        push(&mut plan, Piece::NrUpMinus, ell, e, w, None, None)?;
                    }
                }
            }
            match (lv.e2, lv.e2_delta) {
                (Some(e2), e2d) => {
                    let lo = e2d.unwrap_or(pos_tiny);
                    if e2 > lo {
                        let tr = Some(table.period(e2)?[0]);
                        for (e, w) in window_nodes(&wgl, e2, lo) {
                            push(&mut plan, Piece::ExtWindow, ell, e, w, tr, None)?;
                        }
                        push(&mut plan, Piece::ExtWindow, ell, lo, 0.0, tr, Some(-1.0))?;
                    }
                    if let Some(e2d) = e2d {
                        for (e, w) in log_panels(&pgl, pos_tiny, e2d, settings.panel_width) {
                            push(&mut plan, Piece::NrExt, ell, e, w, None, None)?;
                        }
                    }
                }
                (None, _) => {}
            }
        }
        Ok(plan)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn mode_rows(&self) -> impl Iterator<Item = &[ModePair]> {
        self.modes.chunks(self.count.max(1))
    }

    /// Functionals of every source for the profile `mu` at parameter `eps`.
    pub fn evaluate(&self, profile: &MicroProfile, eps: f64) -> Result<Vec<JValues>> {
        if JCase::of_profile(profile)? != self.case {
            return Err(Error::InvalidParameter("plan was built for another monotonicity class".into()));
        }
        let e2 = eps * eps;
        let mut out = vec![JValues::default(); self.count];
        let mut rows = self.mode_rows();
        let weights = |n: &Node| {
            let m = profile.dmu(e2 * n.energy, Branch::Up);
            let dm = m.signum() * e2 * profile.d2mu(e2 * n.energy, Branch::Up);
            let [t, t1, t2] = n.period;
            let g = t * m.abs() / t1;
            let dg = ((t1 * m.abs() + t * dm) * t1 - t * m.abs() * t2) / (t1 * t1);
            (m.abs(), g, dg)
        };
        let window_density = |n: &Node, p: &ModePair| -> (f64, f64) {
            let mut s = p.plus.norm_sqr();
            let mut ds = 2.0 * (p.plus.conj() * p.dplus).re;
            if !n.piece.trapped() {
                s += p.minus.norm_sqr();
                ds += 2.0 * (p.minus.conj() * p.dminus).re;
            }
            (n.piece.sheet_factor() * s, n.piece.sheet_factor() * ds)
        };
        for n in &self.nodes {
            let row = rows.next().ok_or_else(|| Error::Numerical("mode table out of sync".into()))?;
            let (am, g, dg) = weights(n);
            let t = n.period[0] / (n.ell as f64 * self.q);
            for (o, p) in out.iter_mut().zip(row) {
                match n.piece {
                    Piece::NrTrap => o.nr += n.weight * n.period[0] * am / (t - 1.0) * p.plus.norm_sqr(),
                    Piece::NrExt => {
                        o.nr += n.weight * 2.0 * n.period[0] * am / (t - 1.0) * (p.plus.norm_sqr() + p.minus.norm_sqr())
                    }
                    Piece::NrUpTrap => o.nr += n.weight * n.period[0] * am / (1.0 - t) * p.plus.norm_sqr(),
                    Piece::NrUpMinus => o.nr += n.weight * n.period[0] * am / (t + 1.0) * p.minus.norm_sqr(),
                    Piece::TrapWindow | Piece::ExtWindow | Piece::TrapUpWindow => {
                        let (s, ds) = window_density(n, p);
                        let c = -n.piece.sigma() * n.weight * n.log_term * (dg * s + g * ds);
                        if n.piece.trapped() {
                            o.trap += c;
                        } else {
                            o.ext += c;
                        }
                    }
                }
            }
        }
        for (o, _) in out.iter_mut().zip(0..) {
            o.trap_exact = o.trap;
            o.ext_exact = o.ext;
        }
        for ((n, sign), row) in self.bounds.iter().zip(self.bound_modes.chunks(self.count.max(1))) {
            let (_, g, _) = weights(n);
            for (o, p) in out.iter_mut().zip(row) {
                let (s, _) = window_density(n, p);
                let b = sign * n.piece.sigma() * n.log_term * g * s;
                if n.piece.trapped() {
                    o.trap_exact += b;
                } else {
                    o.ext_exact += b;
                }
            }
        }
        Ok(out)
    }

    /// Positive part of the energy integrand (monotone case) integrated directly on the
    /// same nodes: `sum_l int_{E_l^1}^0 T|mu'|/(t-1) |phi^(l)|^2 + 2 int_0^{E_l^2} T|mu'|/(t-1) S`.
    /// Finite only for sources that vanish at the resonances.
    pub fn positive_part_direct(&self, profile: &MicroProfile, eps: f64) -> Result<Vec<f64>> {
        if self.case != JCase::Monotone {
            return Err(Error::Unsupported("direct positive part is defined for the monotone case".into()));
        }
        let e2 = eps * eps;
        let mut out = vec![0.0; self.count];
        for (n, row) in self.nodes.iter().zip(self.mode_rows()) {
            let m = profile.dmu(e2 * n.energy, Branch::Up).abs();
            let t = n.period[0] / (n.ell as f64 * self.q);
            for (o, p) in out.iter_mut().zip(row) {
                let s = if n.piece.trapped() { p.plus.norm_sqr() } else { p.plus.norm_sqr() + p.minus.norm_sqr() };
                *o += n.weight * n.piece.sheet_factor() * n.period[0] * m / (t - 1.0) * s;
            }
        }
        Ok(out)
    }
}

/// Energy functionals of trial potentials at one `q`.
pub fn j_functionals(
    chart: &ActionAngleChart,
    table: &KernelTable,
    trials: &[TrialPotential],
    q: f64,
    delta: Option<f64>,
    eps: f64,
    settings: &JSettings,
) -> Result<Vec<JValues>> {
    let profile = chart.equilibrium().profile();
    let case = JCase::of_profile(profile)?;
    let rmap = resonance_map(chart, q, delta, Some(table.modes()))?;
    JPlan::new(table, &rmap, trials, case, settings)?.evaluate(profile, eps)
}

/// Parameters of the contradiction sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    pub q_min: f64,
    pub q_max: f64,
    pub q_points: usize,
    pub trials: usize,
    /// Spatial modes of the trial potentials.
    pub trial_modes: usize,
    pub seed: u64,
    pub eps: Vec<f64>,
    /// `None` takes half the admissible bound.
    pub delta: Option<f64>,
    pub j: JSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            q_min: 0.2,
            q_max: 20.0,
            q_points: 40,
            trials: 10,
            trial_modes: 8,
            seed: 7,
            eps: vec![0.1, 0.05, 0.025],
            delta: None,
            j: JSettings::default(),
        }
    }
}

/// Sweep results for one `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLevel {
    pub eps: f64,
    /// `max_trials R(q, phi)` per `q`.
    pub r_values: Vec<f64>,
    pub sup_r: f64,
    /// `sup eps^3 J_trap / (eps^2 ||phi'||^2)`.
    pub trap_fit: f64,
    /// `sup delta J_nr / ||phi'||^2`.
    pub nr_fit: f64,
    /// `sup eps^3 J_ext / (eps ||phi'||^2)`.
    pub ext_fit: f64,
}

/// Output of [`contradiction_constant`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub q_grid: Vec<f64>,
    pub delta: Vec<f64>,
    pub levels: Vec<SweepLevel>,
    /// `C* = max_eps sup R / eps`.
    pub c_star: f64,
    /// `1 / C*`.
    pub eps0: f64,
    /// Log-log slopes of `sup R` between consecutive `eps`.
    pub slopes: Vec<f64>,
    /// Trapped windows skipped beyond the separatrix cutoff, summed over the sweep.
    pub beyond_cutoff: usize,
}

/// Logarithmically spaced grid on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Sweep of `R(q, phi) = eps^3 (J_nr + J_trap + J_ext) / ||d_x phi||^2` over a `q` grid,
/// seeded random trial potentials and several `eps`, with the implied `eps_0 = 1/C*`.
pub fn contradiction_constant(chart: &ActionAngleChart, table: &KernelTable, settings: &SweepSettings) -> Result<SweepReport> {
    if settings.q_points == 0 || settings.trials == 0 || settings.eps.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    if !(settings.q_min > 0.0 && settings.q_max >= settings.q_min) {
        return Err(Error::InvalidParameter("sweep needs 0 < q_min <= q_max".into()));
    }
    let profile = chart.equilibrium().profile();
    let case = JCase::of_profile(profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let trials: Vec<TrialPotential> = (0..settings.trials).map(|_| TrialPotential::random(settings.trial_modes, &mut rng)).collect();
    let norms: Vec<f64> = trials.iter().map(|t| t.force_l2().powi(2)).collect();
    let q_grid = log_grid(settings.q_min, settings.q_max, settings.q_points);
    let mut levels: Vec<SweepLevel> = settings
        .eps
        .iter()
        .map(|&eps| SweepLevel { eps, r_values: Vec::new(), sup_r: 0.0, trap_fit: 0.0, nr_fit: 0.0, ext_fit: 0.0 })
        .collect();
    let mut deltas = Vec::new();
    let mut beyond = 0;
    for &q in &q_grid {
        let rmap = resonance_map(chart, q, settings.delta, Some(table.modes()))?;
        let plan = JPlan::new(table, &rmap, trials.as_slice(), case, &settings.j)?;
        beyond += plan.beyond_cutoff;
        deltas.push(rmap.delta);
        for lvl in levels.iter_mut() {
            let eps = lvl.eps;
            let e3 = eps.powi(3);
            let vals = plan.evaluate(profile, eps)?;
            let mut r_max: f64 = 0.0;
            for (v, n2) in vals.iter().zip(&norms) {
                r_max = r_max.max(e3 * v.total() / n2);
                lvl.trap_fit = lvl.trap_fit.max(eps * v.trap / n2);
                lvl.nr_fit = lvl.nr_fit.max(rmap.delta * v.nr / n2);
                lvl.ext_fit = lvl.ext_fit.max(eps * eps * v.ext / n2);
            }
            lvl.r_values.push(r_max);
            lvl.sup_r = lvl.sup_r.max(r_max);
        }
    }
    let c_star = levels.iter().map(|l| l.sup_r / l.eps).fold(0.0, f64::max);
    let slopes = levels.windows(2).map(|w| (w[0].sup_r / w[1].sup_r).ln() / (w[0].eps / w[1].eps).ln()).collect();
    Ok(SweepReport { q_grid, delta: deltas, levels, c_star, eps0: 1.0 / c_star, slopes, beyond_cutoff: beyond })
}
