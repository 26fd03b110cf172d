//! Turning points, the period function and its derivatives, angle coordinates and the
//! inverse chart `(theta, E) -> (x, v)`.

mod cheb;
mod orbit;

pub use cheb::Chebyshev;
pub use orbit::{chart_energy_derivative, EnergyDerivative, Orbit};

use crate::equilibria::{Equilibrium, PotentialProfile};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::roots;
use serde::{Deserialize, Serialize};

/// Quadrature and table resolution of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartSettings {
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Panels per integration piece.
    pub panels: usize,
    /// Table entries per region (0 disables the table).
    pub table_points: usize,
    /// Largest tabulated energy in units of `|E_min|`.
    pub e_max_factor: f64,
    /// Closest tabulated distance to the singular energies, in units of `|E_min|`.
    pub closest_offset: f64,
}

impl Default for ChartSettings {
    fn default() -> Self {
        Self { nodes_per_panel: 64, panels: 4, table_points: 512, e_max_factor: 50.0, closest_offset: 1e-8 }
    }
}

/// One row of the period table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub energy: f64,
    pub period: f64,
    pub period_deriv: f64,
    pub period_deriv2: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub elliptic: bool,
    pub hyperbolic: bool,
    pub exterior: bool,
}

/// Half-width of the interpolation window around the maximum of the potential.
const CORE_DX: f64 = 2e-3;
/// Energies below this fraction of `|E_min|` above `E_min` take derivatives from the
/// Chebyshev interpolant of `T`.
const CORE_SWITCH: f64 = 0.01;
const CORE_WIDTH: f64 = 0.04;
const CORE_NODES: usize = 16;

#[derive(Debug, Clone, Copy)]
enum Piece {
    /// `y = xl + (xr - xl) sin^2(pi u / 2)`, u in [0, 1].
    Cos { xl: f64, xr: f64 },
    /// `y = xt + c sinh^2 t`, t in [0, tmax].
    SinhL { xt: f64, c: f64, tmax: f64 },
    /// `y = xt - c sinh^2 t`, t in [0, tmax].
    SinhR { xt: f64, c: f64, tmax: f64 },
    Plain { a: f64, b: f64 },
    /// `y = c sinh t`, t in [0, tmax].
    AsinhL { c: f64, tmax: f64 },
    /// `y = 1 - c sinh t`, t in [0, tmax].
    AsinhR { c: f64, tmax: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Node {
    y: f64,
    jac: f64,
    gap: f64,
}

impl Piece {
    fn range(&self) -> (f64, f64) {
        match *self {
            Piece::Cos { .. } => (0.0, 1.0),
            Piece::SinhL { tmax, .. } | Piece::SinhR { tmax, .. } => (0.0, tmax),
            Piece::AsinhL { tmax, .. } | Piece::AsinhR { tmax, .. } => (0.0, tmax),
            Piece::Plain { a, b } => (a, b),
        }
    }

    /// True if the parameter runs against increasing position.
    fn reversed(&self) -> bool {
        matches!(self, Piece::SinhR { .. } | Piece::AsinhR { .. })
    }

    fn node(&self, pot: &PotentialProfile, x0: f64, e: f64, t: f64) -> Node {
        use std::f64::consts::PI;
        match *self {
            Piece::Cos { xl, xr } => {
                let l = xr - xl;
                let s = (0.5 * PI * t).sin();
                let co = (0.5 * PI * t).cos();
                let y = xl + l * s * s;
                let jac = l * PI * s * co;
                let gap = if y < x0 { pot.phi_step(xl, l * s * s) } else { pot.phi_step(xr, -l * co * co) };
                Node { y, jac, gap }
            }
            Piece::SinhL { xt, c, .. } => {
                let sh = t.sinh();
                let off = c * sh * sh;
                Node { y: xt + off, jac: 2.0 * c * sh * t.cosh(), gap: pot.phi_step(xt, off) }
            }
            Piece::SinhR { xt, c, .. } => {
                let sh = t.sinh();
                let off = c * sh * sh;
                Node { y: xt - off, jac: 2.0 * c * sh * t.cosh(), gap: pot.phi_step(xt, -off) }
            }
            Piece::Plain { .. } => Node { y: t, jac: 1.0, gap: e + pot.phi(t) },
            Piece::AsinhL { c, .. } => {
                let y = c * t.sinh();
                Node { y, jac: c * t.cosh(), gap: e + pot.phi(y) }
            }
            Piece::AsinhR { c, .. } => {
                let y = 1.0 - c * t.sinh();
                Node { y, jac: c * t.cosh(), gap: e + pot.phi(y) }
            }
        }
    }

    fn param(&self, y: f64) -> f64 {
        match *self {
            Piece::Cos { xl, xr } => {
                let r = ((y - xl) / (xr - xl)).clamp(0.0, 1.0);
                2.0 / std::f64::consts::PI * r.sqrt().asin()
            }
            Piece::SinhL { xt, c, tmax } => ((y - xt).max(0.0) / c).sqrt().asinh().min(tmax),
            Piece::SinhR { xt, c, tmax } => ((xt - y).max(0.0) / c).sqrt().asinh().min(tmax),
            Piece::Plain { a, b } => y.clamp(a, b),
            Piece::AsinhL { c, tmax } => (y.max(0.0) / c).asinh().min(tmax),
            Piece::AsinhR { c, tmax } => ((1.0 - y).max(0.0) / c).asinh().min(tmax),
        }
    }

    fn y_end(&self, pot_x: (f64, f64)) -> (f64, f64) {
        match *self {
            Piece::Cos { xl, xr } => (xl, xr),
            Piece::SinhL { xt, .. } => (xt, pot_x.0),
            Piece::SinhR { xt, .. } => (pot_x.1, xt),
            Piece::Plain { a, b } => (a, b),
            Piece::AsinhL { .. } => (0.0, pot_x.0),
            Piece::AsinhR { .. } => (pot_x.1, 1.0),
        }
    }
}

/// Action-angle chart of an equilibrium: period function, turning points and angles.
#[derive(Debug, Clone)]
pub struct ActionAngleChart {
    eq: Equilibrium,
    settings: ChartSettings,
    gl: GaussLegendre,
    e_min: f64,
    estar: f64,
    xs: (f64, f64),
    g1_stencil: [(f64, f64, f64); 4],
    core: Option<Chebyshev>,
    table: Vec<TableRow>,
}

/// Picks `E* = -phi(x_c)/2` from the inflection points nearest both ends and checks the
/// convexity window `phi'' > 0` on `[0, x_-(E*)]` and `[x_+(E*), 1]`.
pub fn choose_estar(eq: &Equilibrium) -> Result<f64> {
    let pot = eq.potential();
    let x0 = pot.x0();
    if !(pot.d2phi(0.0) > 0.0) || !(pot.d2phi(1.0) > 0.0) {
        return Err(Error::Assumption("phi2: potential is not strictly convex at the endpoints".into()));
    }
    let n = 4096;
    let find = |from: f64, to: f64| -> Result<f64> {
        let mut prev = from;
        for i in 1..=n {
            let x = from + (to - from) * i as f64 / n as f64;
            if pot.d2phi(x) <= 0.0 {
                return roots::bisect(|y| pot.d2phi(y), prev, x, 1e-15, 1e-16);
            }
            prev = x;
        }
        Err(Error::Assumption("phi2: no inflection point between an endpoint and the maximum".into()))
    };
    let xl = find(0.0, x0)?;
    let xr = find(1.0, x0)?;
    let estar = -0.5 * pot.phi(xl).min(pot.phi(xr));
    let (a, b) = turning_points_raw(pot, -pot.phi_max(), estar)?;
    for i in 0..=256 {
        let s = i as f64 / 256.0;
        if !(pot.d2phi(a * s) > 0.0) || !(pot.d2phi(1.0 - (1.0 - b) * s) > 0.0) {
            return Err(Error::Assumption("phi2: convexity window around the endpoints fails".into()));
        }
    }
    Ok(estar)
}

fn turning_points_raw(pot: &PotentialProfile, e_min: f64, e: f64) -> Result<(f64, f64)> {
    if !(e > e_min && e < 0.0) {
        return Err(Error::EnergyOutOfRange { energy: e, reason: "turning points need E_min < E < 0".into() });
    }
    let x0 = pot.x0();
    let (l, r) = if e < 0.5 * e_min {
        let eps_rel = e - e_min;
        let f = |x: f64| pot.depth(x) - eps_rel;
        let df = |x: f64| -pot.dphi(x);
        (
            roots::bisect_newton(f, df, 0.0, x0, 1e-16, 1e-300)?,
            roots::bisect_newton(f, df, x0, 1.0, 1e-16, 1e-300)?,
        )
    } else {
        let f = |x: f64| pot.phi(x) + e;
        let fr = |x: f64| pot.phi(1.0 - x) + e;
        let df = |x: f64| pot.dphi(x);
        let l = roots::bisect_newton(f, df, 0.0, x0, 1e-16, 1e-300)?;
        // bisect on the distance to 1 so that right turning points near 1 keep relative accuracy
        let d = roots::bisect_newton(fr, |x| -pot.dphi(1.0 - x), 0.0, 1.0 - x0, 1e-16, 1e-300)?;
        (l, 1.0 - d)
    };
    Ok((l, r))
}

fn lagrange4(nodes: &[(f64, f64, f64); 4], x: f64, pick: impl Fn(&(f64, f64, f64)) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - nodes[j].0) / (nodes[i].0 - nodes[j].0);
            }
        }
        s += w * pick(&nodes[i]);
    }
    s
}

impl ActionAngleChart {
    pub fn new(eq: &Equilibrium) -> Result<Self> {
        Self::with_settings(eq, ChartSettings::default())
    }

    pub fn with_settings(eq: &Equilibrium, settings: ChartSettings) -> Result<Self> {
        if settings.nodes_per_panel < 4 || settings.panels == 0 {
            return Err(Error::InvalidParameter("chart quadrature needs >= 4 nodes and >= 1 panel".into()));
        }
        if settings.table_points != 0 && settings.table_points < 16 {
            return Err(Error::InvalidParameter("chart table needs at least 16 points per region".into()));
        }
        let estar = choose_estar(eq)?;
        let pot = eq.potential();
        let e_min = eq.e_min();
        let xs = turning_points_raw(pot, e_min, estar)?;
        let x0 = pot.x0();
        let mut g1_stencil = [(0.0, 0.0, 0.0); 4];
        for (k, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            let x = x0 + off * CORE_DX;
            g1_stencil[k] = (x, raw_g1(pot, x), raw_g1_prime(pot, x));
        }
        let mut chart = Self {
            eq: eq.clone(),
            settings,
            gl: GaussLegendre::new(settings.nodes_per_panel),
            e_min,
            estar,
            xs,
            g1_stencil,
            core: None,
            table: Vec::new(),
        };
        let width = CORE_WIDTH * e_min.abs();
        let nodes = Chebyshev::nodes(0.0, width, CORE_NODES);
        let vals = nodes.iter().map(|&r| chart.period(e_min + r)).collect::<Result<Vec<_>>>()?;
        chart.core = Some(Chebyshev::from_values(0.0, width, &vals));
        if settings.table_points > 0 {
            chart.table = chart.build_table()?;
        }
        Ok(chart)
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    pub fn potential(&self) -> &PotentialProfile {
        self.eq.potential()
    }

    pub fn settings(&self) -> ChartSettings {
        self.settings
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Negative energy bounding the hyperbolic region.
    pub fn estar(&self) -> f64 {
        self.estar
    }

    pub fn e_max(&self) -> f64 {
        self.settings.e_max_factor * self.e_min.abs()
    }

    /// Turning points at `E*`.
    pub fn estar_turning_points(&self) -> (f64, f64) {
        self.xs
    }

    pub fn table(&self) -> &[TableRow] {
        &self.table
    }

    /// `E in (E_min, E*/2)`.
    pub fn in_elliptic(&self, e: f64) -> bool {
        e > self.e_min && e < 0.5 * self.estar
    }

    /// `E in (E*, 0) or (0, |E*|)`.
    pub fn in_hyperbolic(&self, e: f64) -> bool {
        (e > self.estar && e < 0.0) || (e > 0.0 && e < self.estar.abs())
    }

    /// `E > |E*|/2`.
    pub fn in_exterior(&self, e: f64) -> bool {
        e > 0.5 * self.estar.abs()
    }

    fn check_energy(&self, e: f64) -> Result<()> {
        if !e.is_finite() || e <= self.e_min + 1e-14 || e.abs() < 1e-14 {
            return Err(Error::EnergyOutOfRange {
                energy: e,
                reason: format!("singular limit (E_min = {:e}, separatrix at 0)", self.e_min),
            });
        }
        Ok(())
    }

    /// Turning points `x_-(E) < x0 < x_+(E)` for trapped energies.
    pub fn turning_points(&self, e: f64) -> Result<(f64, f64)> {
        self.check_energy(e)?;
        turning_points_raw(self.potential(), self.e_min, e)
    }

    /// Turning points, extended by `(0, 1)` for untrapped energies.
    pub fn orbit_interval(&self, e: f64) -> Result<(f64, f64)> {
        if e > 0.0 {
            self.check_energy(e)?;
            Ok((0.0, 1.0))
        } else {
            self.turning_points(e)
        }
    }

    fn pieces(&self, e: f64) -> Result<Vec<Piece>> {
        self.check_energy(e)?;
        let pot = self.potential();
        if e < 0.0 {
            let (xl, xr) = turning_points_raw(pot, self.e_min, e)?;
            if e <= 0.5 * self.estar {
                return Ok(vec![Piece::Cos { xl, xr }]);
            }
            let (a, b) = self.xs;
            let kl = 0.5 * pot.d2phi(xl);
            let cl = pot.dphi(xl) / kl;
            let kr = 0.5 * pot.d2phi(xr);
            let cr = -pot.dphi(xr) / kr;
            Ok(vec![
                Piece::SinhL { xt: xl, c: cl, tmax: ((a - xl) / cl).sqrt().asinh() },
                Piece::Plain { a, b },
                Piece::SinhR { xt: xr, c: cr, tmax: ((xr - b) / cr).sqrt().asinh() },
            ])
        } else if e >= 0.5 * self.estar.abs() {
            Ok(vec![Piece::Plain { a: 0.0, b: 1.0 }])
        } else {
            let (a, b) = self.xs;
            let cl = (2.0 * e / pot.d2phi(0.0)).sqrt();
            let cr = (2.0 * e / pot.d2phi(1.0)).sqrt();
            Ok(vec![
                Piece::AsinhL { c: cl, tmax: (a / cl).asinh() },
                Piece::Plain { a, b },
                Piece::AsinhR { c: cr, tmax: ((1.0 - b) / cr).asinh() },
            ])
        }
    }

    fn integrate_piece<F: FnMut(&Node) -> f64>(&self, p: &Piece, e: f64, lo: f64, hi: f64, f: &mut F) -> f64 {
        let pot = self.potential();
        let x0 = pot.x0();
        let h = (hi - lo) / self.settings.panels as f64;
        let mut s = 0.0;
        for k in 0..self.settings.panels {
            let a = lo + h * k as f64;
            for (t, w) in self.gl.mapped(a, a + h) {
                let n = p.node(pot, x0, e, t);
                s += w * n.jac * f(&n);
            }
        }
        s
    }

    fn integrate<F: FnMut(&Node) -> f64>(&self, e: f64, mut f: F) -> Result<f64> {
        let mut s = 0.0;
        for p in self.pieces(e)? {
            let (lo, hi) = p.range();
            s += self.integrate_piece(&p, e, lo, hi, &mut f);
        }
        Ok(s)
    }

    /// Period `T(E)` of the orbit at energy `E`.
    pub fn period(&self, e: f64) -> Result<f64> {
        let half = self.integrate(e, |n| 1.0 / (2.0 * n.gap).sqrt())?;
        Ok(if e < 0.0 { 2.0 * half } else { half })
    }

    /// Frequency `1 / T(E)`.
    pub fn frequency(&self, e: f64) -> Result<f64> {
        Ok(1.0 / self.period(e)?)
    }

    fn g1(&self, y: f64) -> f64 {
        let pot = self.potential();
        if (y - pot.x0()).abs() < 1.5 * CORE_DX {
            lagrange4(&self.g1_stencil, y, |n| n.1)
        } else {
            raw_g1(pot, y)
        }
    }

    fn g1_prime(&self, y: f64) -> f64 {
        let pot = self.potential();
        if (y - pot.x0()).abs() < 1.5 * CORE_DX {
            lagrange4(&self.g1_stencil, y, |n| n.2)
        } else {
            raw_g1_prime(pot, y)
        }
    }

    /// `G(y) = (phi'^2 + 2 phi'' (phi(x0) - phi)) / phi'^2`, continuous through `x0`.
    pub fn g_function(&self, y: f64) -> f64 {
        self.g1(y) * self.potential().dphi(y)
    }

    /// `T'(E)` for trapped energies through the `G` representation; for untrapped
    /// energies the differentiated exterior integral.
    pub fn period_deriv_g_formula(&self, e: f64) -> Result<f64> {
        if e > 0.0 {
            return self.integrate(e, |n| -(2.0 * n.gap).powf(-1.5));
        }
        let rel = e - self.e_min;
        let s = self.integrate(e, |n| self.g_function(n.y) / (2.0 * n.gap).sqrt())?;
        Ok(s / rel)
    }

    /// `T''(E)` for trapped energies through the `G_1'` representation; for untrapped
    /// energies the twice-differentiated exterior integral.
    pub fn period_deriv2_g_formula(&self, e: f64) -> Result<f64> {
        if e > 0.0 {
            return self.integrate(e, |n| 3.0 * (2.0 * n.gap).powf(-2.5));
        }
        let rel = e - self.e_min;
        let pot = self.potential();
        let s = self.integrate(e, |n| {
            let num = n.gap - pot.depth(n.y);
            self.g1_prime(n.y) * num / (2.0 * n.gap).sqrt()
        })?;
        Ok(s / (rel * rel))
    }

    fn in_core(&self, e: f64) -> bool {
        e < 0.0 && e - self.e_min < CORE_SWITCH * self.e_min.abs()
    }

    /// `T'(E)`.
    pub fn period_deriv(&self, e: f64) -> Result<f64> {
        self.check_energy(e)?;
        match (&self.core, self.in_core(e)) {
            (Some(c), true) => Ok(c.derivative(e - self.e_min, 1)),
            _ => self.period_deriv_g_formula(e),
        }
    }

    /// `T''(E)`.
    pub fn period_deriv2(&self, e: f64) -> Result<f64> {
        self.check_energy(e)?;
        match (&self.core, self.in_core(e)) {
            (Some(c), true) => Ok(c.derivative(e - self.e_min, 2)),
            _ => self.period_deriv2_g_formula(e),
        }
    }

    /// `(T, T', T'')` at `E`.
    pub fn period_all(&self, e: f64) -> Result<[f64; 3]> {
        Ok([self.period(e)?, self.period_deriv(e)?, self.period_deriv2(e)?])
    }

    /// Travel time from the left end of the orbit (`x_-(E)`, or 0 when untrapped) to `x`
    /// along the branch with `v >= 0`.
    pub fn time_to(&self, e: f64, x: f64) -> Result<f64> {
        let pieces = self.pieces(e)?;
        let mut s = 0.0;
        let inv = |n: &Node| 1.0 / (2.0 * n.gap).sqrt();
        for p in &pieces {
            let (ya, yb) = p.y_end(self.xs);
            let (lo, hi) = p.range();
            if x >= yb {
                s += self.integrate_piece(p, e, lo, hi, &mut { inv });
                continue;
            }
            if x > ya {
                let t = p.param(x);
                s += if p.reversed() {
                    self.integrate_piece(p, e, t, hi, &mut { inv })
                } else {
                    self.integrate_piece(p, e, lo, t, &mut { inv })
                };
            }
            break;
        }
        Ok(s)
    }

    /// Angle coordinate of the phase-space point `(x, v)`.
    pub fn angle(&self, x: f64, v: f64) -> Result<f64> {
        let e = self.eq.energy(x, v);
        self.angle_with_period(x, v, self.period(e)?)
    }

    /// [`Self::angle`] with the period `T(E(x, v))` supplied by the caller.
    pub fn angle_with_period(&self, x: f64, v: f64, t: f64) -> Result<f64> {
        let e = self.eq.energy(x, v);
        if e < 0.0 && v == 0.0 {
            return Ok(if x < self.potential().x0() { 0.0 } else { 0.5 });
        }
        if e < 0.0 {
            let (xl, xr) = turning_points_raw(self.potential(), self.e_min, e)?;
            let th = (self.time_to(e, x.clamp(xl, xr))? / t).clamp(0.0, 0.5);
            Ok(if v >= 0.0 { th } else { (1.0 - th) % 1.0 })
        } else {
            let xm = x.rem_euclid(1.0);
            Ok((self.time_to(e, xm)? / t).clamp(0.0, 1.0) % 1.0)
        }
    }

    /// Energies sampled for the period table: log-clustered at `E_min` and at `0` from
    /// both sides, geometric towards `E_max`.
    pub fn table_energies(&self, n: usize) -> Vec<f64> {
        let em = self.e_min.abs();
        let closest = self.settings.closest_offset * em;
        let logspace = |a: f64, b: f64, k: usize| -> Vec<f64> {
            (0..k).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (k - 1).max(1) as f64).exp()).collect()
        };
        let mut out = Vec::with_capacity(3 * n);
        out.extend(logspace(closest, em - 0.5 * self.estar.abs(), n).into_iter().map(|r| self.e_min + r));
        let half = n / 2;
        out.extend(logspace(closest, self.estar.abs(), half).into_iter().rev().map(|r| -r));
        out.extend(logspace(closest, self.estar.abs(), n - half));
        out.extend(logspace(0.5 * self.estar.abs(), self.e_max(), n));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn build_table(&self) -> Result<Vec<TableRow>> {
        self.table_energies(self.settings.table_points)
            .into_iter()
            .map(|e| {
                let [t, t1, t2] = self.period_all(e)?;
                let (xm, xp) = self.orbit_interval(e)?;
                Ok(TableRow {
                    energy: e,
                    period: t,
                    period_deriv: t1,
                    period_deriv2: t2,
                    x_minus: xm,
                    x_plus: xp,
                    elliptic: self.in_elliptic(e),
                    hyperbolic: self.in_hyperbolic(e),
                    exterior: self.in_exterior(e),
                })
            })
            .collect()
    }

    /// Smallest trapped period `2 pi / sqrt(-phi''(x0))`.
    pub fn period_min(&self) -> f64 {
        2.0 * std::f64::consts::PI / (-self.potential().d2phi(self.potential().x0())).sqrt()
    }

    /// Coefficient `c` with `T(E) ~ c |log|E||` as `E -> 0-`.
    pub fn separatrix_log_coefficient(&self) -> f64 {
        let p = self.potential();
        1.0 / p.d2phi(0.0).sqrt() + 1.0 / p.d2phi(1.0).sqrt()
    }
}

fn raw_g1(pot: &PotentialProfile, y: f64) -> f64 {
    let d1 = pot.dphi(y);
    let n = d1 * d1 + 2.0 * pot.d2phi(y) * pot.depth(y);
    n / (d1 * d1 * d1)
}

fn raw_g1_prime(pot: &PotentialProfile, y: f64) -> f64 {
    let d1 = pot.dphi(y);
    let d2 = pot.d2phi(y);
    let d3 = pot.d3phi(y);
    let dep = pot.depth(y);
    (-6.0 * dep * d2 * d2 + 2.0 * d3 * dep * d1 - 3.0 * d1 * d1 * d2) / (d1 * d1 * d1 * d1)
}
