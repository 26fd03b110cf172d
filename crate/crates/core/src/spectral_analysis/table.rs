use super::grid::orbit_kernel;
use crate::action_angle::ActionAngleChart;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Resolution of a [`KernelTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableSettings {
    /// Spatial modes `1 <= k <= spatial_modes`.
    pub spatial_modes: usize,
    /// Angle modes `|l| <= modes`.
    pub modes: usize,
    /// Cells in `r = sqrt((E - E_min)/|E_min|)` between `E_min` and `E*`.
    pub root_cells: usize,
    /// Cells per unit of `log|E|` near the separatrix and above it.
    pub log_cells_per_unit: f64,
    /// Smallest `|E|` covered on either side of the separatrix.
    pub e_tiny: f64,
    /// Largest untrapped energy covered, in units of `|E_min|`.
    pub e_big_factor: f64,
    /// Minimum angle samples per orbit.
    pub angle_samples: usize,
}

impl Default for TableSettings {
    fn default() -> Self {
        Self {
            spatial_modes: 8,
            modes: 64,
            root_cells: 192,
            log_cells_per_unit: 12.0,
            e_tiny: 1e-13,
            e_big_factor: 400.0,
            angle_samples: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variable {
    /// `s = sqrt((E - E_min)/|E_min|)`.
    Root,
    /// `s = ln(-E)`.
    LogNeg,
    /// `s = ln(E)`.
    LogPos,
}

#[derive(Debug, Clone)]
struct Segment {
    var: Variable,
    s0: f64,
    h: f64,
    cells: usize,
    /// Per node: `V` and `dV/ds` for all `(k, l)`.
    v: Vec<Complex64>,
    dv: Vec<Complex64>,
    /// Per node: `T` and its first two derivatives in `E` (root segment) or in `s` (log segments).
    t: Vec<[f64; 3]>,
}

/// Orbit kernel `V_k(l, E)` and its energy derivative, with `T, T', T''`, tabulated on the
/// whole energy range and interpolated by cubic Hermite in `r` near the center and in
/// `log|E|` near and above the separatrix.
#[derive(Debug, Clone)]
pub struct KernelTable {
    settings: TableSettings,
    e_min: f64,
    estar: f64,
    e_big: f64,
    segments: [Segment; 3],
}

/// Location of one energy inside a [`KernelTable`], ready for per-mode evaluation.
#[derive(Debug, Clone, Copy)]
pub struct TableSample<'a> {
    table: &'a KernelTable,
    seg: usize,
    node: usize,
    /// Hermite weights for the value and for `d/ds`.
    w: [f64; 4],
    wd: [f64; 4],
    dsde: f64,
    /// Quintic Hermite position and cell width for the period.
    tq: f64,
    hq: f64,
    pub energy: f64,
}

impl KernelTable {
    pub fn new(chart: &ActionAngleChart, settings: TableSettings) -> Result<Self> {
        if settings.spatial_modes == 0 || settings.modes == 0 {
            return Err(Error::InvalidParameter("kernel table needs at least one spatial and one angle mode".into()));
        }
        if settings.root_cells < 2 || !(settings.log_cells_per_unit > 0.0) {
            return Err(Error::InvalidParameter("kernel table resolution too small".into()));
        }
        if !(settings.e_tiny > 0.0 && settings.e_tiny < 1e-3) {
            return Err(Error::InvalidParameter("e_tiny must lie in (0, 1e-3)".into()));
        }
        let e_min = chart.e_min();
        let estar = chart.estar();
        let e_big = settings.e_big_factor * e_min.abs();
        if !(e_big > estar.abs()) {
            return Err(Error::InvalidParameter("e_big_factor too small".into()));
        }
        let mut planner = FftPlanner::new();
        let r_end = ((estar - e_min) / e_min.abs()).sqrt();
        let root = build_segment(chart, &settings, Variable::Root, 0.0, r_end, settings.root_cells, &mut planner)?;
        let z_lo = settings.e_tiny.ln();
        let cells = |a: f64, b: f64| ((b - a) * settings.log_cells_per_unit).ceil().max(2.0) as usize;
        let neg_hi = estar.abs().ln();
        let neg = build_segment(chart, &settings, Variable::LogNeg, z_lo, neg_hi, cells(z_lo, neg_hi), &mut planner)?;
        let pos_hi = e_big.ln();
        let pos = build_segment(chart, &settings, Variable::LogPos, z_lo, pos_hi, cells(z_lo, pos_hi), &mut planner)?;
        Ok(Self { settings, e_min, estar, e_big, segments: [root, neg, pos] })
    }

    pub fn settings(&self) -> TableSettings {
        self.settings
    }

    pub fn spatial_modes(&self) -> usize {
        self.settings.spatial_modes
    }

    pub fn modes(&self) -> usize {
        self.settings.modes
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Energy range `[E_min, -e_tiny] U [e_tiny, e_big]` covered by the table.
    pub fn range(&self) -> (f64, f64, f64, f64) {
        (self.e_min, -self.settings.e_tiny, self.settings.e_tiny, self.e_big)
    }

    pub fn contains(&self, e: f64) -> bool {
        (e >= self.e_min && e <= -self.settings.e_tiny) || (e >= self.settings.e_tiny && e <= self.e_big)
    }

    /// Interpolation weights at energy `e`.
    pub fn sample(&self, e: f64) -> Result<TableSample<'_>> {
        if !self.contains(e) {
            return Err(Error::EnergyOutOfRange { energy: e, reason: "outside the kernel table".into() });
        }
        let (seg, s, dsde) = if e <= self.estar {
            let r = ((e - self.e_min) / self.e_min.abs()).max(0.0).sqrt();
            let d = if r > 0.0 { 1.0 / (2.0 * self.e_min.abs() * r) } else { f64::INFINITY };
            (0, r, d)
        } else if e < 0.0 {
            (1, (-e).ln(), 1.0 / e)
        } else {
            (2, e.ln(), 1.0 / e)
        };
        let sg = &self.segments[seg];
        let x = ((s - sg.s0) / sg.h).clamp(0.0, sg.cells as f64);
        let node = (x.floor() as usize).min(sg.cells - 1);
        let t = x - node as f64;
        let h = sg.h;
        let (t2, t3) = (t * t, t * t * t);
        let w = [2.0 * t3 - 3.0 * t2 + 1.0, h * (t3 - 2.0 * t2 + t), -2.0 * t3 + 3.0 * t2, h * (t3 - t2)];
        let wd = [(6.0 * t2 - 6.0 * t) / h, 3.0 * t2 - 4.0 * t + 1.0, (6.0 * t - 6.0 * t2) / h, 3.0 * t2 - 2.0 * t];
        let (tq, hq) = if seg == 0 {
            let a = self.e_min.abs();
            let ea = self.e_min + a * (sg.s0 + h * node as f64).powi(2);
            let eb = self.e_min + a * (sg.s0 + h * (node + 1) as f64).powi(2);
            (((e - ea) / (eb - ea)).clamp(0.0, 1.0), eb - ea)
        } else {
            (t, h)
        };
        Ok(TableSample { table: self, seg, node, w, wd, dsde, tq, hq, energy: e })
    }

    /// `V_k(l, E)` and `dV_k(l, E)/dE` for `k != 0`, `|k| <= K`, `|l| <= L`.
    pub fn kernel(&self, e: f64, k: i32, l: i32) -> Result<(Complex64, Complex64)> {
        Ok(self.sample(e)?.kernel(k, l))
    }

    /// `(T, T', T'')` at `e`.
    pub fn period(&self, e: f64) -> Result<[f64; 3]> {
        Ok(self.sample(e)?.period())
    }
}

impl TableSample<'_> {
    fn index(&self, k: usize, l: i32) -> usize {
        let lm = self.table.settings.modes as i32;
        (k - 1) * (2 * lm as usize + 1) + (l + lm) as usize
    }

    fn stride(&self) -> usize {
        self.table.settings.spatial_modes * (2 * self.table.settings.modes + 1)
    }

    fn raw(&self, k: usize, l: i32) -> (Complex64, Complex64) {
        let sg = &self.table.segments[self.seg];
        let st = self.stride();
        let i = self.index(k, l);
        let (a, b) = (self.node * st + i, (self.node + 1) * st + i);
        let v = sg.v[a] * self.w[0] + sg.dv[a] * self.w[1] + sg.v[b] * self.w[2] + sg.dv[b] * self.w[3];
        let ds = sg.v[a] * self.wd[0] + sg.dv[a] * self.wd[1] + sg.v[b] * self.wd[2] + sg.dv[b] * self.wd[3];
        (v, ds * self.dsde)
    }

    /// `V_k(l, E)` and its energy derivative; `V_{-k}(l) = conj V_k(-l)`.
    pub fn kernel(&self, k: i32, l: i32) -> (Complex64, Complex64) {
        debug_assert!(k != 0 && k.unsigned_abs() as usize <= self.table.settings.spatial_modes);
        debug_assert!(l.unsigned_abs() as usize <= self.table.settings.modes);
        if k > 0 {
            self.raw(k as usize, l)
        } else {
            let (v, d) = self.raw((-k) as usize, -l);
            (v.conj(), d.conj())
        }
    }

    /// `(T, T', T'')`.
    pub fn period(&self) -> [f64; 3] {
        let sg = &self.table.segments[self.seg];
        let (a, b) = (sg.t[self.node], sg.t[self.node + 1]);
        let [f, fy, fyy] = quintic_hermite(a, b, self.tq, self.hq);
        match sg.var {
            Variable::Root => [f, fy, fyy],
            _ => {
                let e = self.energy;
                [f, fy / e, (fyy - fy) / (e * e)]
            }
        }
    }
}

/// Value and first two derivatives of the quintic Hermite interpolant on a cell of width
/// `h` with end data `(f, f', f'')`, at relative position `t`.
fn quintic_hermite(a: [f64; 3], b: [f64; 3], t: f64, h: f64) -> [f64; 3] {
    let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
    let basis = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * (t3 - 2.0 * t4 + t5),
    ];
    let d1 = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
    ];
    let d2 = [
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
        0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
        60.0 * t - 180.0 * t2 + 120.0 * t3,
        -24.0 * t + 84.0 * t2 - 60.0 * t3,
        0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
    ];
    let data = [a[0], h * a[1], h * h * a[2], b[0], h * b[1], h * h * b[2]];
    let dot = |w: &[f64; 6]| w.iter().zip(&data).map(|(x, y)| x * y).sum::<f64>();
    [dot(&basis), dot(&d1) / h, dot(&d2) / (h * h)]
}

fn build_segment(
    chart: &ActionAngleChart,
    settings: &TableSettings,
    var: Variable,
    s0: f64,
    s1: f64,
    cells: usize,
    planner: &mut FftPlanner<f64>,
) -> Result<Segment> {
    let h = (s1 - s0) / cells as f64;
    let (kk, lm) = (settings.spatial_modes, settings.modes);
    let width = 2 * lm + 1;
    let stride = kk * width;
    let e_min = chart.e_min();
    let mut v = Vec::with_capacity((cells + 1) * stride);
    let mut dv = Vec::with_capacity((cells + 1) * stride);
    let mut t = Vec::with_capacity(cells + 1);
    for i in 0..=cells {
        let s = s0 + h * i as f64;
        if var == Variable::Root && i == 0 {
            let pot = chart.potential();
            let x0 = pot.x0();
            let amp = (2.0 * e_min.abs() / pot.d2phi(x0).abs()).sqrt();
            for k in 1..=kk {
                let c = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x0);
                for l in -(lm as i32)..=(lm as i32) {
                    v.push(if l == 0 { c } else { Complex64::new(0.0, 0.0) });
                    dv.push(if l.abs() == 1 { Complex64::new(0.0, -PI * k as f64 * amp) * c } else { Complex64::new(0.0, 0.0) });
                }
            }
            let e = e_min + 1e-12 * e_min.abs();
            t.push([chart.period_min(), chart.period_deriv(e)?, chart.period_deriv2(e)?]);
            continue;
        }
        let (e, dede) = match var {
            Variable::Root => (e_min + e_min.abs() * s * s, 2.0 * e_min.abs() * s),
            Variable::LogNeg => (-s.exp(), -s.exp()),
            Variable::LogPos => (s.exp(), s.exp()),
        };
        let (kv, kd) = orbit_kernel(chart, e, lm, kk, settings.angle_samples, true, planner)?;
        let kd = kd.ok_or_else(|| Error::Numerical("missing orbit derivative".into()))?;
        v.extend_from_slice(&kv);
        dv.extend(kd.iter().map(|d| d * dede));
        let [p, p1, p2] = chart.period_all(e)?;
        t.push(match var {
            Variable::Root => [p, p1, p2],
            _ => [p, p1 * e, p2 * e * e + p1 * e],
        });
    }
    Ok(Segment { var, s0, h, cells, v, dv, t })
}
