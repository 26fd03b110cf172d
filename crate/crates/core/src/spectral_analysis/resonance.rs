use crate::action_angle::ActionAngleChart;
use crate::error::{Error, Result};
use crate::roots;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Energies closer than this to the separatrix are not resolved.
pub const SEPARATRIX_CUTOFF: f64 = 1e-13;

/// Location of the window `[E_l^1, E_l^{1,delta}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowRegion {
    /// Inside `(E_min, E*/2)`.
    Elliptic,
    /// Inside `(E*, 0)`.
    Hyperbolic,
    /// In neither region.
    Straddling,
    /// Beyond the separatrix cutoff.
    Unresolved,
}

impl WindowRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowRegion::Elliptic => "elliptic",
            WindowRegion::Hyperbolic => "hyperbolic",
            WindowRegion::Straddling => "straddling",
            WindowRegion::Unresolved => "unresolved",
        }
    }
}

/// Resonant energies of one angle mode `l >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceLevel {
    pub ell: usize,
    /// Trapped energy with `T = l q` (or `E_min` when `l q <= T_min`).
    pub e1: Option<f64>,
    /// Trapped energy with `T = (1 - delta) l q`.
    pub e1_minus: Option<f64>,
    /// Trapped energy with `T = (1 + delta) l q`.
    pub e1_plus: Option<f64>,
    /// Untrapped energy with `T = l q`.
    pub e2: Option<f64>,
    /// Untrapped energy with `T = (1 + delta) l q`.
    pub e2_delta: Option<f64>,
    pub region: WindowRegion,
}

/// Frequency splitting at `q = 2 pi / |lambda|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceMap {
    pub q: f64,
    pub delta: f64,
    /// Upper bound on admissible `delta`.
    pub delta_bound: f64,
    pub e_min: f64,
    pub estar: f64,
    pub period_min: f64,
    /// `floor(T(E*)/q) + 1`.
    pub ell_star: usize,
    /// `floor(T(|E*|)/q) + 1`.
    pub big_l_star: usize,
    pub levels: Vec<ResonanceLevel>,
}

/// `min{1, (T(E*/2) - T(E*))/T(E*/2), (T(|E*|/2) - T(|E*|))/T(|E*|)}`.
pub fn admissible_delta_bound(chart: &ActionAngleChart) -> Result<f64> {
    let es = chart.estar();
    let a = chart.period(0.5 * es)?;
    let b = chart.period(es)?;
    let c = chart.period(0.5 * es.abs())?;
    let d = chart.period(es.abs())?;
    Ok(1f64.min((a - b) / a).min((c - d) / d))
}

fn trapped_root(chart: &ActionAngleChart, target: f64) -> Result<Option<f64>> {
    let e_min = chart.e_min();
    if target <= chart.period_min() {
        return Ok(Some(e_min));
    }
    let lo = e_min + 1e-12 * e_min.abs();
    let hi = -SEPARATRIX_CUTOFF;
    if chart.period(hi)? <= target {
        return Ok(None);
    }
    if chart.period(lo)? >= target {
        return Ok(Some(lo));
    }
    let mut err = None;
    let e = roots::bisect(
        |e| match chart.period(e) {
            Ok(t) => t - target,
            Err(x) => {
                err.get_or_insert(x);
                0.0
            }
        },
        lo,
        hi,
        1e-16,
        0.0,
    )?;
    match err {
        Some(x) => Err(x),
        None => Ok(Some(e)),
    }
}

fn exterior_root(chart: &ActionAngleChart, target: f64) -> Result<Option<f64>> {
    let lo = SEPARATRIX_CUTOFF;
    if chart.period(lo)? <= target {
        return Ok(None);
    }
    let mut hi = chart.e_min().abs().max(1.0);
    while chart.period(hi)? >= target {
        hi *= 2.0;
        if hi > 1e30 {
            return Err(Error::Numerical(format!("no untrapped energy with period {target:e}")));
        }
    }
    let mut err = None;
    let e = roots::bisect(
        |e| match chart.period(e) {
            Ok(t) => t - target,
            Err(x) => {
                err.get_or_insert(x);
                0.0
            }
        },
        lo,
        hi,
        1e-16,
        0.0,
    )?;
    match err {
        Some(x) => Err(x),
        None => Ok(Some(e)),
    }
}

/// Largest `l` whose trapped resonance lies above the separatrix cutoff, plus one.
pub fn trapped_level_count(chart: &ActionAngleChart, q: f64) -> Result<usize> {
    Ok((chart.period(-SEPARATRIX_CUTOFF)? / q).floor() as usize + 1)
}

/// Resonance map for `l = 1..=max_ell` (default: every trapped level above the separatrix
/// cutoff and one beyond). `delta = None` takes half the admissible bound.
pub fn resonance_map(chart: &ActionAngleChart, q: f64, delta: Option<f64>, max_ell: Option<usize>) -> Result<ResonanceMap> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    let bound = admissible_delta_bound(chart)?;
    let delta = match delta {
        None => 0.5 * bound,
        Some(d) if d > 0.0 && d < bound => d,
        Some(d) => {
            return Err(Error::InvalidParameter(format!("delta = {d} is not admissible (bound {bound:e})")));
        }
    };
    let es = chart.estar();
    let ell_star = (chart.period(es)? / q).floor() as usize + 1;
    let big_l_star = (chart.period(es.abs())? / q).floor() as usize + 1;
    let n = match max_ell {
        Some(n) => n,
        None => trapped_level_count(chart, q)?,
    };
    let mut levels = Vec::with_capacity(n);
    for ell in 1..=n {
        let lq = ell as f64 * q;
        let e1 = trapped_root(chart, lq)?;
        let e1_minus = trapped_root(chart, (1.0 - delta) * lq)?;
        let e1_plus = trapped_root(chart, (1.0 + delta) * lq)?;
        let e2 = exterior_root(chart, lq)?;
        let e2_delta = exterior_root(chart, (1.0 + delta) * lq)?;
        let region = match (e1, e1_plus) {
            (Some(_), Some(b)) if b < 0.5 * es => WindowRegion::Elliptic,
            (Some(a), Some(_)) if a > es => WindowRegion::Hyperbolic,
            (Some(_), Some(_)) => WindowRegion::Straddling,
            _ => WindowRegion::Unresolved,
        };
        levels.push(ResonanceLevel { ell, e1, e1_minus, e1_plus, e2, e2_delta, region });
    }
    Ok(ResonanceMap { q, delta, delta_bound: bound, e_min: chart.e_min(), estar: es, period_min: chart.period_min(), ell_star, big_l_star, levels })
}

impl ResonanceMap {
    /// Largest `|T(E)/target - 1|` over all interior resonant energies.
    pub fn max_period_defect(&self, chart: &ActionAngleChart) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for lv in &self.levels {
            let lq = lv.ell as f64 * self.q;
            let pairs = [
                (lv.e1, lq),
                (lv.e1_minus, (1.0 - self.delta) * lq),
                (lv.e1_plus, (1.0 + self.delta) * lq),
                (lv.e2, lq),
                (lv.e2_delta, (1.0 + self.delta) * lq),
            ];
            for (e, target) in pairs {
                if let Some(e) = e {
                    if e > self.e_min && target > self.period_min {
                        worst = worst.max((chart.period(e)? / target - 1.0).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Levels whose trapped window is neither elliptic nor hyperbolic, or whose window
    /// region contradicts the thresholds `l*` and `L*`.
    pub fn containment_failures(&self) -> Vec<usize> {
        let es = self.estar;
        self.levels
            .iter()
            .filter(|lv| {
                let (Some(e1), Some(e1p)) = (lv.e1, lv.e1_plus) else {
                    return false;
                };
                let ordered = lv.e1_minus.is_none_or(|m| m <= e1) && e1 <= e1p;
                let window = if lv.ell < self.ell_star { e1p < 0.5 * es } else { e1 > es };
                let ext = match (lv.e2, lv.e2_delta) {
                    (Some(e2), Some(e2d)) => {
                        e2d < e2 && if lv.ell < self.big_l_star { e2d > 0.5 * es.abs() } else { e2 < es.abs() }
                    }
                    _ => true,
                };
                !(ordered && window && ext && lv.region != WindowRegion::Straddling)
            })
            .map(|lv| lv.ell)
            .collect()
    }

    /// CSV with columns `ell, E1, E1_minus_delta, E1_plus_delta, E2, E2_delta, region`;
    /// unresolved energies are written as `nan`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wr.write_record(["ell", "E1", "E1_minus_delta", "E1_plus_delta", "E2", "E2_delta", "region"]).map_err(io)?;
        let f = |e: Option<f64>| e.map_or_else(|| "nan".to_string(), |v| format!("{v:.17e}"));
        for lv in &self.levels {
            wr.write_record([
                lv.ell.to_string(),
                f(lv.e1),
                f(lv.e1_minus),
                f(lv.e1_plus),
                f(lv.e2),
                f(lv.e2_delta),
                lv.region.as_str().to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }
}
