//! Region-wise two-sided bounds for the period function and its derivatives, and the
//! turning-point asymptotics at the separatrix.

use crate::action_angle::{chart_energy_derivative, ActionAngleChart, ChartSettings};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Sampling of the ratio scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsymptoticsSettings {
    /// Log-spaced samples per region.
    pub samples: usize,
    /// Closest distance to `E_min`, `0` and `E_max` in units of `|E_min|`.
    pub offset: f64,
    /// Passing threshold for `max / min` of each ratio.
    pub max_spread: f64,
    /// Samples per region for the chart derivative envelope (0 skips it).
    pub derivative_samples: usize,
}

impl Default for AsymptoticsSettings {
    fn default() -> Self {
        Self { samples: 200, offset: 1e-8, max_spread: 100.0, derivative_samples: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Elliptic,
    Hyperbolic,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    T,
    #[serde(rename = "T'")]
    T1,
    #[serde(rename = "T''")]
    T2,
    #[serde(rename = "dx/dE")]
    DxDe,
}

/// Samples of one normalized ratio on one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub region: Region,
    pub quantity: Quantity,
    pub energies: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Fitted lower constant `min ratio`.
    pub lower: f64,
    /// Fitted upper constant `max ratio`.
    pub upper: f64,
    pub passed: bool,
}

impl RatioSeries {
    fn new(region: Region, quantity: Quantity, energies: Vec<f64>, ratios: Vec<f64>, spread: f64) -> Self {
        let lower = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = ratios.iter().copied().fold(0.0, f64::max);
        let valid = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
        let passed = valid && upper / lower < spread;
        Self { region, quantity, energies, ratios, lower, upper, passed }
    }

    pub fn spread(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Sign and cross-check diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityChecks {
    /// `T' > 0` at every trapped sample.
    pub increasing_trapped: bool,
    /// `T' < 0` at every untrapped sample.
    pub decreasing_untrapped: bool,
    /// `T'' > 0` on `(0, |E*|)`.
    pub convex_near_separatrix: bool,
    /// Largest relative gap between the closed-form `T'` and central differences of `T`
    /// on the elliptic region and the middle of the hyperbolic region.
    pub derivative_cross_check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub e_min: f64,
    pub estar: f64,
    pub series: Vec<RatioSeries>,
    pub monotonicity: MonotonicityChecks,
    pub passed: bool,
}

impl AsymptoticsReport {
    pub fn get(&self, region: Region, quantity: Quantity) -> Option<&RatioSeries> {
        self.series.iter().find(|s| s.region == region && s.quantity == quantity)
    }

    /// Largest relative change of any fitted constant against `other`.
    pub fn max_relative_change(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.series {
            if let Some(o) = other.get(s.region, s.quantity) {
                worst = worst.max(((s.lower - o.lower) / o.lower).abs());
                worst = worst.max(((s.upper - o.upper) / o.upper).abs());
            }
        }
        worst
    }

    /// Writes `E, region, quantity, normalized_ratio` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["E", "region", "quantity", "normalized_ratio"]).map_err(csv_err)?;
        for s in &self.series {
            let region = serde_json::to_value(s.region).map_err(|e| Error::Numerical(e.to_string()))?;
            let quantity = serde_json::to_value(s.quantity).map_err(|e| Error::Numerical(e.to_string()))?;
            for (e, r) in s.energies.iter().zip(&s.ratios) {
                out.write_record([
                    format!("{e:.17e}"),
                    region.as_str().unwrap_or_default().to_string(),
                    quantity.as_str().unwrap_or_default().to_string(),
                    format!("{r:.17e}"),
                ])
                .map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numerical(format!("csv: {e}"))
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Sample energies per region, kept `offset |E_min|` away from the singular energies.
pub fn region_samples(chart: &ActionAngleChart, region: Region, n: usize, offset: f64) -> Vec<f64> {
    let em = chart.e_min().abs();
    let d = offset * em;
    let es = chart.estar().abs();
    match region {
        Region::Elliptic => logspace(d, em - 0.5 * es, n).into_iter().map(|r| chart.e_min() + r).collect(),
        Region::Hyperbolic => {
            let half = n / 2;
            let mut v: Vec<f64> = logspace(d, es * (1.0 - 1e-9), half).into_iter().map(|r| -r).collect();
            v.extend(logspace(d, es * (1.0 - 1e-9), n - half));
            v
        }
        Region::Exterior => logspace(0.5 * es * (1.0 + 1e-9), chart.e_max(), n),
    }
}

/// Weight in the denominator of each normalized ratio.
fn envelope(region: Region, q: Quantity, e: f64) -> f64 {
    let a = e.abs();
    match (region, q) {
        (Region::Elliptic, _) => 1.0,
        (Region::Hyperbolic, Quantity::T) => a.ln().abs(),
        (Region::Hyperbolic, Quantity::T1) => 1.0 / a,
        (Region::Hyperbolic, Quantity::T2) => 1.0 / (a * a),
        (Region::Exterior, Quantity::T) => a.powf(-0.5),
        (Region::Exterior, Quantity::T1) => a.powf(-1.5),
        (Region::Exterior, Quantity::T2) => a.powf(-2.5),
        (Region::Hyperbolic | Region::Exterior, Quantity::DxDe) => 1.0 / a,
    }
}

/// Samples the nine normalized ratios `|T^(k)(E)| / envelope` and the sign structure.
pub fn verify_period_bounds(chart: &ActionAngleChart, settings: AsymptoticsSettings) -> Result<AsymptoticsReport> {
    if settings.samples < 16 {
        return Err(Error::InvalidParameter("ratio scan needs at least 16 samples per region".into()));
    }
    let mut series = Vec::new();
    let mut inc = true;
    let mut dec = true;
    let mut convex = true;
    for region in [Region::Elliptic, Region::Hyperbolic, Region::Exterior] {
        let es = region_samples(chart, region, settings.samples, settings.offset);
        let vals = es.iter().map(|&e| chart.period_all(e)).collect::<Result<Vec<_>>>()?;
        for (&e, v) in es.iter().zip(&vals) {
            if e < 0.0 {
                inc &= v[1] > 0.0;
            } else {
                dec &= v[1] < 0.0;
                if e < chart.estar().abs() {
                    convex &= v[2] > 0.0;
                }
            }
        }
        for (k, q) in [Quantity::T, Quantity::T1, Quantity::T2].into_iter().enumerate() {
            let ratios = es.iter().zip(&vals).map(|(&e, v)| v[k].abs() / envelope(region, q, e)).collect();
            series.push(RatioSeries::new(region, q, es.clone(), ratios, settings.max_spread));
        }
        if settings.derivative_samples > 0 {
            series.push(derivative_series(chart, region, settings)?);
        }
    }
    let cross = derivative_cross_check(chart)?;
    let monotonicity = MonotonicityChecks {
        increasing_trapped: inc,
        decreasing_untrapped: dec,
        convex_near_separatrix: convex,
        derivative_cross_check: cross,
    };
    let passed = series.iter().all(|s| s.passed) && inc && dec && convex;
    Ok(AsymptoticsReport { e_min: chart.e_min(), estar: chart.estar(), series, monotonicity, passed })
}

/// `sup_theta |d x / dE|` against its region envelope (upper bound only, so the test is
/// that the ratio stays below `max_spread` times its median).
fn derivative_series(chart: &ActionAngleChart, region: Region, settings: AsymptoticsSettings) -> Result<RatioSeries> {
    let offset = settings.offset.max(1e-6);
    let es = region_samples(chart, region, settings.derivative_samples, offset);
    let mut ratios = Vec::with_capacity(es.len());
    for &e in &es {
        let mut sup = 0.0f64;
        for j in 0..8 {
            let th = (j as f64 + 0.5) / 8.0;
            let (_, _, d) = chart.chart_point(th, e, true)?;
            sup = sup.max(d.abs());
        }
        let env = match region {
            Region::Elliptic => (e - chart.e_min()).powf(-0.5),
            _ => envelope(region, Quantity::DxDe, e),
        };
        ratios.push(sup / env);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut s = RatioSeries::new(region, Quantity::DxDe, es, ratios, f64::INFINITY);
    s.passed = s.ratios.iter().all(|r| r.is_finite()) && s.upper < settings.max_spread * median;
    Ok(s)
}

/// Relative gap between [`ActionAngleChart::period_deriv`] and central differences of `T`.
pub fn derivative_cross_check(chart: &ActionAngleChart) -> Result<f64> {
    let em = chart.e_min();
    let es = chart.estar();
    let mut energies: Vec<f64> = (1..=8).map(|k| em + (0.5 * es - em) * k as f64 / 9.0).collect();
    energies.extend((1..=4).map(|k| es * (0.2 + 0.15 * k as f64)));
    let mut worst = 0.0f64;
    for e in energies {
        let h = 1e-4 * (e - em).min(e.abs());
        let fd = (chart.period(e + h)? - chart.period(e - h)?) / (2.0 * h);
        let d = chart.period_deriv(e)?;
        worst = worst.max(((d - fd) / fd).abs());
    }
    Ok(worst)
}

/// Two reports at `nodes_per_panel` and twice that, with the largest change of any constant.
pub fn refinement_stability(
    chart: &ActionAngleChart,
    settings: AsymptoticsSettings,
) -> Result<(AsymptoticsReport, AsymptoticsReport, f64)> {
    let coarse = verify_period_bounds(chart, settings)?;
    let mut cs = chart.settings();
    cs.nodes_per_panel *= 2;
    cs.table_points = 0;
    let fine_chart = ActionAngleChart::with_settings(chart.equilibrium(), cs)?;
    let fine = verify_period_bounds(&fine_chart, settings)?;
    let change = coarse.max_relative_change(&fine);
    Ok((coarse, fine, change))
}

/// Turning-point samples at `E = -10^-k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningSample {
    pub energy: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    /// `x_-(E) / (sqrt(2 / phi''(0)) |E|^(1/2))`.
    pub left_ratio: f64,
    /// `(1 - x_+(E)) / (sqrt(2 / phi''(1)) |E|^(1/2))`.
    pub right_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningReport {
    pub left_coefficient: f64,
    pub right_coefficient: f64,
    pub samples: Vec<TurningSample>,
    /// Ratios extrapolated to `E = 0` from the two closest samples.
    pub left_limit: f64,
    pub right_limit: f64,
    /// `|x_+ - x_-|` at `E_min + offset |E_min|`.
    pub elliptic_gap: f64,
    pub elliptic_offset: f64,
    pub passed: bool,
}

/// Checks `x_-(E) ~ sqrt(2/phi''(0)) |E|^(1/2)`, `1 - x_+(E) ~ sqrt(2/phi''(1)) |E|^(1/2)`
/// as `E -> 0-` and `x_+- -> x0` as `E -> E_min`.
pub fn verify_turning_asymptotics(chart: &ActionAngleChart) -> Result<TurningReport> {
    let pot = chart.potential();
    let cl = (2.0 / pot.d2phi(0.0)).sqrt();
    let cr = (2.0 / pot.d2phi(1.0)).sqrt();
    let mut samples = Vec::new();
    for k in 2..=8 {
        let e = -(10f64).powi(-k);
        if e <= chart.e_min() {
            continue;
        }
        let (xm, xp) = chart.turning_points(e)?;
        let s = e.abs().sqrt();
        samples.push(TurningSample {
            energy: e,
            x_minus: xm,
            x_plus: xp,
            left_ratio: xm / (cl * s),
            right_ratio: (1.0 - xp) / (cr * s),
        });
    }
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("potential too shallow for the turning-point scan".into()));
    }
    let n = samples.len();
    let (a, b) = (&samples[n - 2], &samples[n - 1]);
    // leading correction is at most O(|E|^(1/2))
    let w = b.energy.abs().sqrt() / (a.energy.abs().sqrt() - b.energy.abs().sqrt());
    let left_limit = b.left_ratio + (b.left_ratio - a.left_ratio) * w;
    let right_limit = b.right_ratio + (b.right_ratio - a.right_ratio) * w;
    let off = 1e-8;
    let (xm, xp) = chart.turning_points(chart.e_min() * (1.0 - off))?;
    let gap = xp - xm;
    // near the maximum the orbit width scales like (E - E_min)^(1/2)
    let expected = 2.0 * (2.0 * off * chart.e_min().abs() / -pot.d2phi(pot.x0())).sqrt();
    let passed = (left_limit - 1.0).abs() < 0.01
        && (right_limit - 1.0).abs() < 0.01
        && gap < 2.0 * expected
        && xm < pot.x0()
        && xp > pot.x0();
    Ok(TurningReport {
        left_coefficient: cl,
        right_coefficient: cr,
        samples,
        left_limit,
        right_limit,
        elliptic_gap: gap,
        elliptic_offset: off,
        passed,
    })
}

/// Minimal-resolution chart settings for the scans.
pub fn scan_chart_settings() -> ChartSettings {
    ChartSettings { table_points: 0, ..Default::default() }
}

/// Fitted constants of `exp(T(E) / c)` against `|T'(E)|` on the trapped hyperbolic region,
/// with `c` the separatrix log coefficient.
pub fn hyperbolic_exponential_relation(chart: &ActionAngleChart, samples: usize, offset: f64) -> Result<(f64, f64)> {
    let c = chart.separatrix_log_coefficient();
    let d = offset * chart.e_min().abs();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for r in logspace(d, chart.estar().abs() * (1.0 - 1e-9), samples) {
        let e = -r;
        let t = chart.period(e)?;
        let t1 = chart.period_deriv(e)?;
        let q = t1.abs() * (-t / c).exp();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok((lo, hi))
}

/// `sup |d x / dE|` over a few angles at `E`, with the region envelope.
pub fn derivative_envelope_ratio(chart: &ActionAngleChart, e: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    for j in 0..8 {
        let d = chart_energy_derivative(chart, (j as f64 + 0.5) / 8.0, e)?;
        sup = sup.max(d.value.abs() / d.envelope);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};

    fn chart(shape: PotentialShape, a: f64) -> ActionAngleChart {
        let eq = Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), make_potential_family(shape, a).unwrap(), 0.05, 16)
            .unwrap();
        ActionAngleChart::with_settings(&eq, scan_chart_settings()).unwrap()
    }

    #[test]
    fn sin2_ratios_are_bounded() {
        let c = chart(PotentialShape::Sin2, 0.1);
        let r = verify_period_bounds(&c, AsymptoticsSettings { samples: 40, ..Default::default() }).unwrap();
        for s in &r.series {
            assert!(s.passed, "{:?} {:?}: {} .. {}", s.region, s.quantity, s.lower, s.upper);
        }
        assert!(r.monotonicity.increasing_trapped && r.monotonicity.decreasing_untrapped);
        assert!(r.monotonicity.convex_near_separatrix);
        assert!(r.monotonicity.derivative_cross_check < 1e-6);
    }

    #[test]
    fn sin2_turning_limits() {
        let r = verify_turning_asymptotics(&chart(PotentialShape::Sin2, 1.0)).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.samples.last().unwrap().left_ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn warped_turning_coefficients_and_limits() {
        let c = chart(PotentialShape::WarpedSin2 { c: 0.2 }, 0.1);
        let r = verify_turning_asymptotics(&c).unwrap();
        assert!(r.passed, "{r:?}");
        let p = c.potential();
        assert!(((2.0 / p.d2phi(0.0)).sqrt() - r.left_coefficient).abs() < 1e-15);
    }

    #[test]
    fn exponential_relation_spread() {
        let c = chart(PotentialShape::Sin2, 0.1);
        let (lo, hi) = hyperbolic_exponential_relation(&c, 60, 1e-8).unwrap();
        assert!(hi / lo < 10.0, "{lo} {hi}");
        // with unit log coefficient T' and exp(T) are comparable without rescaling
        let a = 2.0 / (std::f64::consts::PI * std::f64::consts::PI);
        let c1 = chart(PotentialShape::Sin2, a);
        assert!((c1.separatrix_log_coefficient() - 1.0).abs() < 1e-12);
        let (lo, hi) = hyperbolic_exponential_relation(&c1, 60, 1e-8).unwrap();
        assert!(hi / lo < 10.0, "{lo} {hi}");
    }
}
