use crate::error::{Error, Result};
use crate::roots;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Named potential families on the unit periodic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PotentialShape {
    /// `a sin^2(pi x)`.
    Sin2,
    /// `a sin^2(pi w(x))` with `w(x) = x + c sin^2(pi x)`, asymmetric for `c != 0`.
    WarpedSin2 { c: f64 },
    /// `a sin^2(2 pi x)`: two interior maxima.
    DoubleHump,
    /// `a sin(pi x)`: concave at the endpoints.
    Sine,
}

type PotFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Named(PotentialShape),
    Custom { f: [PotFn; 3], d3: Option<PotFn> },
}

/// Steady potential on [0, 1] with its first three derivatives.
#[derive(Clone)]
pub struct PotentialProfile {
    name: String,
    amplitude: f64,
    kind: Kind,
    x0: f64,
    phi_max: f64,
}

impl fmt::Debug for PotentialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialProfile")
            .field("name", &self.name)
            .field("amplitude", &self.amplitude)
            .field("x0", &self.x0)
            .field("phi_max", &self.phi_max)
            .finish()
    }
}

/// Builds a named family and rejects it if the structural assumptions on the
/// potential (single interior maximum, monotone flanks, convex ends, concave top) fail.
pub fn make_potential_family(shape: PotentialShape, amplitude: f64) -> Result<PotentialProfile> {
    let p = PotentialProfile::new_unchecked(shape, amplitude)?;
    let failed = p.structural_failures(2048);
    if failed.is_empty() {
        Ok(p)
    } else {
        Err(Error::Assumption(failed.join("; ")))
    }
}

impl PotentialProfile {
    /// Builds a named family without structural validation.
    pub fn new_unchecked(shape: PotentialShape, amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!("amplitude must be positive, got {amplitude}")));
        }
        if let PotentialShape::WarpedSin2 { c } = shape {
            if !(c.abs() * PI < 1.0) {
                return Err(Error::InvalidParameter(format!("warp parameter must satisfy |c| pi < 1, got {c}")));
            }
        }
        let name = match shape {
            PotentialShape::Sin2 => format!("sin2(a={amplitude})"),
            PotentialShape::WarpedSin2 { c } => format!("warped_sin2(a={amplitude},c={c})"),
            PotentialShape::DoubleHump => format!("double_hump(a={amplitude})"),
            PotentialShape::Sine => format!("sine(a={amplitude})"),
        };
        let mut p = Self { name, amplitude, kind: Kind::Named(shape), x0: 0.5, phi_max: amplitude };
        p.locate_maximum()?;
        Ok(p)
    }

    /// Potential from closures for the value and first two derivatives; the third
    /// derivative falls back to finite differences unless given with [`Self::with_third`].
    pub fn custom<F0, F1, F2>(name: &str, phi: F0, dphi: F1, d2phi: F2) -> Result<Self>
    where
        F0: Fn(f64) -> f64 + Send + Sync + 'static,
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut p = Self {
            name: name.to_string(),
            amplitude: 0.0,
            kind: Kind::Custom { f: [Arc::new(phi), Arc::new(dphi), Arc::new(d2phi)], d3: None },
            x0: 0.5,
            phi_max: 0.0,
        };
        p.locate_maximum()?;
        p.amplitude = p.phi_max;
        Ok(p)
    }

    pub fn with_third<F3>(mut self, d3phi: F3) -> Self
    where
        F3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Kind::Custom { d3, .. } = &mut self.kind {
            *d3 = Some(Arc::new(d3phi));
        }
        self
    }

    fn locate_maximum(&mut self) -> Result<()> {
        let n = 4096;
        let (mut best, mut imax) = (f64::NEG_INFINITY, 0);
        for i in 1..n {
            let v = self.phi(i as f64 / n as f64);
            if v > best {
                best = v;
                imax = i;
            }
        }
        let lo = (imax as f64 - 1.0) / n as f64;
        let hi = (imax as f64 + 1.0) / n as f64;
        let x0 = if self.dphi(lo) > 0.0 && self.dphi(hi) < 0.0 {
            roots::bisect_newton(|x| self.dphi(x), |x| self.d2phi(x), lo, hi, 1e-16, 1e-16)?
        } else {
            imax as f64 / n as f64
        };
        self.x0 = x0;
        self.phi_max = self.phi(x0);
        if !(self.phi_max > 0.0) {
            return Err(Error::Assumption("potential has no positive interior maximum".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn shape(&self) -> Option<PotentialShape> {
        match &self.kind {
            Kind::Named(s) => Some(*s),
            Kind::Custom { .. } => None,
        }
    }

    /// Location of the maximum.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Maximum value `phi(x0)`.
    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn phi(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match &self.kind {
            Kind::Named(PotentialShape::Sin2) => a * (PI * x).sin().powi(2),
            Kind::Named(PotentialShape::WarpedSin2 { c }) => a * (PI * warp(x, *c)[0]).sin().powi(2),
            Kind::Named(PotentialShape::DoubleHump) => a * (2.0 * PI * x).sin().powi(2),
            Kind::Named(PotentialShape::Sine) => a * (PI * x).sin(),
            Kind::Custom { f, .. } => f[0](x),
        }
    }

    pub fn dphi(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match &self.kind {
            Kind::Named(PotentialShape::Sin2) => a * PI * (2.0 * PI * x).sin(),
            Kind::Named(PotentialShape::WarpedSin2 { c }) => {
                let w = warp(x, *c);
                a * PI * (2.0 * PI * w[0]).sin() * w[1]
            }
            Kind::Named(PotentialShape::DoubleHump) => 2.0 * a * PI * (4.0 * PI * x).sin(),
            Kind::Named(PotentialShape::Sine) => a * PI * (PI * x).cos(),
            Kind::Custom { f, .. } => f[1](x),
        }
    }

    pub fn d2phi(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match &self.kind {
            Kind::Named(PotentialShape::Sin2) => 2.0 * a * PI * PI * (2.0 * PI * x).cos(),
            Kind::Named(PotentialShape::WarpedSin2 { c }) => {
                let w = warp(x, *c);
                let s1 = a * PI * (2.0 * PI * w[0]).sin();
                let s2 = 2.0 * a * PI * PI * (2.0 * PI * w[0]).cos();
                s2 * w[1] * w[1] + s1 * w[2]
            }
            Kind::Named(PotentialShape::DoubleHump) => 8.0 * a * PI * PI * (4.0 * PI * x).cos(),
            Kind::Named(PotentialShape::Sine) => -a * PI * PI * (PI * x).sin(),
            Kind::Custom { f, .. } => f[2](x),
        }
    }

    pub fn d3phi(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match &self.kind {
            Kind::Named(PotentialShape::Sin2) => -4.0 * a * PI.powi(3) * (2.0 * PI * x).sin(),
            Kind::Named(PotentialShape::WarpedSin2 { c }) => {
                let w = warp(x, *c);
                let s1 = a * PI * (2.0 * PI * w[0]).sin();
                let s2 = 2.0 * a * PI * PI * (2.0 * PI * w[0]).cos();
                let s3 = -4.0 * a * PI.powi(3) * (2.0 * PI * w[0]).sin();
                s3 * w[1].powi(3) + 3.0 * s2 * w[1] * w[2] + s1 * w[3]
            }
            Kind::Named(PotentialShape::DoubleHump) => -32.0 * a * PI.powi(3) * (4.0 * PI * x).sin(),
            Kind::Named(PotentialShape::Sine) => -a * PI.powi(3) * (PI * x).cos(),
            Kind::Custom { d3: Some(d), .. } => d(x),
            Kind::Custom { f, .. } => {
                let h = 1e-5;
                (f[2](x + h) - f[2](x - h)) / (2.0 * h)
            }
        }
    }

    /// `phi(x0) - phi(x)`, evaluated without cancellation for the named families.
    pub fn depth(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match &self.kind {
            Kind::Named(PotentialShape::Sin2) => a * (PI * x).cos().powi(2),
            Kind::Named(PotentialShape::WarpedSin2 { c }) => a * (PI * warp(x, *c)[0]).cos().powi(2),
            _ => self.phi_max - self.phi(x),
        }
    }

    /// `phi(y) - phi(x)`, using product formulas for the named families so that
    /// nearby points do not lose relative accuracy.
    pub fn phi_diff(&self, y: f64, x: f64) -> f64 {
        self.phi_step(x, y - x)
    }

    /// `phi(x + s) - phi(x)` with the offset `s` given exactly.
    pub fn phi_step(&self, x: f64, s: f64) -> f64 {
        let a = self.amplitude;
        let y = x + s;
        match &self.kind {
            Kind::Named(PotentialShape::Sin2) => a * (PI * s).sin() * (PI * (x + y)).sin(),
            Kind::Named(PotentialShape::WarpedSin2 { c }) => {
                let dw = s + c * (PI * s).sin() * (PI * (x + y)).sin();
                let sw = warp(y, *c)[0] + warp(x, *c)[0];
                a * (PI * dw).sin() * (PI * sw).sin()
            }
            Kind::Named(PotentialShape::DoubleHump) => a * (2.0 * PI * s).sin() * (2.0 * PI * (x + y)).sin(),
            _ => self.phi(y) - self.phi(x),
        }
    }

    /// Names of the failed structural assumptions, each with a witness point.
    pub fn structural_failures(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(w) = self.unique_maximum_witness(n) {
            out.push(w);
        }
        if let Some(w) = self.shape_witness(n) {
            out.push(w);
        }
        out
    }

    /// `Some(description)` if (phi1) fails.
    pub fn unique_maximum_witness(&self, n: usize) -> Option<String> {
        if self.phi(0.0).abs() > 1e-12 || self.phi(1.0).abs() > 1e-12 {
            return Some(format!("phi1: phi(0)={:e}, phi(1)={:e} are not zero", self.phi(0.0), self.phi(1.0)));
        }
        if !(self.phi_max > 0.0) {
            return Some("phi1: maximum is not positive".into());
        }
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| self.phi(x)).collect();
        for i in 1..n {
            if vals[i] < -1e-14 {
                return Some(format!("phi1: negative value at x={}", xs[i]));
            }
        }
        let maxima: Vec<f64> = (1..n).filter(|&i| vals[i] > vals[i - 1] && vals[i] >= vals[i + 1]).map(|i| xs[i]).collect();
        if maxima.len() != 1 {
            return Some(format!("phi1: {} interior local maxima (witness x={:?})", maxima.len(), maxima.get(1).or(maxima.first())));
        }
        None
    }

    /// `Some(description)` if (phi2) fails.
    pub fn shape_witness(&self, n: usize) -> Option<String> {
        for i in 1..n {
            let x = i as f64 / n as f64;
            if (x - self.x0).abs() < 0.5 / n as f64 {
                continue;
            }
            let d = self.dphi(x);
            if x < self.x0 && !(d > 0.0) {
                return Some(format!("phi2: not increasing on (0,x0) at x={x}"));
            }
            if x > self.x0 && !(d < 0.0) {
                return Some(format!("phi2: not decreasing on (x0,1) at x={x}"));
            }
        }
        if !(self.d2phi(0.0) > 0.0) {
            return Some("phi2: not strictly convex at x=0".into());
        }
        if !(self.d2phi(1.0) > 0.0) {
            return Some("phi2: not strictly convex at x=1".into());
        }
        if !(self.d2phi(self.x0) < 0.0) {
            return Some(format!("phi2: not strictly concave at x0={}", self.x0));
        }
        None
    }
}

/// `[w, w', w'', w''']` for `w(x) = x + c sin^2(pi x)`.
fn warp(x: f64, c: f64) -> [f64; 4] {
    let s = (2.0 * PI * x).sin();
    let co = (2.0 * PI * x).cos();
    [
        x + c * (PI * x).sin().powi(2),
        1.0 + c * PI * s,
        2.0 * c * PI * PI * co,
        -4.0 * c * PI.powi(3) * s,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for shape in [PotentialShape::Sin2, PotentialShape::WarpedSin2 { c: 0.15 }, PotentialShape::DoubleHump, PotentialShape::Sine] {
            let p = PotentialProfile::new_unchecked(shape, 0.7).unwrap();
            for &x in &[0.1, 0.33, 0.5, 0.71, 0.9] {
                assert!((p.dphi(x) - fd(|y| p.phi(y), x)).abs() < 1e-7, "{shape:?}");
                assert!((p.d2phi(x) - fd(|y| p.dphi(y), x)).abs() < 1e-6, "{shape:?}");
                assert!((p.d3phi(x) - fd(|y| p.d2phi(y), x)).abs() < 1e-5, "{shape:?}");
                assert!((p.depth(x) - (p.phi_max() - p.phi(x))).abs() < 1e-14);
                assert!((p.phi_diff(x, 0.27) - (p.phi(x) - p.phi(0.27))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sin2_maximum_at_half() {
        let p = make_potential_family(PotentialShape::Sin2, 0.3).unwrap();
        assert!((p.x0() - 0.5).abs() < 1e-14);
        assert!((p.phi_max() - 0.3).abs() < 1e-15);
        let h = 1e-4;
        let fd2 = (p.phi(h) - 2.0 * p.phi(0.0) + p.phi(-h)) / (h * h);
        assert!((fd2 - 2.0 * PI * PI * 0.3).abs() < 1e-6);
    }

    #[test]
    fn warped_maximum_found_by_root_finding() {
        let c = 0.2;
        let p = make_potential_family(PotentialShape::WarpedSin2 { c }, 1.0).unwrap();
        assert!(p.dphi(p.x0()).abs() < 1e-13);
        assert!((p.phi_max() - 1.0).abs() < 1e-14);
        assert!((p.x0() - 0.5).abs() > 1e-2);
    }

    #[test]
    fn failing_families_are_rejected_with_reason() {
        let e = make_potential_family(PotentialShape::DoubleHump, 1.0).unwrap_err();
        assert!(e.to_string().contains("phi1"));
        let e = make_potential_family(PotentialShape::Sine, 1.0).unwrap_err();
        assert!(e.to_string().contains("phi2"));
        assert!(make_potential_family(PotentialShape::Sin2, 0.0).is_err());
    }

    #[test]
    fn custom_potential_matches_named() {
        let a = 0.4;
        let p = PotentialProfile::custom(
            "sin2",
            move |x| a * (PI * x).sin().powi(2),
            move |x| a * PI * (2.0 * PI * x).sin(),
            move |x| 2.0 * a * PI * PI * (2.0 * PI * x).cos(),
        )
        .unwrap();
        let q = make_potential_family(PotentialShape::Sin2, a).unwrap();
        assert!((p.x0() - q.x0()).abs() < 1e-12);
        assert!((p.d3phi(0.3) - q.d3phi(0.3)).abs() < 1e-4);
    }
}
