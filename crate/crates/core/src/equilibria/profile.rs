use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Sign of the velocity; selects the branch of a multi-branch profile on e > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Up,
    Down,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Up => 1.0,
            Branch::Down => -1.0,
        }
    }

    pub fn of_velocity(v: f64) -> Self {
        if v >= 0.0 {
            Branch::Up
        } else {
            Branch::Down
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchKind {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonotonicityClass {
    Decreasing,
    IncreasingThenDecreasing,
    PerBranch,
}

type ProfileFn = Arc<dyn Fn(f64, Branch) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Boltzmann { beta: f64 },
    Polytrope { n: i32, h: f64 },
    EvenNonMonotone { k: i32 },
    Schamel { alpha: f64, beta: f64 },
    Custom { mu: ProfileFn, dmu: Option<ProfileFn>, d2mu: Option<ProfileFn> },
}

/// Microscopic equation of state `mu(e)` with up to two branches on e > 0.
#[derive(Clone)]
pub struct MicroProfile {
    name: String,
    h: f64,
    kind: BranchKind,
    class: MonotonicityClass,
    shape: Shape,
}

impl fmt::Debug for MicroProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MicroProfile")
            .field("name", &self.name)
            .field("h", &self.h)
            .field("kind", &self.kind)
            .field("class", &self.class)
            .finish()
    }
}

/// `exp(-beta e)` on the whole real line.
pub fn make_boltzmannian(beta: f64) -> Result<MicroProfile> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("inverse temperature must be positive, got {beta}")));
    }
    Ok(MicroProfile {
        name: format!("boltzmann(beta={beta})"),
        h: f64::NEG_INFINITY,
        kind: BranchKind::Single,
        class: MonotonicityClass::Decreasing,
        shape: Shape::Boltzmann { beta },
    })
}

/// `1 / (e^(2k+1) - h^(2k+1))` on `(h, inf)`.
pub fn make_polytrope(k: u32, h: f64) -> Result<MicroProfile> {
    if !(h < 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("polytrope endpoint must be negative, got {h}")));
    }
    if k > 20 {
        return Err(Error::InvalidParameter(format!("polytrope index {k} too large")));
    }
    Ok(MicroProfile {
        name: format!("polytrope(k={k},h={h})"),
        h,
        kind: BranchKind::Single,
        class: MonotonicityClass::Decreasing,
        shape: Shape::Polytrope { n: 2 * k as i32 + 1, h },
    })
}

/// `1 / (1 + e^(2k))`, increasing on e < 0 and decreasing on e > 0.
pub fn make_even_nonmonotone(k: u32) -> Result<MicroProfile> {
    if k == 0 || k > 20 {
        return Err(Error::InvalidParameter(format!("index must be in 1..=20, got {k}")));
    }
    Ok(MicroProfile {
        name: format!("even_nonmonotone(k={k})"),
        h: f64::NEG_INFINITY,
        kind: BranchKind::Single,
        class: MonotonicityClass::IncreasingThenDecreasing,
        shape: Shape::EvenNonMonotone { k: k as i32 },
    })
}

/// Schamel-type profile: `exp(beta e - alpha^2)` for e <= 0 and
/// `exp(-(s sqrt(e) + alpha)^2)` for e > 0, where `s = 1` on the single-branch
/// variant and `s = sign(v)` on the multi-branch variant.
pub fn make_schamel(alpha: f64, beta: f64, multibranch: bool) -> Result<MicroProfile> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be non-negative, got {alpha}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(MicroProfile {
        name: format!("schamel(alpha={alpha},beta={beta},multibranch={multibranch})"),
        h: f64::NEG_INFINITY,
        kind: if multibranch { BranchKind::Multi } else { BranchKind::Single },
        class: if multibranch { MonotonicityClass::PerBranch } else { MonotonicityClass::IncreasingThenDecreasing },
        shape: Shape::Schamel { alpha, beta },
    })
}

impl MicroProfile {
    /// Profile from closures; derivatives fall back to finite differences when absent.
    pub fn custom<F>(name: &str, h: f64, kind: BranchKind, class: MonotonicityClass, mu: F) -> Self
    where
        F: Fn(f64, Branch) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            h,
            kind,
            class,
            shape: Shape::Custom { mu: Arc::new(mu), dmu: None, d2mu: None },
        }
    }

    pub fn with_derivatives<D1, D2>(mut self, dmu: D1, d2mu: D2) -> Self
    where
        D1: Fn(f64, Branch) -> f64 + Send + Sync + 'static,
        D2: Fn(f64, Branch) -> f64 + Send + Sync + 'static,
    {
        if let Shape::Custom { dmu: d1, d2mu: d2, .. } = &mut self.shape {
            *d1 = Some(Arc::new(dmu));
            *d2 = Some(Arc::new(d2mu));
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Left endpoint of the domain (may be `-inf`).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> BranchKind {
        self.kind
    }

    pub fn class(&self) -> MonotonicityClass {
        self.class
    }

    pub fn is_multibranch(&self) -> bool {
        self.kind == BranchKind::Multi
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(self.shape, Shape::Custom { dmu: None, .. })
    }

    /// `mu(e)` on the branch selected by `b` (ignored for e <= 0 and single-branch profiles).
    pub fn mu(&self, e: f64, b: Branch) -> f64 {
        if e <= self.h {
            return f64::NAN;
        }
        match &self.shape {
            Shape::Boltzmann { beta } => (-beta * e).exp(),
            Shape::Polytrope { n, h } => 1.0 / (e.powi(*n) - h.powi(*n)),
            Shape::EvenNonMonotone { k } => 1.0 / (1.0 + e.powi(2 * k)),
            Shape::Schamel { alpha, beta } => {
                if e <= 0.0 {
                    (beta * e - alpha * alpha).exp()
                } else {
                    let s = self.branch_sign(b) * e.sqrt();
                    (-(s + alpha) * (s + alpha)).exp()
                }
            }
            Shape::Custom { mu, .. } => mu(e, b),
        }
    }

    pub fn dmu(&self, e: f64, b: Branch) -> f64 {
        if e <= self.h {
            return f64::NAN;
        }
        match &self.shape {
            Shape::Boltzmann { beta } => -beta * (-beta * e).exp(),
            Shape::Polytrope { n, h } => {
                let p = e.powi(*n) - h.powi(*n);
                -(*n as f64) * e.powi(n - 1) / (p * p)
            }
            Shape::EvenNonMonotone { k } => {
                let q = 1.0 + e.powi(2 * k);
                -2.0 * *k as f64 * e.powi(2 * k - 1) / (q * q)
            }
            Shape::Schamel { alpha, beta } => {
                if e <= 0.0 {
                    beta * (beta * e - alpha * alpha).exp()
                } else {
                    let sg = self.branch_sign(b);
                    let s = e.sqrt();
                    let m = (-(sg * s + alpha).powi(2)).exp();
                    -(1.0 + sg * alpha / s) * m
                }
            }
            Shape::Custom { dmu: Some(d), .. } => d(e, b),
            Shape::Custom { .. } => self.fd_first(e, b),
        }
    }

    pub fn d2mu(&self, e: f64, b: Branch) -> f64 {
        if e <= self.h {
            return f64::NAN;
        }
        match &self.shape {
            Shape::Boltzmann { beta } => beta * beta * (-beta * e).exp(),
            Shape::Polytrope { n, h } => {
                let nf = *n as f64;
                let p = e.powi(*n) - h.powi(*n);
                -nf * (nf - 1.0) * e.powi(n - 2) / (p * p) + 2.0 * nf * nf * e.powi(2 * n - 2) / (p * p * p)
            }
            Shape::EvenNonMonotone { k } => {
                let kf = *k as f64;
                let q = 1.0 + e.powi(2 * k);
                -2.0 * kf * (2.0 * kf - 1.0) * e.powi(2 * k - 2) / (q * q)
                    + 8.0 * kf * kf * e.powi(4 * k - 2) / (q * q * q)
            }
            Shape::Schamel { alpha, beta } => {
                if e <= 0.0 {
                    beta * beta * (beta * e - alpha * alpha).exp()
                } else {
                    let sg = self.branch_sign(b);
                    let s = e.sqrt();
                    let m = (-(sg * s + alpha).powi(2)).exp();
                    let g = 1.0 + sg * alpha / s;
                    (sg * alpha / (2.0 * s * s * s) + g * g) * m
                }
            }
            Shape::Custom { d2mu: Some(d), .. } => d(e, b),
            Shape::Custom { .. } => self.fd_second(e, b),
        }
    }

    fn branch_sign(&self, b: Branch) -> f64 {
        match self.kind {
            BranchKind::Single => 1.0,
            BranchKind::Multi => b.sign(),
        }
    }

    /// Finite-difference step that keeps the stencil on one side of e = 0 and inside the domain.
    fn fd_stencil(&self, e: f64, width: f64) -> (f64, f64) {
        let mut step = width * e.abs().max(1e-3);
        if e > 0.0 {
            step = step.min(0.5 * e);
        } else if e < 0.0 {
            step = step.min(0.5 * e.abs());
        }
        if self.h.is_finite() {
            step = step.min(0.5 * (e - self.h));
        }
        (e, step.max(1e-300))
    }

    fn fd_first(&self, e: f64, b: Branch) -> f64 {
        let (e, s) = self.fd_stencil(e, 1e-5);
        if e == 0.0 {
            return (self.mu(0.0, b) - self.mu(-s, b)) / s;
        }
        (self.mu(e + s, b) - self.mu(e - s, b)) / (2.0 * s)
    }

    fn fd_second(&self, e: f64, b: Branch) -> f64 {
        let (e, s) = self.fd_stencil(e, 1e-3);
        if e == 0.0 {
            return (self.mu(0.0, b) - 2.0 * self.mu(-s, b) + self.mu(-2.0 * s, b)) / (s * s);
        }
        (self.mu(e + s, b) - 2.0 * self.mu(e, b) + self.mu(e - s, b)) / (s * s)
    }

    /// Branches present on e > 0.
    pub fn exterior_branches(&self) -> &'static [Branch] {
        match self.kind {
            BranchKind::Single => &[Branch::Up],
            BranchKind::Multi => &[Branch::Up, Branch::Down],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, e: f64) -> f64 {
        let h = 1e-6 * e.abs().max(1e-2);
        (f(e + h) - f(e - h)) / (2.0 * h)
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let profiles = [
            make_boltzmannian(1.3).unwrap(),
            make_polytrope(1, -2.0).unwrap(),
            make_even_nonmonotone(2).unwrap(),
            make_schamel(0.7, 1.1, false).unwrap(),
            make_schamel(0.7, 1.1, true).unwrap(),
        ];
        for p in &profiles {
            for &b in &[Branch::Up, Branch::Down] {
                for &e in &[-1.5, -0.3, 0.2, 0.9, 3.0] {
                    let d1 = fd(|x| p.mu(x, b), e);
                    let d2 = fd(|x| p.dmu(x, b), e);
                    assert!((p.dmu(e, b) - d1).abs() < 1e-6 * (1.0 + d1.abs()), "{} mu' at {e}", p.name());
                    assert!((p.d2mu(e, b) - d2).abs() < 1e-5 * (1.0 + d2.abs()), "{} mu'' at {e}", p.name());
                }
            }
        }
    }

    #[test]
    fn custom_profile_fd_fallback() {
        let p = MicroProfile::custom("exp", f64::NEG_INFINITY, BranchKind::Single, MonotonicityClass::Decreasing, |e, _| {
            (-e).exp()
        });
        assert!(!p.has_analytic_derivatives());
        for &e in &[-1.0, 0.0, 0.5, 2.0] {
            assert!((p.dmu(e, Branch::Up) + (-e).exp()).abs() < 1e-8);
            assert!((p.d2mu(e, Branch::Up) - (-e).exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(make_boltzmannian(0.0).is_err());
        assert!(make_boltzmannian(-1.0).is_err());
        assert!(make_polytrope(0, 0.0).is_err());
        assert!(make_even_nonmonotone(0).is_err());
        assert!(make_schamel(-1.0, 1.0, false).is_err());
        assert!(make_schamel(1.0, 0.0, false).is_err());
    }

    #[test]
    fn polytrope_outside_domain_is_nan() {
        let p = make_polytrope(0, -1.0).unwrap();
        assert!(p.mu(-1.0, Branch::Up).is_nan());
        assert_eq!(p.mu(0.0, Branch::Up), 1.0);
        assert_eq!(p.mu(1.0, Branch::Up), 0.5);
    }
}
