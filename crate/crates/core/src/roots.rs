//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket, stopping at relative width `rel_tol`
/// (or absolute width `abs_tol`).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo:e}, {hi:e}] (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        let width = (hi - lo).abs();
        if width <= abs_tol || width <= rel_tol * lo.abs().max(hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection followed by one Newton step, kept only if it stays in the bracket.
pub fn bisect_newton<F, D>(mut f: F, mut df: D, lo: f64, hi: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let x = bisect(&mut f, lo, hi, rel_tol, abs_tol)?;
    let d = df(x);
    if d != 0.0 && d.is_finite() {
        let y = x - f(x) / d;
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if y > a && y < b && y.is_finite() {
            return Ok(y);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn resolves_tiny_roots_relatively() {
        let r = bisect(|x: f64| x - 1e-30, 0.0, 1.0, 1e-13, 0.0).unwrap();
        assert!((r / 1e-30 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_polish_improves() {
        let r = bisect_newton(|x: f64| x.cos() - x, |x: f64| -x.sin() - 1.0, 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((r.cos() - r).abs() < 1e-15);
    }

    #[test]
    fn rejects_missing_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0).is_err());
    }
}
