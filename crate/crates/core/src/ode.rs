//! Adaptive Dormand-Prince 5(4) integration with exact output times.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 1_000_000 }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each of the
/// increasing times in `outputs` (all `>= t0`).
pub fn solve<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], outputs: &[f64], tol: Tolerance) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    let t_end = outputs.last().copied().unwrap_or(t0);
    let span = (t_end - t0).abs().max(1e-300);
    let mut h = span * 1e-3;
    let mut k1 = f(t, &y);
    let mut steps = 0;
    for &target in outputs {
        if target < t {
            return Err(Error::InvalidParameter("output times must be increasing".into()));
        }
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Numerical("ODE step budget exhausted".into()));
            }
            let last = target - t <= h;
            let hs = if last { target - t } else { h };
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &y_new);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                h = hs * 0.1;
                continue;
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y_new;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    h = hs * fac;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < span * 1e-15 {
                return Err(Error::Numerical("ODE step size underflow".into()));
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let tp = 2.0 * std::f64::consts::PI;
        let ys = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], &[tp / 4.0, tp], Tolerance::default()).unwrap();
        assert!(ys[0][0].abs() < 1e-10 && (ys[0][1] + 1.0).abs() < 1e-10);
        assert!((ys[1][0] - 1.0).abs() < 1e-10 && ys[1][1].abs() < 1e-10);
    }

    #[test]
    fn exponential_growth_matches() {
        let ys = solve(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], &[0.0, 1.0, 3.0], Tolerance::default()).unwrap();
        assert_eq!(ys[0][0], 1.0);
        assert!((ys[1][0] - 1f64.exp()).abs() < 1e-11);
        assert!((ys[2][0] / 3f64.exp() - 1.0).abs() < 1e-11);
    }
}
