//! Quadrature rules: Gauss-Legendre, adaptive Gauss-Kronrod and double-exponential.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` nodes, computed by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule with `panels` equal panels.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Composite nodes and weights on [a, b].
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.len());
        for p in 0..panels {
            let lo = a + h * p as f64;
            out.extend(self.mapped(lo, lo + h));
        }
        out
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel: (estimate, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature on a finite interval.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    const MAX_PANELS: usize = 4000;
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numerical(format!(
                "adaptive quadrature on [{a:e}, {b:e}] did not converge (error estimate {err:e})"
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Numerical("adaptive quadrature panel underflow".into()));
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Tanh-sinh quadrature on [a, b]; tolerates integrable endpoint singularities.
///
/// The integrand receives `(x, distance to nearest endpoint)` so that callers can
/// evaluate near-endpoint quantities without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // far enough out that the endpoint distance reaches ~1e-275
    let t_max = 6.0;
    let mut h = 0.5;
    let node = |t: f64| {
        let u = 0.5 * PI * t.sinh();
        let ch = u.cosh();
        // distance from the nearer endpoint on the unit interval: 1 - tanh|u|
        let d = 1.0 / (u.abs().exp() * ch);
        let w = 0.5 * PI * t.cosh() / (ch * ch);
        (u.tanh(), d, w)
    };
    let mut sum = {
        let (x, d, w) = node(0.0);
        w * f(c + half * x, half * d)
    };
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        let (x, d, w) = node(t);
        sum += pair(&mut f, c - half * x, c + half * x, half * d, w);
        k += 1;
    }
    let mut prev = sum * h * half;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            let (x, d, w) = node(t);
            sum += pair(&mut f, c - half * x, c + half * x, half * d, w);
            k += 2;
        }
        let cur = sum * h * half;
        if (cur - prev).abs() <= rel_tol * cur.abs() || (cur - prev).abs() < 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numerical(format!("tanh-sinh quadrature on [{a:e}, {b:e}] did not converge")))
}

/// Symmetric node pair; values that overflow at nodes rounding onto an endpoint are dropped.
fn pair<F: FnMut(f64, f64) -> f64>(f: &mut F, xl: f64, xr: f64, d: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let s = w * f(xl, d) + w * f(xr, d);
    if s.is_finite() {
        s
    } else {
        0.0
    }
}

/// Exp-sinh quadrature on [a, inf) for integrands decaying at infinity.
pub fn exp_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, scale: f64, rel_tol: f64) -> Result<f64> {
    let t_lo = -4.0;
    let t_hi = 4.0;
    let mut h = 0.5;
    let eval = |f: &mut F, t: f64| {
        let u = 0.5 * PI * t.sinh();
        let x = u.exp();
        let w = 0.5 * PI * t.cosh() * x;
        let v = f(a + scale * x);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let n = ((t_hi - t_lo) / h) as usize;
    let mut sum: f64 = (0..=n).map(|k| eval(&mut f, t_lo + k as f64 * h)).sum();
    let mut prev = sum * h * scale;
    for _ in 0..12 {
        h *= 0.5;
        let n = ((t_hi - t_lo) / h).round() as usize;
        sum += (1..n).step_by(2).map(|k| eval(&mut f, t_lo + k as f64 * h)).sum::<f64>();
        let cur = sum * h * scale;
        if (cur - prev).abs() <= rel_tol * cur.abs() || (cur - prev).abs() < 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numerical(format!("exp-sinh quadrature on [{a:e}, inf) did not converge")))
}
