use std::f64::consts::PI;

/// Chebyshev interpolant on [a, b] built from first-kind nodes.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Nodes at which the function must be sampled for an `n`-term interpolant.
    pub fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let t = (PI * (j as f64 + 0.5) / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * t
            })
            .collect()
    }

    /// Interpolant through `values` sampled at [`Self::nodes`].
    pub fn from_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                    .sum();
                let c = 2.0 * s / n as f64;
                if k == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Self { a, b, coeffs }
    }

    fn eval_series(c: &[f64], t: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + c.first().copied().unwrap_or(0.0)
    }

    fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
        let n = c.len();
        if n < 2 {
            return vec![0.0];
        }
        let mut d = vec![0.0; n + 1];
        for k in (0..n - 1).rev() {
            d[k] = d[k + 2] + 2.0 * (k as f64 + 1.0) * c[k + 1];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        d
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        Self::eval_series(&self.coeffs, self.to_unit(x))
    }

    /// `k`-th derivative of the interpolant.
    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        let mut c = self.coeffs.clone();
        for _ in 0..k {
            c = Self::derivative_coeffs(&c);
        }
        let scale = (2.0 / (self.b - self.a)).powi(k as i32);
        scale * Self::eval_series(&c, self.to_unit(x))
    }
}
