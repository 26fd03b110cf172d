use super::field::force_l2;
use super::table::TableSample;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Real band-limited potential `phi(x) = sum_{0 < |k| <= K} phi_k exp(2 pi i k x)` used as a
/// stand-in for `phi_g` in the energy identity and the contradiction sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPotential {
    /// `phi_k` for `k = -K..=K` (index `k + K`).
    pub spatial: Vec<Complex64>,
}

impl TrialPotential {
    /// Random modes `phi_k = (u + i w)/k^2` with `u, w` uniform on `[-1, 1]`, `phi_{-k} = conj phi_k`.
    pub fn random<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Self {
        let mut spatial = vec![Complex64::new(0.0, 0.0); 2 * modes + 1];
        for k in 1..=modes {
            let c = Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)) / (k * k) as f64;
            spatial[modes + k] = c;
            spatial[modes - k] = c.conj();
        }
        Self { spatial }
    }

    /// Potential from modes `k = 1..=K`; the negative modes are the conjugates.
    pub fn from_positive_modes(modes: &[Complex64]) -> Self {
        let kk = modes.len();
        let mut spatial = vec![Complex64::new(0.0, 0.0); 2 * kk + 1];
        for (i, &c) in modes.iter().enumerate() {
            spatial[kk + 1 + i] = c;
            spatial[kk - 1 - i] = c.conj();
        }
        Self { spatial }
    }

    pub fn modes(&self) -> usize {
        (self.spatial.len() - 1) / 2
    }

    pub fn mode(&self, k: i32) -> Complex64 {
        self.spatial[(k + self.modes() as i32) as usize]
    }

    pub fn value(&self, x: f64) -> f64 {
        let kk = self.modes() as i32;
        (1..=kk).map(|k| 2.0 * (self.mode(k) * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x)).re).sum()
    }

    /// `||d_x phi||_{L^2}`.
    pub fn force_l2(&self) -> f64 {
        force_l2(&self.spatial)
    }

    /// Fails when the table does not carry all modes of the potential.
    pub fn check(&self, spatial_modes: usize) -> Result<()> {
        if self.modes() > spatial_modes {
            return Err(Error::InvalidParameter(format!(
                "trial potential has {} spatial modes, table carries {}",
                self.modes(),
                spatial_modes
            )));
        }
        Ok(())
    }

    /// `phi^(l, E) = sum_k phi_k V_k(l, E)` and its energy derivative.
    pub fn phi_hat(&self, s: &TableSample<'_>, l: i32) -> (Complex64, Complex64) {
        let kk = self.modes() as i32;
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for k in 1..=kk {
            let (a, da) = s.kernel(k, l);
            let (b, db) = s.kernel(-k, l);
            let (p, m) = (self.mode(k), self.mode(-k));
            v += p * a + m * b;
            d += p * da + m * db;
        }
        (v, d)
    }
}
