use super::field::SpectralField;
use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default half-width of the near-resonant band `|T/(l q) -+ 1| < eta`.
pub const DEFAULT_RESONANCE_WIDTH: f64 = 1e-6;

/// A near-resonant `(node, l)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantCell {
    pub node: usize,
    pub ell: i32,
    /// `T/(l q) - 1` on the trapped and `v > 0` sheets, `T/(l q) + 1` on the `v < 0` sheet.
    pub detuning: f64,
    /// `|phi^(l, E)|` at the cell.
    pub phi_abs: f64,
    /// `phi^` exceeds the tolerance at a resonance.
    pub violation: bool,
}

/// Output of [`SpectralGrid::ghat_from_phi`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dispersion {
    pub field: SpectralField,
    pub resonant: Vec<ResonantCell>,
}

impl Dispersion {
    pub fn violations(&self) -> impl Iterator<Item = &ResonantCell> {
        self.resonant.iter().filter(|c| c.violation)
    }

    pub fn has_violation(&self) -> bool {
        self.violations().next().is_some()
    }
}

impl SpectralGrid {
    /// `T/(l q) - s` with `s = +-1` the transport sign of the node's sheet.
    pub fn detuning(&self, node: usize, ell: i32, q: f64) -> f64 {
        let n = &self.nodes()[node];
        n.period / (ell as f64 * q) - n.sheet.sign()
    }

    /// Angle coefficients of a candidate eigenfunction with eigenvalue `2 pi i / q` from
    /// its potential coefficients:
    /// `g^ = -eps^2 mu' phi^ / (1 - T/(l q))` on the trapped and `v > 0` sheets and
    /// `g^ = -eps^2 mu' phi^ / (1 + T/(l q))` on the `v < 0` sheet.
    ///
    /// Cells with `|detuning| < eta` get `g^ = 0` and are recorded; they are flagged as
    /// violations when `|phi^| > phi_tol` there.
    pub fn ghat_from_phi(&self, phi_hat: &[Complex64], q: f64, eta: f64, phi_tol: f64) -> Result<Dispersion> {
        if phi_hat.len() != self.len() {
            return Err(Error::InvalidParameter("potential coefficients do not match the grid".into()));
        }
        if q == 0.0 || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("q must be finite and non-zero, got {q}")));
        }
        let e2 = self.eps() * self.eps();
        let mut field = SpectralField::zeros(self);
        let mut resonant = Vec::new();
        for (j, n) in self.nodes().iter().enumerate() {
            let s = n.sheet.sign();
            for l in self.ells() {
                let i = self.index(j, l);
                let d = self.detuning(j, l, q);
                if d.abs() < eta {
                    let a = phi_hat[i].norm();
                    resonant.push(ResonantCell { node: j, ell: l, detuning: d, phi_abs: a, violation: a > phi_tol });
                    continue;
                }
                field.coeffs[i] = phi_hat[i] * (s * e2 * n.dmu / d);
            }
        }
        Ok(Dispersion { field, resonant })
    }

    /// Largest relative residual of `+-omega 2 pi i l (g^ + eps^2 mu' phi^) - (2 pi i / q) g^ = 0`
    /// over the cells where `g^` is non-zero.
    pub fn dispersion_residual(&self, g: &SpectralField, phi_hat: &[Complex64], q: f64) -> f64 {
        let e2 = self.eps() * self.eps();
        let lam = Complex64::new(0.0, 2.0 * PI / q);
        let mut worst: f64 = 0.0;
        for (j, n) in self.nodes().iter().enumerate() {
            let w = Complex64::new(0.0, 2.0 * PI * n.sheet.sign() * n.frequency());
            for l in self.ells() {
                let i = self.index(j, l);
                let gi = g.coeffs[i];
                if gi == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let a = w * l as f64 * (gi + e2 * n.dmu * phi_hat[i]);
                let b = lam * gi;
                let scale = a.norm().max(b.norm());
                worst = worst.max((a - b).norm() / scale);
            }
        }
        worst
    }
}
