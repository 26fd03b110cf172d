use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Angle-Fourier coefficients `g^(l, E)` with `l != 0` on the nodes of a [`SpectralGrid`].
///
/// Storage is node-major with the modes `-L..=-1, 1..=L` per node; the zero mode is
/// absent, so every field has zero angle mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self { coeffs: vec![ZERO; grid.len()] }
    }

    /// Field with `g^(l, E_j) = f(node, l)`.
    pub fn from_fn<F: FnMut(usize, i32) -> Complex64>(grid: &SpectralGrid, mut f: F) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..grid.nodes().len() {
            for l in grid.ells() {
                out.coeffs[grid.index(j, l)] = f(j, l);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    /// Largest deviation from `g^(-l) = conj g^(l)`.
    pub fn reality_defect(&self, grid: &SpectralGrid) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..grid.nodes().len() {
            for l in 1..=grid.modes() as i32 {
                let a = self.coeffs[grid.index(j, l)];
                let b = self.coeffs[grid.index(j, -l)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

/// Potential generated by a field: spatial Fourier modes `phi_k`, `|k| <= K`, and the
/// angle-Fourier coefficients `phi^(l, E)` on the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    /// `phi_k` for `k = -K..=K` (index `k + K`, `phi_0 = 0`).
    pub spatial: Vec<Complex64>,
    /// `phi^(l, E)` in the storage order of [`SpectralField`].
    pub phi_hat: Vec<Complex64>,
}

impl PotentialField {
    pub fn spatial_modes(&self) -> usize {
        (self.spatial.len() - 1) / 2
    }

    /// `phi_k`.
    pub fn mode(&self, k: i32) -> Complex64 {
        self.spatial[(k + self.spatial_modes() as i32) as usize]
    }

    /// `||d_x phi||_{L^2(0,1)}` by Parseval.
    pub fn force_l2(&self) -> f64 {
        force_l2(&self.spatial)
    }

    /// `phi(x)` (complex for complex fields).
    pub fn value(&self, x: f64) -> Complex64 {
        synthesize(&self.spatial, x, false)
    }

    /// `d_x phi(x)`.
    pub fn force(&self, x: f64) -> Complex64 {
        synthesize(&self.spatial, x, true)
    }

    /// Samples of `phi` on `n` uniform points of [0, 1).
    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        (0..n).map(|i| self.value(i as f64 / n as f64)).collect()
    }

    /// `max |d_x phi|` over `n` uniform points.
    pub fn force_sup(&self, n: usize) -> f64 {
        (0..n).map(|i| self.force(i as f64 / n as f64).norm()).fold(0.0, f64::max)
    }
}

/// `||d_x phi||_{L^2}` of spatial modes stored as `k = -K..=K`.
pub fn force_l2(spatial: &[Complex64]) -> f64 {
    let kmax = (spatial.len() as i32 - 1) / 2;
    spatial
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = (i as i32 - kmax) as f64;
            4.0 * PI * PI * k * k * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

fn synthesize(spatial: &[Complex64], x: f64, derivative: bool) -> Complex64 {
    let kmax = (spatial.len() as i32 - 1) / 2;
    spatial
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = (i as i32 - kmax) as f64;
            let e = Complex64::from_polar(1.0, 2.0 * PI * k * x);
            if derivative {
                c * e * Complex64::new(0.0, 2.0 * PI * k)
            } else {
                c * e
            }
        })
        .sum()
}

/// Zero-mean solution of `phi'' = eps rho` on the unit torus from uniform samples of `rho`.
pub fn solve_poisson(rho: &[f64], eps: f64) -> Result<Vec<f64>> {
    let n = rho.len();
    if n < 2 {
        return Err(Error::InvalidParameter("Poisson solve needs at least two samples".into()));
    }
    let mut buf: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let mean = buf[0].re / n as f64;
    if mean.abs() > 1e-10 * rho.iter().map(|r| r.abs()).fold(1e-300, f64::max) {
        return Err(Error::InvalidParameter(format!("density has non-zero mean {mean:e}")));
    }
    buf[0] = ZERO;
    for (m, b) in buf.iter_mut().enumerate().skip(1) {
        let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        *b *= -eps / (4.0 * PI * PI * k * k);
    }
    if n % 2 == 0 {
        buf[n / 2] = ZERO;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|b| b.re / n as f64).collect())
}

impl SpectralGrid {
    fn check_field(&self, f: &SpectralField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} coefficients, grid expects {}",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// `||g||_H = (sum_sheets int T/|mu'| sum_l |g^(l, E)|^2 dE)^(1/2)`.
    pub fn hilbert_norm(&self, f: &SpectralField) -> Result<f64> {
        self.check_field(f)?;
        let two_l = 2 * self.modes();
        let mut s = 0.0;
        for (j, n) in self.nodes().iter().enumerate() {
            let w = n.measure() / n.dmu.abs();
            s += w * f.coeffs[j * two_l..(j + 1) * two_l].iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        Ok(s.sqrt())
    }

    /// `(f, g)_H`.
    pub fn hilbert_inner(&self, f: &SpectralField, g: &SpectralField) -> Result<Complex64> {
        self.check_field(f)?;
        self.check_field(g)?;
        let two_l = 2 * self.modes();
        let mut s = ZERO;
        for (j, n) in self.nodes().iter().enumerate() {
            let w = n.measure() / n.dmu.abs();
            for i in j * two_l..(j + 1) * two_l {
                s += w * f.coeffs[i].conj() * g.coeffs[i];
            }
        }
        Ok(s)
    }

    /// Spatial density modes `rho_k = int int g exp(-2 pi i k x) dx dv`, `k = -K..=K`.
    pub fn density_modes(&self, f: &SpectralField) -> Result<Vec<Complex64>> {
        self.check_field(f)?;
        let km = self.spatial_modes() as i32;
        let mut rho = vec![ZERO; 2 * km as usize + 1];
        for (j, n) in self.nodes().iter().enumerate() {
            let m = n.measure();
            for k in (-km..=km).filter(|&k| k != 0) {
                let mut s = ZERO;
                for l in self.ells() {
                    s += f.coeffs[self.index(j, l)] * self.kernel(j, k, l).conj();
                }
                rho[(k + km) as usize] += m * s;
            }
        }
        Ok(rho)
    }

    /// Potential from spatial modes: `phi^(l, E) = sum_k phi_k V_k(l, E)`.
    pub fn phi_hat_from_spatial(&self, spatial: &[Complex64]) -> Vec<Complex64> {
        let km = self.spatial_modes() as i32;
        let kin = (spatial.len() as i32 - 1) / 2;
        let mut out = vec![ZERO; self.len()];
        for j in 0..self.nodes().len() {
            for l in self.ells() {
                let mut s = ZERO;
                for k in (-kin.min(km)..=kin.min(km)).filter(|&k| k != 0) {
                    s += spatial[(k + kin) as usize] * self.kernel(j, k, l);
                }
                out[self.index(j, l)] = s;
            }
        }
        out
    }

    /// `phi_k = -eps rho_k / (4 pi^2 k^2)`.
    pub fn potential_from_density(&self, rho: &[Complex64]) -> Vec<Complex64> {
        let km = (rho.len() as i32 - 1) / 2;
        rho.iter()
            .enumerate()
            .map(|(i, r)| {
                let k = i as i32 - km;
                if k == 0 {
                    ZERO
                } else {
                    -self.eps() * r / (4.0 * PI * PI * (k * k) as f64)
                }
            })
            .collect()
    }

    /// Self-consistent potential of a field: `d_xx phi_g = eps int g dv`, zero mean.
    pub fn field_from_g(&self, f: &SpectralField) -> Result<PotentialField> {
        let rho = self.density_modes(f)?;
        let spatial = self.potential_from_density(&rho);
        let phi_hat = self.phi_hat_from_spatial(&spatial);
        Ok(PotentialField { spatial, phi_hat })
    }

    /// Potential of a function of the energy alone, given by its values at the nodes.
    /// Fails unless the total charge `sum T psi dE` vanishes.
    pub fn field_from_energy_function(&self, psi: &[f64]) -> Result<PotentialField> {
        if psi.len() != self.nodes().len() {
            return Err(Error::InvalidParameter("one value per node expected".into()));
        }
        let charge: f64 = self.nodes().iter().zip(psi).map(|(n, p)| n.measure() * p).sum();
        let scale: f64 = self.nodes().iter().zip(psi).map(|(n, p)| (n.measure() * p).abs()).sum();
        if charge.abs() > 1e-10 * scale.max(1e-300) {
            return Err(Error::InvalidParameter(format!("non-neutral input: total charge {charge:e}")));
        }
        let km = self.spatial_modes() as i32;
        let mut rho = vec![ZERO; 2 * km as usize + 1];
        for (j, n) in self.nodes().iter().enumerate() {
            for k in (-km..=km).filter(|&k| k != 0) {
                rho[(k + km) as usize] += n.measure() * psi[j] * self.kernel(j, k, 0).conj();
            }
        }
        let spatial = self.potential_from_density(&rho);
        let phi_hat = self.phi_hat_from_spatial(&spatial);
        Ok(PotentialField { spatial, phi_hat })
    }

    /// Transport part `D g`: `(D g)^(l, E) = +- 2 pi i l omega(E) g^(l, E)`; the zero mode
    /// (functions of `E`) is annihilated.
    pub fn transport(&self, f: &SpectralField) -> Result<SpectralField> {
        self.check_field(f)?;
        let mut out = f.clone();
        for (j, n) in self.nodes().iter().enumerate() {
            let w = 2.0 * PI * n.sheet.sign() * n.frequency();
            for l in self.ells() {
                out.coeffs[self.index(j, l)] *= Complex64::new(0.0, w * l as f64);
            }
        }
        Ok(out)
    }

    /// `L g = g + eps^2 mu' (phi_g - mean phi_g)` in coefficients (the mean only affects
    /// the absent zero mode).
    pub fn apply_l(&self, f: &SpectralField) -> Result<SpectralField> {
        let pot = self.field_from_g(f)?;
        let e2 = self.eps() * self.eps();
        let mut out = f.clone();
        for (j, n) in self.nodes().iter().enumerate() {
            for l in self.ells() {
                let i = self.index(j, l);
                out.coeffs[i] += e2 * n.dmu * pot.phi_hat[i];
            }
        }
        Ok(out)
    }

    /// Linearized operator `D L g`.
    pub fn apply_operator(&self, f: &SpectralField) -> Result<SpectralField> {
        self.transport(&self.apply_l(f)?)
    }

    /// `(g, L g)_H` by applying `L` and taking the weighted inner product.
    pub fn quadratic_form(&self, f: &SpectralField) -> Result<f64> {
        Ok(self.hilbert_inner(f, &self.apply_l(f)?)?.re)
    }

    /// `||g||_H^2 + eps ||d_x phi_g||^2`; equals the quadratic form for decreasing `mu`.
    pub fn quadratic_form_split(&self, f: &SpectralField) -> Result<f64> {
        let n = self.hilbert_norm(f)?;
        let p = self.field_from_g(f)?.force_l2();
        Ok(n * n + self.eps() * p * p)
    }
}
