use super::field::SpectralField;
use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Assembly options of the discretized operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorOptions {
    /// Include the field coupling `eps^2 mu' phi_g` (off: pure transport).
    pub coupling: bool,
    /// Add the `l = 0` coefficients (functions of `E`) to the basis.
    pub include_zero_mode: bool,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self { coupling: true, include_zero_mode: false }
    }
}

/// Dense matrix of `D L` acting on the weighted coefficients `h = (w T / |mu'|)^(1/2) g^`,
/// in which the Hilbert norm is the Euclidean norm.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub options: OperatorOptions,
    pub eps: f64,
    /// Angle modes of the basis (node-major).
    pub ells: Vec<i32>,
    pub nodes: usize,
    /// `D L` in the weighted basis.
    pub m: Mat<Complex64>,
    /// `L` in the weighted basis.
    pub l: Mat<Complex64>,
    /// Diagonal of `D`.
    pub transport: Vec<Complex64>,
    /// `u_k = (w T |mu'|)^(1/2) V_k` for `k = -K..=-1, 1..=K` with the weights `1/(4 pi^2 k^2)`.
    pub density_rows: Vec<(f64, Vec<Complex64>)>,
    /// Whether every `mu'` on the grid is negative.
    pub monotone: bool,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.ells.len() * self.nodes
    }

    /// Weighted coefficient vector of a field (requires `include_zero_mode = false`).
    pub fn weighted(&self, grid: &SpectralGrid, f: &SpectralField) -> Result<Vec<Complex64>> {
        if self.options.include_zero_mode || f.len() != self.dim() {
            return Err(Error::InvalidParameter("field does not match the operator basis".into()));
        }
        let two_l = self.ells.len();
        Ok(f.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = &grid.nodes()[i / two_l];
                c * (n.measure() / n.dmu.abs()).sqrt()
            })
            .collect())
    }

    /// `||d_x phi_g|| / ||g||_H` for a weighted coefficient vector.
    pub fn field_ratio(&self, h: &[Complex64]) -> f64 {
        let norm2: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        if norm2 == 0.0 {
            return 0.0;
        }
        let force2: f64 = self
            .density_rows
            .iter()
            .map(|(c, u)| {
                let rho: Complex64 = u.iter().zip(h).map(|(a, b)| a.conj() * b).sum();
                c * rho.norm_sqr()
            })
            .sum();
        self.eps * (force2 / norm2).sqrt()
    }

    /// `||M + L^-1 M^H L|| / ||M||` (Frobenius), the defect of skew-adjointness in the
    /// `L`-inner product.
    pub fn skew_defect(&self) -> Result<f64> {
        let llt = self.l.llt(Side::Lower).map_err(|e| Error::Numerical(format!("L is not positive definite: {e:?}")))?;
        let rhs = self.m.adjoint() * &self.l;
        let adj = llt.solve(&rhs);
        let sum = &self.m + &adj;
        Ok(sum.norm_l2() / self.m.norm_l2())
    }
}

/// Assembles `D L` on the grid. With `include_zero_mode` the basis also carries `l = 0`.
pub fn operator_matrix(grid: &SpectralGrid, options: OperatorOptions) -> Result<OperatorMatrix> {
    let lm = grid.modes() as i32;
    let ells: Vec<i32> = if options.include_zero_mode {
        (-lm..=lm).collect()
    } else {
        (-lm..=-1).chain(1..=lm).collect()
    };
    let nodes = grid.nodes().len();
    let n = nodes * ells.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    for nd in grid.nodes() {
        if !(nd.dmu.abs() > 0.0) || !(nd.measure() > 0.0) {
            return Err(Error::Numerical(format!("degenerate weight at E = {:e}", nd.energy)));
        }
    }
    let eps = grid.eps();
    let monotone = grid.nodes().iter().all(|n| n.dmu < 0.0);
    let km = grid.spatial_modes() as i32;
    let mut density_rows = Vec::new();
    for k in (-km..=km).filter(|&k| k != 0) {
        let mut u = Vec::with_capacity(n);
        for (j, nd) in grid.nodes().iter().enumerate() {
            let a = (nd.measure() * nd.dmu.abs()).sqrt();
            for &l in &ells {
                u.push(grid.kernel(j, k, l) * a);
            }
        }
        density_rows.push((1.0 / (4.0 * PI * PI * (k * k) as f64), u));
    }
    let row_sign: Vec<f64> = grid.nodes().iter().flat_map(|nd| std::iter::repeat_n(-nd.dmu.signum(), ells.len())).collect();
    let c3 = if options.coupling { eps.powi(3) } else { 0.0 };
    let mut l = Mat::<Complex64>::identity(n, n);
    if c3 != 0.0 {
        for (c, u) in &density_rows {
            let s = c3 * c;
            for col in 0..n {
                let uc = u[col].conj() * s;
                if uc == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for row in 0..n {
                    l[(row, col)] += row_sign[row] * u[row] * uc;
                }
            }
        }
    }
    let transport: Vec<Complex64> = grid
        .nodes()
        .iter()
        .flat_map(|nd| {
            let w = 2.0 * PI * nd.sheet.sign() * nd.frequency();
            ells.iter().map(move |&ll| Complex64::new(0.0, w * ll as f64))
        })
        .collect();
    let m = Mat::from_fn(n, n, |i, j| transport[i] * l[(i, j)]);
    Ok(OperatorMatrix { options, eps, ells, nodes, m, l, transport, density_rows, monotone })
}

/// Spectrum of the discretized operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub dim: usize,
    pub eps: f64,
    pub coupling: bool,
    /// Eigenvalues as `(re, im)`.
    pub eigenvalues: Vec<(f64, f64)>,
    pub max_abs_re: f64,
    pub max_abs_im: f64,
    /// `max ||d_x phi_g|| / ||g||_H` over the eigenvectors.
    pub max_field_ratio: f64,
    /// `||M + L^-1 M^H L|| / ||M||` (monotone profiles only).
    pub skew_defect: Option<f64>,
}

/// All eigenvalues and eigenvectors of the assembled operator.
pub fn eigen_scan(op: &OperatorMatrix) -> Result<EigenReport> {
    let evd = op.m.eigen().map_err(|e| Error::Numerical(format!("eigen-decomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let n = op.dim();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let z = s.column_vector()[i];
        eigenvalues.push((z.re, z.im));
        max_re = max_re.max(z.re.abs());
        max_im = max_im.max(z.im.abs());
        for (r, c) in col.iter_mut().enumerate() {
            *c = u[(r, i)];
        }
        max_ratio = max_ratio.max(op.field_ratio(&col));
    }
    let skew_defect = if op.monotone && !op.options.include_zero_mode { Some(op.skew_defect()?) } else { None };
    Ok(EigenReport {
        dim: n,
        eps: op.eps,
        coupling: op.options.coupling,
        eigenvalues,
        max_abs_re: max_re,
        max_abs_im: max_im,
        max_field_ratio: max_ratio,
        skew_defect,
    })
}

/// `max ||d_x phi_g||_inf / ||g||_H` over seeded random fields (`x` sampled on `n_x` points).
pub fn force_bound_fit(grid: &SpectralGrid, samples: usize, n_x: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f = SpectralField::from_fn(grid, |_, l| {
            Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)) / (l * l) as f64
        });
        let norm = grid.hilbert_norm(&f)?;
        let sup = grid.field_from_g(&f)?.force_sup(n_x);
        worst = worst.max(sup / norm);
    }
    Ok(worst)
}
