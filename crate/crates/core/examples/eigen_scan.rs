//! Dense spectrum of the discretized linearized operator on a small grid.

use bgk::action_angle::ActionAngleChart;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::spectral_analysis::{eigen_scan, operator_matrix, GridSettings, OperatorOptions, SpectralGrid};

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::new(&eq)?;
    for per_region in [16, 32] {
        let settings = GridSettings { modes: 4, spatial_modes: 4, trapped_energies: per_region, exterior_energies: per_region, ..Default::default() };
        let grid = SpectralGrid::new(&chart, settings)?;
        let r = eigen_scan(&operator_matrix(&grid, OperatorOptions::default())?)?;
        println!(
            "N = {}: max |Re| = {:.2e}, max |Im| = {:.4}, max field ratio = {:.4e}, skew defect = {:.2e}",
            r.dim,
            r.max_abs_re,
            r.max_abs_im,
            r.max_field_ratio,
            r.skew_defect.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
