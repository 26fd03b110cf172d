//! Running time-average of the force for smooth trapped data at two energy resolutions.

use bgk::action_angle::ActionAngleChart;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::linearized_dynamics::{simulate, BumpData, SimSettings};
use bgk::spectral_analysis::{GridSettings, SpectralGrid};
use std::time::Instant;

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::new(&eq)?;
    for trapped in [128, 256] {
        let start = Instant::now();
        let settings = GridSettings { modes: 8, spatial_modes: 8, trapped_energies: trapped, exterior_energies: 64, exterior_cutoff: 0.002, ..Default::default() };
        let grid = SpectralGrid::new(&chart, settings)?;
        let initial = BumpData::default().field(&grid)?;
        let report = simulate(&grid, initial, &SimSettings { t_end: 200.0, dt: 0.1, coupling: true })?;
        let a25 = report.running_avg_at(25.0).unwrap_or(f64::NAN);
        let a200 = report.running_avg_at(200.0).unwrap_or(f64::NAN);
        println!(
            "trapped {trapped}: avg(25) = {a25:.6e}, avg(200) = {a200:.6e}, ratio {:.4}, horizon {:.1}, {:.1} s",
            a200 / a25,
            report.recurrence_horizon,
            start.elapsed().as_secs_f64()
        );
        for w in &report.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
