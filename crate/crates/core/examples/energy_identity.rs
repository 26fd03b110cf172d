//! Both sides of the energy identity for seeded trial potentials at two resolutions.

use bgk::action_angle::ActionAngleChart;
use bgk::cli::random_trials;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::spectral_analysis::{energy_identity, IdentitySettings, KernelTable, TableSettings};

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::new(&eq)?;
    let table = KernelTable::new(&chart, TableSettings { modes: 16, spatial_modes: 4, ..Default::default() })?;
    let trials = random_trials(4, 4, 0.5, 10.0, 1)?;
    let base = IdentitySettings::default();
    for settings in [base, base.refined()] {
        for r in energy_identity(&chart, &table, &trials, &settings)? {
            println!("q = {:.4}: lhs {:.10e}, rhs {:.10e}, residual {:.2e}", r.q, r.lhs, r.rhs, r.residual);
        }
    }
    Ok(())
}
