//! Maps a unit-torus equilibrium to the original system for several exponent choices.

use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::scaling::{from_unit_torus, ScalingParams, SteadyState};

fn main() -> bgk::Result<()> {
    let eps = 0.05;
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.5)?, eps, 16)?;
    let unit = SteadyState::from_equilibrium(&eq);
    for (a, c) in [(0.0, 1.0), (0.5, 0.5), (3.0, 1.0)] {
        let params = ScalingParams::from_eps(a, c, eps)?;
        let orig = from_unit_torus(&unit, &params);
        println!(
            "a = {a}, c = {c}: {:?}, period {:.4e}, Poisson residual {:.2e}",
            params.derived(),
            orig.period,
            orig.poisson_residual(1.0, 32)?
        );
    }
    Ok(())
}
