//! Resonant energy windows `T(E) = l q` for a few values of `q`, written as CSV.

use bgk::action_angle::ActionAngleChart;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::spectral_analysis::resonance_map;

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::new(&eq)?;
    for q in [0.5, 1.0, 2.0] {
        let map = resonance_map(&chart, q, None, Some(6))?;
        println!("q = {q}, delta = {:.4}, l* = {}, L* = {}", map.delta, map.ell_star, map.big_l_star);
        map.write_csv(std::io::stdout())?;
    }
    Ok(())
}
