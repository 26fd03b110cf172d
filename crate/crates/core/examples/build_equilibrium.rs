//! Builds Boltzmannian equilibria, checks their assumptions and the Poisson residual.

use bgk::equilibria::{make_boltzmannian, make_potential_family, verify_assumptions, Equilibrium, PotentialShape};

fn main() -> bgk::Result<()> {
    for amplitude in [0.1, 0.5] {
        let eq = Equilibrium::new(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, amplitude)?, 0.05)?;
        let (rho, at) = eq.min_rho_plus();
        println!("amplitude {amplitude}: E_min = {:.4}, min rho_plus = {rho:.6} at x = {at:.4}", eq.e_min());
        println!("  Poisson residual = {:.3e}", eq.poisson_residual()?);
        let report = verify_assumptions(&eq);
        for c in report.checks.iter().filter(|c| !c.passed) {
            println!("  {} fails: {}", c.name, c.detail);
        }
        println!("  all assumptions hold: {}", report.all_passed());
    }
    Ok(())
}
