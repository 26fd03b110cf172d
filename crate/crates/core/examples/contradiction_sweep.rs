//! Sweep of the regularized energy functionals over `q`, trial potentials and `eps`, with the
//! implied threshold `eps_0` at two quadrature resolutions.

use bgk::action_angle::ActionAngleChart;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::spectral_analysis::{contradiction_constant, KernelTable, SweepSettings, TableSettings};
use std::time::Instant;

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::new(&eq)?;
    let start = Instant::now();
    let table = KernelTable::new(&chart, TableSettings::default())?;
    println!("kernel table: {:.1} s", start.elapsed().as_secs_f64());
    let base = SweepSettings::default();
    for settings in [base.clone(), SweepSettings { j: base.j.refined(), ..base.clone() }] {
        let start = Instant::now();
        let r = contradiction_constant(&chart, &table, &settings)?;
        for l in &r.levels {
            println!("eps {:.3}: sup R = {:.4e}", l.eps, l.sup_r);
        }
        println!("slopes {:?}, eps0 = {:.4e}, {:.1} s", r.slopes, r.eps0, start.elapsed().as_secs_f64());
    }
    Ok(())
}
