//! Period function, its derivatives and turning points across the three energy regions.

use bgk::action_angle::ActionAngleChart;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::new(&eq)?;
    let m = chart.e_min().abs();
    println!("{:>12} {:>12} {:>12} {:>12} {:>10} {:>10}", "E", "T", "T'", "T''", "x_-", "x_+");
    for f in [-0.99, -0.5, -0.1, -1e-4, 1e-4, 0.1, 1.0, 10.0] {
        let e = f * m;
        let [t, t1, t2] = chart.period_all(e)?;
        let (xm, xp) = chart.orbit_interval(e)?;
        println!("{e:>12.4e} {t:>12.6} {t1:>12.4e} {t2:>12.4e} {xm:>10.6} {xp:>10.6}");
    }
    println!("angle of (0.5, 0.1): {:.6}", chart.angle(0.5, 0.1)?);
    Ok(())
}
