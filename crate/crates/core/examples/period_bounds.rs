//! Region-wise normalized ratios of T, T', T'' and the turning-point limits.

use bgk::action_angle::ActionAngleChart;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::period_asymptotics::{scan_chart_settings, verify_period_bounds, verify_turning_asymptotics, AsymptoticsSettings};

fn main() -> bgk::Result<()> {
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0)?, make_potential_family(PotentialShape::Sin2, 0.1)?, 0.05, 16)?;
    let chart = ActionAngleChart::with_settings(&eq, scan_chart_settings())?;
    let report = verify_period_bounds(&chart, AsymptoticsSettings::default())?;
    for s in &report.series {
        println!("{:?} {:?}: [{:.4e}, {:.4e}] spread {:.2}", s.region, s.quantity, s.lower, s.upper, s.spread());
    }
    let turning = verify_turning_asymptotics(&chart)?;
    println!("turning-point limits {:.6} / {:.6}, passed {}", turning.left_limit, turning.right_limit, turning.passed);
    Ok(())
}
