//! Acceptance criteria: one PASS/FAIL line per criterion at the stated tolerances.

use bgk::action_angle::ActionAngleChart;
use bgk::cli::random_trials;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::linearized_dynamics::{simulate, BumpData, SimSettings};
use bgk::period_asymptotics::{refinement_stability, scan_chart_settings, AsymptoticsSettings, Quantity};
use bgk::scaling::{from_unit_torus, to_unit_torus, ScalingParams, SteadyState};
use bgk::spectral_analysis::{
    contradiction_constant, eigen_scan, energy_identity, operator_matrix, resonance_map, GridSettings, IdentitySettings,
    KernelTable, OperatorOptions, SpectralGrid, SweepSettings, TableSettings,
};
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

/// Criteria that cannot be met on this machine; see the decision ledger.
const KNOWN_INFEASIBLE: [u32; 1] = [8];

struct Outcome {
    id: u32,
    passed: bool,
}

fn report(id: u32, passed: bool, detail: String) -> Outcome {
    let line = format!("{} criterion {id}: {detail}", if passed { "PASS" } else { "FAIL" });
    // bypasses the test harness capture so the lines reach the log
    let _ = writeln!(std::io::stderr(), "{line}");
    Outcome { id, passed }
}

fn standard(a: f64, eps: f64) -> Equilibrium {
    Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), make_potential_family(PotentialShape::Sin2, a).unwrap(), eps, 16).unwrap()
}

fn steady_state_consistency() -> Outcome {
    let start = Instant::now();
    let eq = Equilibrium::new(make_boltzmannian(1.0).unwrap(), make_potential_family(PotentialShape::Sin2, 0.5).unwrap(), 0.05).unwrap();
    let res = eq.poisson_residual().unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(1, res < 1e-8 && secs < 10.0, format!("Poisson residual {res:.3e} on {} points (< 1e-8), {secs:.1} s (< 10 s)", eq.x_grid().len()))
}

fn ratio_suite() -> Outcome {
    let start = Instant::now();
    let chart = ActionAngleChart::with_settings(&standard(0.1, 0.05), scan_chart_settings()).unwrap();
    let settings = AsymptoticsSettings { offset: 1e-8, ..Default::default() };
    let (coarse, _, change) = refinement_stability(&chart, settings).unwrap();
    let nine: Vec<_> = coarse.series.iter().filter(|s| matches!(s.quantity, Quantity::T | Quantity::T1 | Quantity::T2)).collect();
    let worst = nine.iter().map(|s| s.spread()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let passed = nine.len() == 9 && worst < 100.0 && change < 5e-3 && secs < 60.0;
    report(2, passed, format!("{} ratios, worst max/min {worst:.3} (< 100), change under node doubling {:.3e} (< 0.5%), {secs:.1} s (< 60 s)", nine.len(), change))
}

fn elliptic_limit() -> Outcome {
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let p = chart.potential();
    let t = chart.period(chart.e_min() + 1e-8).unwrap();
    let harmonic = 2.0 * PI / (-p.d2phi(p.x0())).sqrt();
    let rel = (t / harmonic - 1.0).abs();
    report(3, rel < 1e-4, format!("T(E_min + 1e-8) = {t:.10}, harmonic {harmonic:.10}, relative gap {rel:.3e} (< 1e-4)"))
}

fn exterior_limit() -> Outcome {
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let m = chart.e_min().abs();
    let mut ok = true;
    let mut parts = Vec::new();
    for f in [10.0, 100.0, 1000.0] {
        let e = f * m;
        let v = chart.period(e).unwrap() * (2.0 * e).sqrt();
        let lo = (1.0 + m / e).powf(-0.5);
        ok &= lo <= v && v <= 1.0;
        parts.push(format!("{f}|E_min|: {v:.8} in [{lo:.8}, 1]"));
    }
    report(4, ok, parts.join("; "))
}

fn dispersion_identity() -> Outcome {
    let start = Instant::now();
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let table = KernelTable::new(&chart, TableSettings { modes: 16, spatial_modes: 4, ..Default::default() }).unwrap();
    let trials = random_trials(20, 4, 0.5, 10.0, 2024).unwrap();
    let base = IdentitySettings::default();
    let mut worst = [0.0f64; 2];
    for (i, s) in [base, base.refined()].iter().enumerate() {
        for r in energy_identity(&chart, &table, &trials, s).unwrap() {
            worst[i] = worst[i].max(r.residual);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = worst[0] < 1e-6 && worst[1] < 1e-6 && secs < 120.0;
    report(5, passed, format!("20 trials, max residual {:.3e} / {:.3e} at two resolutions (< 1e-6), {secs:.1} s (< 120 s)", worst[0], worst[1]))
}

fn resonance_exactness() -> Outcome {
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [0.5, 1.0, 2.0] {
        let map = resonance_map(&chart, q, None, None).unwrap();
        let defect = map.max_period_defect(&chart).unwrap();
        let failures = map.containment_failures();
        ok &= defect < 1e-10 && failures.is_empty();
        parts.push(format!("q={q}: {} levels, defect {defect:.2e}, containment failures {}", map.levels.len(), failures.len()));
    }
    report(6, ok, format!("{} (defect < 1e-10)", parts.join("; ")))
}

fn contradiction_sweep() -> Outcome {
    let start = Instant::now();
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let coarse_table = KernelTable::new(&chart, TableSettings::default()).unwrap();
    let base = SweepSettings::default();
    let coarse = contradiction_constant(&chart, &coarse_table, &base).unwrap();
    let ts = TableSettings::default();
    let fine_table = KernelTable::new(&chart, TableSettings { root_cells: 2 * ts.root_cells, log_cells_per_unit: 2.0 * ts.log_cells_per_unit, ..ts }).unwrap();
    let fine = contradiction_constant(&chart, &fine_table, &SweepSettings { j: base.j.refined(), ..base.clone() }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let sups: Vec<f64> = coarse.levels.iter().map(|l| l.sup_r).collect();
    let finite = sups.iter().all(|s| s.is_finite());
    let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
    let below = *sups.last().unwrap() < 1.0;
    let drift = (fine.eps0 / coarse.eps0 - 1.0).abs();
    let passed = finite && decreasing && below && drift < 0.2 && secs < 600.0;
    report(
        7,
        passed,
        format!(
            "sup R = {:?} at eps = {:?}, eps0 = {:.4e} vs {:.4e} refined (drift {drift:.2e} < 20%), {secs:.1} s (< 600 s)",
            sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>(),
            base.eps,
            coarse.eps0,
            fine.eps0
        ),
    )
}

fn eigen_scan_diagnostic() -> Outcome {
    // The stated size (16 modes, 192 energies per region) is a dense complex matrix of
    // dimension 18432: 5.4 GB per copy. Only a reduced pair of resolutions is run.
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let mut rows = Vec::new();
    for per_region in [12, 24] {
        let start = Instant::now();
        let g = GridSettings { modes: 16, spatial_modes: 16, trapped_energies: per_region, exterior_energies: per_region, ..Default::default() };
        let grid = SpectralGrid::new(&chart, g).unwrap();
        let r = eigen_scan(&operator_matrix(&grid, OperatorOptions::default()).unwrap()).unwrap();
        rows.push((per_region, r.dim, r.max_abs_re, r.max_field_ratio, start.elapsed().as_secs_f64()));
    }
    let drop = rows[0].3 / rows[1].3;
    let detail = rows
        .iter()
        .map(|(n, dim, re, ratio, s)| format!("{n}/region (N={dim}): max|Re| {re:.2e}, max field ratio {ratio:.4e}, {s:.1} s"))
        .collect::<Vec<_>>()
        .join("; ");
    report(8, false, format!("not run at 192 energies/region (N=18432 exceeds memory); reduced runs {detail}; ratio drop {drop:.3}x (needs >= 2x)"))
}

fn landau_damping() -> Outcome {
    let start = Instant::now();
    let chart = ActionAngleChart::new(&standard(0.1, 0.05)).unwrap();
    let mut runs = Vec::new();
    for trapped in [128, 256] {
        let g = GridSettings { modes: 8, spatial_modes: 8, trapped_energies: trapped, exterior_energies: 64, exterior_cutoff: 0.002, ..Default::default() };
        let grid = SpectralGrid::new(&chart, g).unwrap();
        let rep = simulate(&grid, BumpData::default().field(&grid).unwrap(), &SimSettings { t_end: 200.0, dt: 0.1, coupling: true }).unwrap();
        runs.push((rep.running_avg_at(25.0).unwrap(), rep.running_avg_at(200.0).unwrap(), rep.recurrence_horizon));
    }
    let secs = start.elapsed().as_secs_f64();
    let (a25, a200, horizon) = runs[0];
    let agree = (runs[1].1 / a200 - 1.0).abs().max((runs[1].0 / a25 - 1.0).abs());
    let passed = a200 < 0.5 * a25 && agree < 0.05 && horizon > 200.0 && secs < 300.0;
    report(
        9,
        passed,
        format!(
            "avg(200)/avg(25) = {:.4} (< 0.5), refinement change {agree:.2e} (< 5%), recurrence horizon {horizon:.1} (> 200), {secs:.1} s (< 300 s)",
            a200 / a25
        ),
    )
}

fn scaling_round_trip() -> Outcome {
    let unit = SteadyState {
        density: Arc::new(|x, v| (-(0.5 * v * v) + 0.3 * (2.0 * PI * x).cos()).exp()),
        potential: Arc::new(|x| 0.2 * (PI * x).sin().powi(2)),
        potential_dd: Arc::new(|x| 0.4 * PI * PI * (2.0 * PI * x).cos()),
        ion_density: Arc::new(|x| 1.0 + 0.5 * (2.0 * PI * x).sin()),
        period: 1.0,
    };
    let mut worst_trip: f64 = 0.0;
    for (a, c, lambda) in [(0.0, 1.0, 20.0), (0.5, 0.5, 0.3), (3.0, 0.5, 7.0), (-1.0, 2.0, 0.05)] {
        let p = ScalingParams::new(a, c, lambda).unwrap();
        let back = to_unit_torus(&from_unit_torus(&unit, &p), &p);
        for i in 0..64 {
            let x = i as f64 / 64.0;
            let v = -4.0 + 8.0 * i as f64 / 63.0;
            let rel = |p: f64, q: f64| (p - q).abs() / q.abs();
            worst_trip = worst_trip
                .max(rel((back.density)(x, v), (unit.density)(x, v)))
                .max(rel((back.potential)(x + 0.01), (unit.potential)(x + 0.01)))
                .max(rel((back.ion_density)(x), (unit.ion_density)(x)));
        }
    }
    let eps = 0.05;
    let eq = Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), make_potential_family(PotentialShape::Sin2, 0.5).unwrap(), eps, 16).unwrap();
    let mapped = from_unit_torus(&SteadyState::from_equilibrium(&eq), &ScalingParams::from_eps(0.0, 1.0, eps).unwrap());
    let res = mapped.poisson_residual(1.0, 64).unwrap();
    report(10, worst_trip < 1e-13 && res < 1e-8, format!("round-trip max relative error {worst_trip:.2e} (< 1e-13), mapped Poisson residual {res:.2e} (< 1e-8)"))
}

#[test]
fn acceptance_criteria() {
    let outcomes = [
        steady_state_consistency(),
        ratio_suite(),
        elliptic_limit(),
        exterior_limit(),
        dispersion_identity(),
        resonance_exactness(),
        contradiction_sweep(),
        eigen_scan_diagnostic(),
        landau_damping(),
        scaling_round_trip(),
    ];
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert_eq!(failed, KNOWN_INFEASIBLE.to_vec(), "unexpected acceptance failures");
}
