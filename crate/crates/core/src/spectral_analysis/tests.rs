use super::grid::orbit_kernel;
use super::*;
use crate::action_angle::{ActionAngleChart, ChartSettings};
use crate::equilibria::{make_boltzmannian, make_even_nonmonotone, make_potential_family, make_schamel, Equilibrium, MicroProfile, PotentialShape};
use crate::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn chart_with(profile: MicroProfile, a: f64, eps: f64) -> ActionAngleChart {
    let eq = Equilibrium::with_grid(profile, make_potential_family(PotentialShape::Sin2, a).unwrap(), eps, 16).unwrap();
    ActionAngleChart::with_settings(&eq, ChartSettings::default()).unwrap()
}

fn chart(a: f64, eps: f64) -> ActionAngleChart {
    chart_with(make_boltzmannian(1.0).unwrap(), a, eps)
}

fn small_grid(c: &ActionAngleChart) -> SpectralGrid {
    let settings = GridSettings { modes: 4, spatial_modes: 4, trapped_energies: 16, exterior_energies: 16, ..Default::default() };
    SpectralGrid::new(c, settings).unwrap()
}

fn random_field(grid: &SpectralGrid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_fn(grid, |_, l| {
        Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)) / (l * l) as f64
    })
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let s: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (d / s).sqrt()
}

#[test]
fn table_matches_direct_orbit_kernel() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, ..Default::default() }).unwrap();
    let mut planner = FftPlanner::new();
    let e_min = c.e_min();
    for &e in &[e_min * 0.999, e_min * 0.9, e_min * 0.5, e_min * 0.3, e_min * 0.01, -1e-6, -1e-10, 1e-10, 1e-5, 0.01, 0.3, 3.0, 30.0] {
        let (v, dv) = orbit_kernel(&c, e, 16, 8, 512, true, &mut planner).unwrap();
        let dv = dv.unwrap();
        let s = table.sample(e).unwrap();
        let mut scale: f64 = 0.0;
        let (mut ev, mut ed): (f64, f64) = (0.0, 0.0);
        for k in 1..=8 {
            for l in -16..=16 {
                let i = (k as usize - 1) * 33 + (l + 16) as usize;
                let (a, da) = s.kernel(k, l);
                ev = ev.max((a - v[i]).norm());
                ed = ed.max((da - dv[i]).norm());
                scale = scale.max(dv[i].norm());
                let (b, db) = s.kernel(-k, -l);
                assert!((b - a.conj()).norm() < 1e-15 && (db - da.conj()).norm() < 1e-15 * scale.max(1.0));
            }
        }
        assert!(ev < 1e-6, "V at {e:e}: {ev:e}");
        assert!(ed < 1e-4 * scale, "dV/dE at {e:e}: {ed:e} (scale {scale:e})");
        let tp = s.period();
        let tc = c.period_all(e).unwrap();
        assert!((tp[0] / tc[0] - 1.0).abs() < 1e-10, "T at {e:e}");
        assert!((tp[1] / tc[1] - 1.0).abs() < 1e-9, "T' at {e:e}");
        assert!((tp[2] / tc[2] - 1.0).abs() < 1e-7, "T'' at {e:e}");
    }
    assert!(table.sample(e_min - 1.0).is_err());
}

#[test]
fn poisson_single_harmonic() {
    let n = 64;
    let eps = 0.3;
    let rho: Vec<f64> = (0..n).map(|i| (2.0 * PI * 3.0 * i as f64 / n as f64).cos()).collect();
    let phi = solve_poisson(&rho, eps).unwrap();
    for (i, p) in phi.iter().enumerate() {
        let want = -eps * (2.0 * PI * 3.0 * i as f64 / n as f64).cos() / (36.0 * PI * PI);
        assert!((p - want).abs() < 1e-15);
    }
    assert!(solve_poisson(&vec![1.0; n], eps).is_err());
}

#[test]
fn operator_matrix_matches_matrix_free_operator() {
    let c = chart(0.1, 0.2);
    let grid = small_grid(&c);
    let op = operator_matrix(&grid, OperatorOptions::default()).unwrap();
    let f = random_field(&grid, 3);
    let h = op.weighted(&grid, &f).unwrap();
    let mh: Vec<Complex64> = (0..op.dim()).map(|i| (0..op.dim()).map(|j| op.m[(i, j)] * h[j]).sum()).collect();
    let want = op.weighted(&grid, &grid.apply_operator(&f).unwrap()).unwrap();
    assert!(rel_err(&mh, &want) < 1e-12);
    let lh: Vec<Complex64> = (0..op.dim()).map(|i| (0..op.dim()).map(|j| op.l[(i, j)] * h[j]).sum()).collect();
    let q: f64 = h.iter().zip(&lh).map(|(a, b)| (a.conj() * b).re).sum();
    let qf = grid.quadratic_form(&f).unwrap();
    assert!((q / qf - 1.0).abs() < 1e-12);
    assert!((grid.quadratic_form_split(&f).unwrap() / qf - 1.0).abs() < 1e-12);
    let ratio = op.field_ratio(&h);
    let direct = grid.field_from_g(&f).unwrap().force_l2() / grid.hilbert_norm(&f).unwrap();
    assert!((ratio / direct - 1.0).abs() < 1e-12);
}

#[test]
fn monotone_operator_is_skew_adjoint_in_energy_product() {
    let c = chart(0.1, 0.2);
    let grid = small_grid(&c);
    let op = operator_matrix(&grid, OperatorOptions::default()).unwrap();
    assert!(op.monotone);
    let rep = eigen_scan(&op).unwrap();
    assert!(rep.skew_defect.unwrap() < 1e-10, "{:?}", rep.skew_defect);
    let norm = op.m.norm_l2();
    assert!(rep.max_abs_re < 1e-10 * norm, "max |Re| = {:e}", rep.max_abs_re);
}

#[test]
fn uncoupled_spectrum_is_transport_frequencies() {
    let c = chart(0.1, 0.2);
    let grid = small_grid(&c);
    let op = operator_matrix(&grid, OperatorOptions { coupling: false, include_zero_mode: false }).unwrap();
    let rep = eigen_scan(&op).unwrap();
    assert_eq!(rep.max_abs_re, 0.0);
    let mut got: Vec<f64> = rep.eigenvalues.iter().map(|z| z.1).collect();
    let mut want: Vec<f64> = op.transport.iter().map(|z| z.im).collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn zero_mode_is_in_the_kernel() {
    let c = chart(0.1, 0.2);
    let grid = small_grid(&c);
    let op = operator_matrix(&grid, OperatorOptions { coupling: true, include_zero_mode: true }).unwrap();
    let rep = eigen_scan(&op).unwrap();
    let zeros = rep.eigenvalues.iter().filter(|z| z.0.hypot(z.1) < 1e-9).count();
    assert_eq!(zeros, grid.nodes().len());
    assert!(rep.skew_defect.is_none());
}

#[test]
fn force_bound_fit_is_bounded_by_eigen_ratio_scale() {
    let c = chart(0.1, 0.2);
    let grid = small_grid(&c);
    let a = force_bound_fit(&grid, 8, 64, 1).unwrap();
    let b = force_bound_fit(&grid, 8, 64, 1).unwrap();
    assert_eq!(a, b);
    assert!(a.is_finite() && a > 0.0);
}

#[test]
fn dispersion_relation_is_satisfied_and_resonances_flagged() {
    let c = chart(0.1, 0.2);
    let grid = small_grid(&c);
    let spatial = [Complex64::new(0.1, -0.2), Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.1, -0.2).conj()];
    let mut sp = vec![Complex64::new(0.0, 0.0); 5];
    sp[0] = spatial[3];
    sp[1] = spatial[2];
    sp[3] = spatial[2];
    sp[4] = spatial[0];
    let phi = grid.phi_hat_from_spatial(&sp);
    let q = 2.345;
    let d = grid.ghat_from_phi(&phi, q, DEFAULT_RESONANCE_WIDTH, 1e-12).unwrap();
    assert!(d.resonant.is_empty());
    assert!(grid.dispersion_residual(&d.field, &phi, q) < 1e-10);

    let j = grid.nodes().iter().position(|n| n.sheet == Sheet::Trapped).unwrap();
    let q_res = grid.nodes()[j].period / 2.0;
    let d = grid.ghat_from_phi(&phi, q_res, DEFAULT_RESONANCE_WIDTH, 1e-12).unwrap();
    assert!(d.resonant.iter().any(|r| r.node == j && r.ell == 2));
    assert_eq!(d.has_violation(), d.resonant.iter().any(|r| r.phi_abs > 1e-12));
    assert!(grid.dispersion_residual(&d.field, &phi, q_res) < 1e-10);
}

#[test]
fn resonance_map_is_exact_and_contained() {
    let c = chart(0.1, 0.05);
    for q in [0.5, 1.0, 2.0] {
        let m = resonance_map(&c, q, None, None).unwrap();
        assert!(m.max_period_defect(&c).unwrap() < 1e-10, "q = {q}");
        assert!(m.containment_failures().is_empty(), "q = {q}: {:?}", m.containment_failures());
        assert!(m.delta > 0.0 && m.delta < m.delta_bound);
        let mut csv = Vec::new();
        m.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), m.levels.len() + 1);
    }
    assert!(resonance_map(&c, -1.0, None, None).is_err());
    assert!(resonance_map(&c, 1.0, Some(2.0), None).is_err());
}

#[test]
fn energy_identity_holds_at_two_resolutions() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, spatial_modes: 4, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials: Vec<(TrialPotential, f64)> = [0.7, 2.3, 6.1].iter().map(|&q| (TrialPotential::random(4, &mut rng), q)).collect();
    let coarse = IdentitySettings::default();
    for settings in [coarse, coarse.refined()] {
        for r in energy_identity(&c, &table, &trials, &settings).unwrap() {
            assert!(r.residual < 1e-6, "q = {}: {r:?}", r.q);
            assert!(r.lhs.abs() > 0.0);
        }
    }
}

/// Potentials whose angle coefficients vanish at every resonance `T = l q`.
struct VanishingAtResonance;

impl ModeSource for VanishingAtResonance {
    fn count(&self) -> usize {
        2
    }

    fn eval(&self, s: &TableSample<'_>, ell: i32, q: f64, out: &mut [ModePair]) {
        let [t, t1, _] = s.period();
        let e = s.energy;
        let l2 = (ell * ell) as f64;
        let lq = ell as f64 * q;
        for (i, o) in out.iter_mut().enumerate() {
            let a = 1.0 + i as f64;
            let psi = (-a * e * e).exp();
            let dpsi = -2.0 * a * e * psi;
            let plus = Complex64::new((t - lq) * psi / l2, 0.0);
            let dplus = Complex64::new((t1 * psi + (t - lq) * dpsi) / l2, 0.0);
            let minus = Complex64::new(0.0, 0.5) * plus;
            let dminus = Complex64::new(0.0, 0.5) * dplus;
            *o = ModePair { plus, dplus, minus, dminus };
        }
    }
}

#[test]
fn window_integration_by_parts_matches_direct_integral() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, spatial_modes: 2, ..Default::default() }).unwrap();
    let profile = c.equilibrium().profile();
    for q in [0.8, 3.0] {
        let rmap = resonance_map(&c, q, None, Some(8)).unwrap();
        let plan = JPlan::new(&table, &rmap, &VanishingAtResonance, JCase::Monotone, &JSettings::default()).unwrap();
        let vals = plan.evaluate(profile, 0.05).unwrap();
        let direct = plan.positive_part_direct(profile, 0.05).unwrap();
        for (v, d) in vals.iter().zip(&direct) {
            let by_parts = v.nr + v.trap_exact + v.ext_exact;
            assert!((by_parts / d - 1.0).abs() < 1e-6, "q = {q}: {by_parts} vs {d}");
        }
    }
}

#[test]
fn majorants_dominate_window_terms() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, spatial_modes: 4, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials: Vec<TrialPotential> = (0..4).map(|_| TrialPotential::random(4, &mut rng)).collect();
    for q in [0.8, 3.0] {
        let vals = j_functionals(&c, &table, &trials, q, None, 0.05, &JSettings::default()).unwrap();
        for v in vals {
            assert!(v.nr > 0.0 && v.trap.is_finite() && v.ext.is_finite());
        }
    }
}

#[test]
fn sweep_is_reproducible_and_scales_with_eps() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 24, spatial_modes: 3, ..Default::default() }).unwrap();
    let settings = SweepSettings { q_points: 6, trials: 3, trial_modes: 3, ..Default::default() };
    let a = contradiction_constant(&c, &table, &settings).unwrap();
    let b = contradiction_constant(&c, &table, &settings).unwrap();
    assert_eq!(a, b);
    assert!(a.c_star > 0.0 && a.c_star.is_finite());
    assert!((a.eps0 * a.c_star - 1.0).abs() < 1e-15);
    for s in &a.slopes {
        assert!(*s > 0.5, "slopes {:?}", a.slopes);
    }
}

#[test]
fn increasing_profile_uses_reflected_functionals() {
    let c = chart_with(make_even_nonmonotone(1).unwrap(), 0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, spatial_modes: 2, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trials: Vec<TrialPotential> = (0..2).map(|_| TrialPotential::random(2, &mut rng)).collect();
    let vals = j_functionals(&c, &table, &trials, 1.5, None, 0.05, &JSettings::default()).unwrap();
    assert!(vals.iter().all(|v| v.total().is_finite()));
}

#[test]
fn branch_dependent_profile_is_unsupported() {
    let c = chart_with(make_schamel(0.5, 1.0, true).unwrap(), 0.1, 0.05);
    assert!(matches!(JCase::of_profile(c.equilibrium().profile()), Err(Error::Unsupported(_))));
}

#[test]
fn hilbert_norm_matches_phase_space_quadrature() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 4, spatial_modes: 1, ..Default::default() }).unwrap();
    let settings = IdentitySettings { modes: 3, cutoff: IdentityCutoff { edge: 0.1, exterior_max: 3.0, gap: 0.1 }, ..Default::default() };
    let e_min = c.e_min();
    let cut = settings.cutoff;
    let amp = |e: f64, sheet: Sheet, l: i32| -> Complex64 {
        let s = match sheet {
            Sheet::Trapped => 1.0,
            Sheet::Up => 0.5,
            Sheet::Down => -0.3,
        };
        Complex64::new(s * (1.0 + 3.0 * e), 0.2 * l as f64) / (l * l) as f64 * cut.energy_factor(e, e_min)
    };
    let ells: Vec<i32> = (-3..=-1).chain(1..=3).collect();
    let (coef, phase) = plancherel_check(&c, &table, &settings, |e, sheet, out| {
        for (o, &l) in out.iter_mut().zip(&ells) {
            *o = amp(e, sheet, l);
        }
        Ok(())
    })
    .unwrap();
    assert!((coef / phase - 1.0).abs() < 1e-6, "{coef} vs {phase}");

    let grid = SpectralGrid::new(
        &c,
        GridSettings { modes: 3, spatial_modes: 1, trapped_energies: 512, exterior_energies: 2048, exterior_cutoff: 0.01, ..Default::default() },
    )
    .unwrap();
    let f = SpectralField::from_fn(&grid, |j, l| {
        let n = &grid.nodes()[j];
        amp(n.energy, n.sheet, l)
    });
    let h = grid.hilbert_norm(&f).unwrap();
    assert!((h / phase - 1.0).abs() < 1e-6, "{h} vs {phase}");
}

#[test]
fn energy_identity_is_invariant_under_q_reflection() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, spatial_modes: 3, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = TrialPotential::random(3, &mut rng);
    let settings = IdentitySettings { x_points: 16, v_panels: 8, ..Default::default() };
    let r = energy_identity(&c, &table, &[(t.clone(), 1.7), (t.clone(), -1.7)], &settings).unwrap();
    assert!((r[0].rhs / r[1].rhs - 1.0).abs() < 1e-12);
    let zero = TrialPotential::from_positive_modes(&[Complex64::new(0.0, 0.0)]);
    let r = energy_identity(&c, &table, &[(zero, 1.0)], &settings).unwrap();
    assert_eq!((r[0].lhs, r[0].rhs, r[0].residual), (0.0, 0.0, 0.0));
}

#[test]
fn nonresonant_term_scales_at_most_like_inverse_delta() {
    let c = chart(0.1, 0.05);
    let table = KernelTable::new(&c, TableSettings { modes: 16, spatial_modes: 3, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials: Vec<TrialPotential> = (0..3).map(|_| TrialPotential::random(3, &mut rng)).collect();
    let bound = admissible_delta_bound(&c).unwrap();
    for q in [0.6, 2.5] {
        let a = j_functionals(&c, &table, &trials, q, Some(0.5 * bound), 0.05, &JSettings::default()).unwrap();
        let b = j_functionals(&c, &table, &trials, q, Some(0.25 * bound), 0.05, &JSettings::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(y.nr <= 2.0 * x.nr * 1.05, "q = {q}: {} -> {}", x.nr, y.nr);
        }
    }
}
