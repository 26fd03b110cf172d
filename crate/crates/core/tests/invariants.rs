//! Property tests of structural invariants across modules.

use bgk::action_angle::ActionAngleChart;
use bgk::cli::RunConfig;
use bgk::equilibria::{make_boltzmannian, make_potential_family, Equilibrium, PotentialShape};
use bgk::linearized_dynamics::{embed, full_norm, project_out_kernel, SimState, Stepper};
use bgk::spectral_analysis::{GridSettings, SpectralField, SpectralGrid};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn chart() -> &'static ActionAngleChart {
    static CHART: OnceLock<ActionAngleChart> = OnceLock::new();
    CHART.get_or_init(|| {
        let eq = Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), make_potential_family(PotentialShape::Sin2, 0.1).unwrap(), 0.2, 16)
            .unwrap();
        ActionAngleChart::new(&eq).unwrap()
    })
}

fn grid() -> &'static SpectralGrid {
    static GRID: OnceLock<SpectralGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let s = GridSettings { modes: 3, spatial_modes: 3, trapped_energies: 12, exterior_energies: 12, exterior_cutoff: 0.05, ..Default::default() };
        SpectralGrid::new(chart(), s).unwrap()
    })
}

fn real_field(g: &SpectralGrid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::from_fn(g, |_, _| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)));
    for j in 0..g.nodes().len() {
        for l in 1..=g.modes() as i32 {
            f.coeffs[g.index(j, -l)] = f.coeffs[g.index(j, l)].conj();
        }
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn period_is_monotone_on_each_side(u in 0.01..0.99f64, w in 0.01..0.99f64) {
        let c = chart();
        let (a, b) = (u.min(w), u.max(w));
        prop_assume!(b - a > 1e-3);
        let m = c.e_min();
        prop_assert!(c.period(m * (1.0 - a))? < c.period(m * (1.0 - b))?);
        let (ea, eb) = (-m * a * 10.0, -m * b * 10.0);
        prop_assert!(c.period(ea)? > c.period(eb)?);
    }

    #[test]
    fn angle_inverts_the_chart(theta in 0.0..1.0f64, r in 0.02..0.98f64) {
        let c = chart();
        let e = c.e_min() * (1.0 - r);
        let (x, v) = c.from_action_angle(theta, e)?;
        prop_assert!((c.equilibrium().energy(x, v) - e).abs() < 1e-10 * e.abs().max(1e-3));
        let back = c.angle(x, v)?;
        let d = (back - theta).rem_euclid(1.0);
        prop_assert!(d.min(1.0 - d) < 1e-8, "theta {} -> {}", theta, back);
    }

    #[test]
    fn quadratic_form_splits_for_monotone_profiles(seed in any::<u64>()) {
        let g = grid();
        let f = real_field(g, seed);
        let q = g.quadratic_form(&f)?;
        let s = g.quadratic_form_split(&f)?;
        prop_assert!((q - s).abs() <= 1e-8 * s.abs());
    }

    #[test]
    fn projection_is_idempotent_and_contracts(seed in any::<u64>(), zero in -2.0..2.0f64) {
        let g = grid();
        let f = real_field(g, seed);
        let mut full = embed(g, &f);
        let width = 2 * g.modes() + 1;
        for j in 0..g.nodes().len() {
            full[j * width + g.modes()] = Complex64::new(zero * (j as f64).cos(), 0.0);
        }
        let p = project_out_kernel(g, &full)?;
        prop_assert_eq!(&p, &f);
        prop_assert_eq!(&project_out_kernel(g, &embed(g, &p))?, &p);
        prop_assert!(g.hilbert_norm(&p)? <= full_norm(g, &full) * (1.0 + 1e-14));
    }

    #[test]
    fn steps_are_reversible(seed in any::<u64>(), dt in 0.01..0.5f64) {
        let g = grid();
        let stepper = Stepper::new(g, true);
        let f = real_field(g, seed);
        let mut s = SimState::new(g, f.clone())?;
        for _ in 0..4 {
            stepper.step(&mut s, dt)?;
        }
        for _ in 0..4 {
            stepper.step(&mut s, -dt)?;
        }
        let err = s.field.coeffs.iter().zip(&f.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{:e}", err);
    }

    #[test]
    fn free_transport_is_an_isometry(seed in any::<u64>(), dt in -3.0..3.0f64) {
        prop_assume!(dt.abs() > 1e-3);
        let g = grid();
        let f = real_field(g, seed);
        let mut s = SimState::new(g, f.clone())?;
        Stepper::new(g, false).step(&mut s, dt)?;
        let (a, b) = (g.hilbert_norm(&s.field)?, g.hilbert_norm(&f)?);
        prop_assert!((a - b).abs() < 1e-13 * b);
    }

    #[test]
    fn config_survives_a_toml_round_trip(eps in 0.01..0.5f64, amp in 0.01..0.12f64, seed in any::<u64>()) {
        let mut c = RunConfig { seed, ..Default::default() };
        c.equilibrium.eps = eps;
        c.equilibrium.potential.amplitude = amp;
        let back = RunConfig::from_toml(&toml::to_string(&c).unwrap())?;
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert_eq!(back, c);
    }
}
