use super::{Branch, Equilibrium, MicroProfile, MonotonicityClass};
use crate::action_angle::{ActionAngleChart, ChartSettings};
use crate::error::Result;
use crate::quad;
use serde::{Deserialize, Serialize};

/// Sampling resolution of the assumption scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSettings {
    pub x_points: usize,
    pub e_points: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self { x_points: 2048, e_points: 4096 }
    }
}

/// Outcome of one sampled assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// Sample point (position or energy) witnessing a failure.
    pub witness: Option<f64>,
    pub detail: String,
    /// Estimated constant or extremal value, when meaningful.
    pub value: Option<f64>,
}

impl AssumptionCheck {
    fn new(name: &str, passed: bool, witness: Option<f64>, detail: impl Into<String>, value: Option<f64>) -> Self {
        Self { name: name.into(), passed, witness, detail: detail.into(), value }
    }
}

/// Regularity of the profile at the separatrix energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    Regular,
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub regularity: Regularity,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// `int_0^inf |mu'(e)| sqrt(e) de` on one branch.
pub fn tail_integral(profile: &MicroProfile, branch: Branch) -> Result<f64> {
    // e = w^2 on [0, 1] keeps the integrand bounded for square-root singular profiles
    let head = quad::adaptive(|w| 2.0 * w * w * profile.dmu(w * w, branch).abs(), 0.0, 1.0, 1e-300, 1e-13)?;
    let tail = quad::exp_sinh(|e| profile.dmu(e, branch).abs() * e.sqrt(), 1.0, 1.0, 1e-12)?;
    Ok(head + tail)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Positive sample energies `(0, 1e6]` and negative ones inside `(h, 0)`.
fn energy_samples(profile: &MicroProfile, n: usize) -> (Vec<f64>, Vec<f64>) {
    let half = (n / 2).max(8);
    let pos = log_grid(1e-12, 1e6, half);
    let reach = if profile.h().is_finite() { profile.h().abs() * (1.0 - 1e-6) } else { 50.0 };
    let neg = log_grid(1e-12, reach, half).into_iter().map(|r| -r).collect();
    (pos, neg)
}

/// Regular if `|mu'(e)| sqrt(e)` falls below `1e-3` somewhere in `e = 1e-6 .. 1e-12`.
fn regularity(profile: &MicroProfile) -> Regularity {
    let probes = [1e-6, 1e-8, 1e-10, 1e-12];
    let irregular = profile
        .exterior_branches()
        .iter()
        .any(|&b| probes.iter().all(|&e| profile.dmu(e, b).abs() * e.sqrt() > 1e-3));
    if irregular {
        Regularity::Irregular
    } else {
        Regularity::Regular
    }
}

fn sup_of(samples: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    samples.fold((0.0, f64::NAN), |acc, (e, q)| if !(q <= acc.0) { (q, e) } else { acc })
}

fn profile_checks(profile: &MicroProfile, scan: ScanSettings) -> Vec<AssumptionCheck> {
    let (pos, neg) = energy_samples(profile, scan.e_points);
    let branches = profile.exterior_branches();
    let mut out = Vec::new();

    let bad = neg
        .iter()
        .map(|&e| (e, Branch::Up))
        .chain(pos.iter().flat_map(|&e| branches.iter().map(move |&b| (e, b))))
        .find(|&(e, b)| {
            let m = profile.mu(e, b);
            !(m > 0.0 && m.is_finite()) && !(m == 0.0 && e > 1.0)
        });
    out.push(AssumptionCheck::new(
        "mu_positive",
        bad.is_none(),
        bad.map(|p| p.0),
        "mu > 0 on sampled energies",
        None,
    ));

    // Hoelder-1/2 quotient as e -> 0+; a blow-up shows as growth between the last decades
    let mut holder = (0.0f64, f64::NAN);
    let mut growth = 1.0f64;
    for &b in branches {
        let m0 = profile.mu(1e-300, b);
        let q = |e: f64| (profile.mu(e, b) - m0).abs() / e.sqrt();
        let s = sup_of(pos.iter().filter(|&&e| e <= 1.0).map(|&e| (e, q(e))));
        if !(s.0 <= holder.0) {
            holder = s;
        }
        growth = growth.max(q(1e-12) / q(1e-8).max(1e-300));
    }
    let ok = holder.0.is_finite() && growth < 10.0;
    out.push(AssumptionCheck::new(
        "mu1_holder",
        ok,
        (!ok).then_some(holder.1),
        "sup |mu(e) - mu(0+)| / sqrt(e) over (0, 1]",
        Some(holder.0),
    ));

    let reg = regularity(profile);
    let jump = branches
        .iter()
        .map(|&b| (profile.dmu(1e-12, b) - profile.dmu(-1e-12, Branch::Up)).abs())
        .fold(0.0, f64::max);
    let c2 = reg == Regularity::Regular && jump < 1e-4;
    out.push(AssumptionCheck::new(
        "mu_c2_at_separatrix",
        c2,
        (!c2).then_some(0.0),
        format!("derivative jump across e = 0 is {jump:e}"),
        Some(jump),
    ));

    let mut c1 = (0.0f64, f64::NAN);
    let mut c2b = (0.0f64, f64::NAN);
    for &b in branches {
        let s1 = sup_of(pos.iter().filter(|&&e| e < 1.0).map(|&e| (e, profile.dmu(e, b).abs() * e.sqrt())));
        let s2 = sup_of(pos.iter().filter(|&&e| e < 1.0).map(|&e| (e, profile.d2mu(e, b).abs() * e.powf(1.5))));
        if !(s1.0 <= c1.0) {
            c1 = s1;
        }
        if !(s2.0 <= c2b.0) {
            c2b = s2;
        }
    }
    let ok = c1.0.is_finite() && c2b.0.is_finite();
    out.push(AssumptionCheck::new(
        "mu2_blowup",
        ok,
        (!ok).then_some(if c1.0.is_finite() { c2b.1 } else { c1.1 }),
        "C >= |mu'| e^(1/2) and |mu''| e^(3/2) on (0, 1)",
        Some(c1.0.max(c2b.0)),
    ));

    let mut tail_c = (0.0f64, f64::NAN);
    let mut tail_int = 0.0f64;
    let mut tail_ok = true;
    for &b in branches {
        let s1 = sup_of(pos.iter().filter(|&&e| e >= 1.0).map(|&e| (e, profile.dmu(e, b).abs() * (1.0 + e))));
        let s2 = sup_of(pos.iter().filter(|&&e| e >= 1.0).map(|&e| (e, profile.d2mu(e, b).abs() * (1.0 + e * e))));
        for s in [s1, s2] {
            if !(s.0 <= tail_c.0) {
                tail_c = s;
            }
        }
        match tail_integral(profile, b) {
            Ok(v) if v.is_finite() => tail_int += v,
            _ => tail_ok = false,
        }
    }
    let ok = tail_ok && tail_c.0.is_finite();
    out.push(AssumptionCheck::new(
        "mu3_tail",
        ok,
        (!ok).then_some(tail_c.1),
        format!("tail constant {:e}, int |mu'| sqrt(e) de = {tail_int:e}", tail_c.0),
        Some(tail_int),
    ));

    out.push(monotonicity_check(profile, &pos, &neg));
    out
}

/// Sign of `mu'` where `mu` is representable; zero derivatives from underflow are ignored.
fn strict_sign(profile: &MicroProfile, e: f64, b: Branch) -> f64 {
    let d = profile.dmu(e, b);
    if profile.mu(e, b) < 1e-250 && d == 0.0 {
        f64::NAN
    } else {
        d
    }
}

fn monotonicity_check(profile: &MicroProfile, pos: &[f64], neg: &[f64]) -> AssumptionCheck {
    let branches = profile.exterior_branches();
    let find = |es: &[f64], b: Branch, want: f64| es.iter().copied().find(|&e| strict_sign(profile, e, b) * want <= 0.0);
    let (witness, detail) = match profile.class() {
        MonotonicityClass::Decreasing => {
            let w = find(neg, Branch::Up, -1.0).or_else(|| branches.iter().find_map(|&b| find(pos, b, -1.0)));
            (w, "mu strictly decreasing")
        }
        MonotonicityClass::IncreasingThenDecreasing => {
            let w = find(neg, Branch::Up, 1.0).or_else(|| branches.iter().find_map(|&b| find(pos, b, -1.0)));
            (w, "mu increasing on e < 0, decreasing on e > 0")
        }
        MonotonicityClass::PerBranch => {
            let inc = find(neg, Branch::Up, 1.0);
            let dec = find(neg, Branch::Up, -1.0);
            let mut w = if inc.is_some() && dec.is_some() { inc } else { None };
            for &b in branches {
                // strictly decreasing or exactly one interior maximum
                let signs: Vec<(f64, f64)> = pos
                    .iter()
                    .map(|&e| (e, strict_sign(profile, e, b)))
                    .filter(|p| !p.1.is_nan())
                    .collect();
                let changes: Vec<f64> = signs.windows(2).filter(|p| p[0].1 > 0.0 && p[1].1 <= 0.0).map(|p| p[1].0).collect();
                let rises = signs.windows(2).find(|p| p[0].1 <= 0.0 && p[1].1 > 0.0).map(|p| p[1].0);
                if changes.len() > 1 || rises.is_some() {
                    w = w.or(rises).or(changes.get(1).copied());
                }
            }
            (w, "mu_- strictly monotone; each mu_+ branch decreasing or with one maximum")
        }
    };
    AssumptionCheck::new("mu4_monotone", witness.is_none(), witness, detail, None)
}

fn potential_checks(eq: &Equilibrium, scan: ScanSettings) -> Vec<AssumptionCheck> {
    let pot = eq.potential();
    let n = scan.x_points;
    let mut out = Vec::new();

    let w1 = pot.unique_maximum_witness(n);
    let dom = eq.eps() * eq.eps() * eq.e_min() > eq.profile().h();
    out.push(AssumptionCheck::new(
        "phi1",
        w1.is_none() && dom,
        w1.as_ref().and_then(|w| witness_from(w)).or((!dom).then_some(pot.x0())),
        w1.unwrap_or_else(|| format!("unique maximum {:e} at x0 = {}", pot.phi_max(), pot.x0())),
        Some(pot.phi_max()),
    ));

    let w2 = pot.shape_witness(n);
    out.push(AssumptionCheck::new(
        "phi2",
        w2.is_none(),
        w2.as_ref().and_then(|w| witness_from(w)),
        w2.unwrap_or_else(|| "monotone sides, convex ends, concave top".into()),
        None,
    ));

    let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let bound = eq
        .profile()
        .exterior_branches()
        .iter()
        .map(|&b| quad::exp_sinh(|v| eq.profile().mu(0.5 * v * v, b), 0.0, 1.0, 1e-12))
        .collect::<Result<Vec<_>>>();
    let check = match bound {
        Ok(v) => {
            let total = if v.len() == 1 { 2.0 * v[0] } else { v.iter().sum() };
            let (worst, at) = xs.iter().map(|&x| (pot.d2phi(x), x)).fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
            AssumptionCheck::new(
                "phi3",
                worst < total,
                (worst >= total).then_some(at),
                format!("max phi'' = {worst:e} against int mu(v^2/2) dv = {total:e}"),
                Some(total - worst),
            )
        }
        Err(e) => AssumptionCheck::new("phi3", false, None, e.to_string(), None),
    };
    out.push(check);

    let x0 = pot.x0();
    let star = xs[1..n]
        .iter()
        .copied()
        .filter(|&x| (x - x0).abs() > 1.0 / n as f64)
        .map(|x| (x, pot.dphi(x).powi(2) + 2.0 * pot.depth(x) * pot.d2phi(x)))
        .find(|p| !(p.1 > 0.0));
    out.push(AssumptionCheck::new(
        "phi4_star",
        star.is_none(),
        star.map(|p| p.0),
        match star {
            Some((x, v)) => format!("phi'^2 + 2 (phi(x0) - phi) phi'' = {v:e} at x = {x}"),
            None => "phi'^2 + 2 (phi(x0) - phi) phi'' > 0 away from x0".into(),
        },
        None,
    ));

    out.push(period_monotonicity(eq));

    let (rmin, at) = eq.min_rho_plus();
    out.push(AssumptionCheck::new(
        "rho_plus_positive",
        rmin > 0.0,
        (rmin <= 0.0).then_some(at),
        format!("min rho_plus = {rmin:e}"),
        Some(rmin),
    ));

    out.push(match eq.poisson_residual() {
        Ok(r) => AssumptionCheck::new("poisson_consistency", r < 1e-8, None, format!("max residual {r:e}"), Some(r)),
        Err(e) => AssumptionCheck::new("poisson_consistency", false, None, e.to_string(), None),
    });
    out
}

/// Sample `T' > 0` across the trapped energies.
fn period_monotonicity(eq: &Equilibrium) -> AssumptionCheck {
    if eq.potential().unique_maximum_witness(256).is_some() || eq.potential().shape_witness(256).is_some() {
        return AssumptionCheck::new("phi4_period", false, None, "chart unavailable: phi1/phi2 fail", None);
    }
    let chart = match ActionAngleChart::with_settings(eq, ChartSettings { table_points: 0, ..Default::default() }) {
        Ok(c) => c,
        Err(e) => return AssumptionCheck::new("phi4_period", false, None, e.to_string(), None),
    };
    let em = eq.e_min();
    let mut worst = (f64::INFINITY, f64::NAN);
    for s in log_grid(1e-6, 1.0 - 1e-6, 48).into_iter().chain(log_grid(1e-6, 0.5, 24).into_iter().map(|s| 1.0 - s)) {
        let e = em * (1.0 - s);
        match chart.period_deriv(e) {
            Ok(d) if d < worst.0 => worst = (d, e),
            Ok(_) => {}
            Err(err) => return AssumptionCheck::new("phi4_period", false, Some(e), err.to_string(), None),
        }
    }
    let ok = worst.0 > 0.0;
    AssumptionCheck::new(
        "phi4_period",
        ok,
        (!ok).then_some(worst.1),
        format!("min T' on trapped energies = {:e}", worst.0),
        Some(worst.0),
    )
}

fn witness_from(msg: &str) -> Option<f64> {
    let start = msg.find("x=")? + 2;
    let rest = &msg[start..];
    let rest = rest.trim_start_matches("Some(");
    let end = rest.find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e')).unwrap_or(rest.len());
    rest[..end].parse().ok()
}

/// Samples every structural assumption on the profile and potential.
pub fn verify_assumptions(eq: &Equilibrium) -> AssumptionReport {
    verify_assumptions_with(eq, ScanSettings::default())
}

pub fn verify_assumptions_with(eq: &Equilibrium, scan: ScanSettings) -> AssumptionReport {
    let mut checks = profile_checks(eq.profile(), scan);
    checks.extend(potential_checks(eq, scan));
    AssumptionReport { checks, regularity: regularity(eq.profile()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::*;

    fn small_scan() -> ScanSettings {
        ScanSettings { x_points: 512, e_points: 1024 }
    }

    #[test]
    fn boltzmann_tail_integral() {
        let v = tail_integral(&make_boltzmannian(1.0).unwrap(), Branch::Up).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn boltzmann_small_amplitude_passes_everything() {
        let eq = Equilibrium::with_grid(
            make_boltzmannian(1.0).unwrap(),
            make_potential_family(PotentialShape::Sin2, 0.005).unwrap(),
            0.05,
            128,
        )
        .unwrap();
        let r = verify_assumptions_with(&eq, small_scan());
        assert!(r.all_passed(), "{:?}", r.failed());
        assert_eq!(r.regularity, Regularity::Regular);
    }

    #[test]
    fn schamel_is_holder_but_irregular() {
        let eq = Equilibrium::with_grid(
            make_schamel(1.0, 1.0, false).unwrap(),
            make_potential_family(PotentialShape::Sin2, 0.1).unwrap(),
            0.1,
            16,
        )
        .unwrap();
        let r = verify_assumptions_with(&eq, small_scan());
        assert!(r.check("mu1_holder").unwrap().passed);
        assert!(!r.check("mu_c2_at_separatrix").unwrap().passed);
        assert_eq!(r.regularity, Regularity::Irregular);
        assert!(r.check("mu4_monotone").unwrap().passed);
    }

    #[test]
    fn two_maxima_fail_phi1_with_witness() {
        let pot = PotentialProfile::new_unchecked(PotentialShape::DoubleHump, 0.1).unwrap();
        let eq = Equilibrium::with_grid(make_boltzmannian(1.0).unwrap(), pot, 0.1, 16).unwrap();
        let r = verify_assumptions_with(&eq, small_scan());
        let c = r.check("phi1").unwrap();
        assert!(!c.passed);
        assert!(c.witness.is_some());
        assert!(!r.check("phi4_period").unwrap().passed);
    }

    #[test]
    fn profile_classes_pass_their_monotonicity() {
        for p in [
            make_polytrope(1, -1.0).unwrap(),
            make_even_nonmonotone(2).unwrap(),
            make_schamel(0.5, 2.0, true).unwrap(),
        ] {
            let checks = profile_checks(&p, small_scan());
            let m = checks.iter().find(|c| c.name == "mu4_monotone").unwrap();
            assert!(m.passed, "{}: {:?}", p.name(), m);
        }
    }

    #[test]
    fn increasing_profile_fails_decreasing_class() {
        let p = MicroProfile::custom("rising", f64::NEG_INFINITY, BranchKind::Single, MonotonicityClass::Decreasing, |e, _| {
            1.0 / (1.0 + (-e).exp())
        });
        let checks = profile_checks(&p, small_scan());
        assert!(!checks.iter().find(|c| c.name == "mu4_monotone").unwrap().passed);
    }

    #[test]
    fn warped_potential_period_is_monotone() {
        let eq = Equilibrium::with_grid(
            make_boltzmannian(1.0).unwrap(),
            make_potential_family(PotentialShape::WarpedSin2 { c: 0.2 }, 0.1).unwrap(),
            0.05,
            16,
        )
        .unwrap();
        let r = verify_assumptions_with(&eq, small_scan());
        assert!(r.check("phi4_period").unwrap().passed);
    }
}
