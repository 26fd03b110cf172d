//! Run configurations and the batch tasks behind the `bgk` binary.

use crate::action_angle::{ActionAngleChart, ChartSettings};
use crate::equilibria::{
    make_boltzmannian, make_even_nonmonotone, make_polytrope, make_potential_family, make_schamel, verify_assumptions_with,
    Equilibrium, MicroProfile, PotentialProfile, PotentialShape, ScanSettings, DEFAULT_X_GRID,
};
use crate::error::{Error, Result};
use crate::linearized_dynamics::{simulate, BumpData, SimSettings};
use crate::period_asymptotics::{verify_period_bounds, verify_turning_asymptotics, AsymptoticsSettings};
use crate::scaling::ScalingParams;
use crate::spectral_analysis::{
    contradiction_constant, eigen_scan, energy_identity, operator_matrix, resonance_map, GridSettings, IdentitySettings,
    KernelTable, OperatorOptions, SpectralGrid, SweepSettings, TableSettings, TrialPotential,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BGK_OUTPUT_DIR";

/// Microscopic equation of state by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ProfileSpec {
    Boltzmann { beta: f64 },
    Polytrope { k: u32, h: f64 },
    EvenNonmonotone { k: u32 },
    Schamel { alpha: f64, beta: f64, #[serde(default)] multibranch: bool },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<MicroProfile> {
        match *self {
            Self::Boltzmann { beta } => make_boltzmannian(beta),
            Self::Polytrope { k, h } => make_polytrope(k, h),
            Self::EvenNonmonotone { k } => make_even_nonmonotone(k),
            Self::Schamel { alpha, beta, multibranch } => make_schamel(alpha, beta, multibranch),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub shape: PotentialShape,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSpec {
    pub profile: ProfileSpec,
    pub potential: PotentialSpec,
    pub eps: f64,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
}

fn default_x_grid() -> usize {
    DEFAULT_X_GRID
}

impl Default for EquilibriumSpec {
    fn default() -> Self {
        Self {
            profile: ProfileSpec::Boltzmann { beta: 1.0 },
            potential: PotentialSpec { shape: PotentialShape::Sin2, amplitude: 0.1 },
            eps: 0.05,
            x_grid: DEFAULT_X_GRID,
        }
    }
}

impl EquilibriumSpec {
    /// Builds the equilibrium, rejecting potentials that fail the structural assumptions.
    pub fn build(&self) -> Result<Equilibrium> {
        let potential = make_potential_family(self.potential.shape, self.potential.amplitude)?;
        Equilibrium::with_grid(self.profile.build()?, potential, self.eps, self.x_grid)
    }

    /// Builds the equilibrium without validating the potential.
    pub fn build_unchecked(&self) -> Result<Equilibrium> {
        let potential = PotentialProfile::new_unchecked(self.potential.shape, self.potential.amplitude)?;
        Equilibrium::with_grid(self.profile.build()?, potential, self.eps, self.x_grid)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildTask {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionsTask {
    pub scan: ScanSettings,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodTableTask {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsTask {
    pub settings: AsymptoticsSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceTask {
    pub q: Vec<f64>,
    pub delta: Option<f64>,
    pub max_ell: Option<usize>,
}

impl Default for ResonanceTask {
    fn default() -> Self {
        Self { q: vec![0.5, 1.0, 2.0], delta: None, max_ell: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCheckTask {
    pub trials: usize,
    /// Spatial modes of the random trial potentials.
    pub trial_modes: usize,
    /// `q` is drawn log-uniformly from `[q_min, q_max]`.
    pub q_min: f64,
    pub q_max: f64,
    /// Also evaluate at the refined resolution.
    pub refine: bool,
    pub identity: IdentitySettings,
    pub table: TableSettings,
}

impl Default for EnergyCheckTask {
    fn default() -> Self {
        Self {
            trials: 20,
            trial_modes: 4,
            q_min: 0.5,
            q_max: 10.0,
            refine: true,
            identity: IdentitySettings::default(),
            table: TableSettings { modes: 16, spatial_modes: 4, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumTask {
    pub sweep: SweepSettings,
    pub table: TableSettings,
    /// Grid of the dense eigen-scan (`None` skips it).
    pub eigen: Option<GridSettings>,
}

impl Default for SpectrumTask {
    fn default() -> Self {
        Self {
            sweep: SweepSettings::default(),
            table: TableSettings::default(),
            eigen: Some(GridSettings { modes: 4, spatial_modes: 4, trapped_energies: 24, exterior_energies: 24, ..Default::default() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateTask {
    pub grid: GridSettings,
    pub initial: BumpData,
    pub t_end: f64,
    pub dt: f64,
    pub coupling: bool,
    /// Steps between CSV rows.
    pub output_every: usize,
}

impl Default for SimulateTask {
    fn default() -> Self {
        Self {
            grid: GridSettings { modes: 8, spatial_modes: 8, trapped_energies: 128, exterior_energies: 64, exterior_cutoff: 0.002, ..Default::default() },
            initial: BumpData::default(),
            t_end: 200.0,
            dt: 0.1,
            coupling: true,
            output_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingTask {
    pub a: f64,
    pub c: f64,
    pub lambda: Option<f64>,
    /// Used when `lambda` is absent; the equilibrium's `eps` when both are absent.
    pub eps: Option<f64>,
}

impl Default for ScalingTask {
    fn default() -> Self {
        Self { a: 0.0, c: 1.0, lambda: None, eps: None }
    }
}

/// One batch task with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    BuildEquilibrium(BuildTask),
    VerifyAssumptions(AssumptionsTask),
    PeriodTable(PeriodTableTask),
    VerifyAsymptotics(AsymptoticsTask),
    ResonanceMap(ResonanceTask),
    EnergyCheck(EnergyCheckTask),
    SpectrumScan(SpectrumTask),
    Simulate(SimulateTask),
    Scaling(ScalingTask),
}

impl Task {
    pub const KINDS: [&'static str; 9] = [
        "build-equilibrium",
        "verify-assumptions",
        "period-table",
        "verify-asymptotics",
        "resonance-map",
        "energy-check",
        "spectrum-scan",
        "simulate",
        "scaling",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Self::BuildEquilibrium(_) => "build-equilibrium",
            Self::VerifyAssumptions(_) => "verify-assumptions",
            Self::PeriodTable(_) => "period-table",
            Self::VerifyAsymptotics(_) => "verify-asymptotics",
            Self::ResonanceMap(_) => "resonance-map",
            Self::EnergyCheck(_) => "energy-check",
            Self::SpectrumScan(_) => "spectrum-scan",
            Self::Simulate(_) => "simulate",
            Self::Scaling(_) => "scaling",
        }
    }

    /// The task of the given kind with default parameters.
    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "build-equilibrium" => Self::BuildEquilibrium(BuildTask::default()),
            "verify-assumptions" => Self::VerifyAssumptions(AssumptionsTask::default()),
            "period-table" => Self::PeriodTable(PeriodTableTask::default()),
            "verify-asymptotics" => Self::VerifyAsymptotics(AsymptoticsTask::default()),
            "resonance-map" => Self::ResonanceMap(ResonanceTask::default()),
            "energy-check" => Self::EnergyCheck(EnergyCheckTask::default()),
            "spectrum-scan" => Self::SpectrumScan(SpectrumTask::default()),
            "simulate" => Self::Simulate(SimulateTask::default()),
            "scaling" => Self::Scaling(ScalingTask::default()),
            other => return Err(Error::Config(format!("unknown task `{other}`"))),
        })
    }
}

/// A complete run: equilibrium, chart resolution, task and output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub equilibrium: EquilibriumSpec,
    #[serde(default)]
    pub chart: ChartSettings,
    #[serde(default)]
    pub task: Option<Task>,
}

fn default_seed() -> u64 {
    7
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: default_seed(), output_dir: None, equilibrium: EquilibriumSpec::default(), chart: ChartSettings::default(), task: None }
    }
}

impl RunConfig {
    /// Parses a TOML configuration; errors carry the line and field of the problem.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("configuration serializes");
        Sha256::digest(&canonical).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// The task to run for `kind`: the configured one when it matches, else the defaults.
    pub fn task_for(&self, kind: Option<&str>) -> Result<Task> {
        match (kind, &self.task) {
            (None, Some(t)) => Ok(t.clone()),
            (None, None) => Err(Error::Config("configuration has no [task] and no task was named".into())),
            (Some(k), Some(t)) if t.kind() == k => Ok(t.clone()),
            (Some(k), Some(t)) => Err(Error::Config(format!("configured task `{}` does not match `{k}`", t.kind()))),
            (Some(k), None) => Task::default_for(k),
        }
    }
}

/// Process exit code of an error: 1 configuration, 2 assumption, 3 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 1,
        Error::Assumption(_) | Error::Unsupported(_) => 2,
        Error::Numerical(_) | Error::EnergyOutOfRange { .. } | Error::Io(_) => 3,
    }
}

/// Files written by a run and its exit code (2 when a validation report failed).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub task: &'static str,
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
}

struct Output<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    task: &'static str,
    hash: String,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn header_lines(&self) -> String {
        let c = self.config.chart;
        format!(
            "# bgk {}\n# config_sha256={}\n# chart nodes_per_panel={} panels={} table_points={} e_max_factor={:.17e} closest_offset={:.17e}\n",
            self.task, self.hash, c.nodes_per_panel, c.panels, c.table_points, c.e_max_factor, c.closest_offset
        )
    }

    fn create(&mut self, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
        let path = self.dir.join(name);
        let file = std::fs::File::create(&path)?;
        self.files.push(path);
        Ok(std::io::BufWriter::new(file))
    }

    /// CSV file: header comments, then whatever `body` writes.
    fn csv<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let header = self.header_lines();
        let mut w = self.create(name)?;
        w.write_all(header.as_bytes())?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// JSON report wrapped with the configuration hash and chart resolution.
    fn json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            task: &'a str,
            config_sha256: &'a str,
            chart_resolution: ChartSettings,
            report: &'a T,
        }
        let wrapped = Wrapped { task: self.task, config_sha256: &self.hash, chart_resolution: self.config.chart, report };
        let text = serde_json::to_string_pretty(&wrapped).map_err(|e| Error::Numerical(format!("json: {e}")))?;
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

fn csv_rows(w: &mut dyn Write, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(header).map_err(io)?;
    for r in rows {
        wr.write_record(&r).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

fn sci(v: f64) -> String {
    format!("{v:.17e}")
}

/// Output directory: the explicit one, else the configured one, else `$BGK_OUTPUT_DIR`, else `.`.
pub fn output_dir(explicit: Option<&Path>, config: &RunConfig) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs `task` for `config`, writing its artifacts into `dir`. Headers carry the hash of
/// the configuration with `task` in place of its own.
pub fn run(config: &RunConfig, task: &Task, dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(dir)?;
    let resolved = RunConfig { task: Some(task.clone()), ..config.clone() };
    let mut out = Output { dir: dir.to_path_buf(), config, task: task.kind(), hash: resolved.hash(), files: Vec::new() };
    let code = match task {
        Task::BuildEquilibrium(_) => build_equilibrium(config, &mut out)?,
        Task::VerifyAssumptions(t) => verify(config, t, &mut out)?,
        Task::PeriodTable(_) => period_table(config, &mut out)?,
        Task::VerifyAsymptotics(t) => asymptotics(config, t, &mut out)?,
        Task::ResonanceMap(t) => resonances(config, t, &mut out)?,
        Task::EnergyCheck(t) => energy_check(config, t, &mut out)?,
        Task::SpectrumScan(t) => spectrum(config, t, &mut out)?,
        Task::Simulate(t) => simulation(config, t, &mut out)?,
        Task::Scaling(t) => scaling(config, t, &mut out)?,
    };
    Ok(RunOutcome { task: task.kind(), files: out.files, exit_code: code })
}

fn chart(config: &RunConfig) -> Result<ActionAngleChart> {
    ActionAngleChart::with_settings(&config.equilibrium.build()?, config.chart)
}

#[derive(Serialize)]
struct EquilibriumReport {
    profile: String,
    potential: String,
    eps: f64,
    e_min: f64,
    min_rho_plus: f64,
    min_rho_plus_at: f64,
    poisson_residual: f64,
}

fn build_equilibrium(config: &RunConfig, out: &mut Output) -> Result<i32> {
    let eq = config.equilibrium.build()?;
    let (min_rho, at) = eq.min_rho_plus();
    let report = EquilibriumReport {
        profile: eq.profile().name().to_string(),
        potential: eq.potential().name().to_string(),
        eps: eq.eps(),
        e_min: eq.e_min(),
        min_rho_plus: min_rho,
        min_rho_plus_at: at,
        poisson_residual: eq.poisson_residual()?,
    };
    out.csv("rho_plus.csv", |w| {
        csv_rows(w, &["x", "rho_plus"], eq.x_grid().iter().zip(eq.rho_plus()).map(|(x, r)| vec![sci(*x), sci(*r)]))
    })?;
    out.json("equilibrium.json", &report)?;
    Ok(0)
}

fn verify(config: &RunConfig, task: &AssumptionsTask, out: &mut Output) -> Result<i32> {
    let eq = config.equilibrium.build_unchecked()?;
    let report = verify_assumptions_with(&eq, task.scan);
    out.json("assumptions.json", &report)?;
    Ok(if report.all_passed() { 0 } else { 2 })
}

#[derive(Serialize)]
struct PeriodTableReport {
    rows: usize,
    e_min: f64,
    estar: f64,
    increasing_on_trapped: bool,
    decreasing_on_exterior: bool,
}

fn period_table(config: &RunConfig, out: &mut Output) -> Result<i32> {
    let chart = chart(config)?;
    let rows = chart.table();
    if rows.is_empty() {
        return Err(Error::Config("chart.table_points must be positive for a period table".into()));
    }
    let trapped: Vec<_> = rows.iter().filter(|r| r.energy < 0.0).collect();
    let exterior: Vec<_> = rows.iter().filter(|r| r.energy > 0.0).collect();
    let report = PeriodTableReport {
        rows: rows.len(),
        e_min: chart.e_min(),
        estar: chart.estar(),
        increasing_on_trapped: trapped.windows(2).all(|w| w[1].period > w[0].period),
        decreasing_on_exterior: exterior.windows(2).all(|w| w[1].period < w[0].period),
    };
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    out.csv("period_table.csv", |w| {
        csv_rows(
            w,
            &["E", "T", "Tprime", "Tsecond", "x_minus", "x_plus", "elliptic", "hyperbolic", "exterior"],
            rows.iter().map(|r| {
                vec![
                    sci(r.energy),
                    sci(r.period),
                    sci(r.period_deriv),
                    sci(r.period_deriv2),
                    sci(r.x_minus),
                    sci(r.x_plus),
                    flag(r.elliptic),
                    flag(r.hyperbolic),
                    flag(r.exterior),
                ]
            }),
        )
    })?;
    out.json("period_table.json", &report)?;
    Ok(0)
}

fn asymptotics(config: &RunConfig, task: &AsymptoticsTask, out: &mut Output) -> Result<i32> {
    #[derive(Serialize)]
    struct Report {
        bounds: crate::period_asymptotics::AsymptoticsReport,
        turning: crate::period_asymptotics::TurningReport,
        passed: bool,
    }
    let chart = chart(config)?;
    let bounds = verify_period_bounds(&chart, task.settings)?;
    let turning = verify_turning_asymptotics(&chart)?;
    let passed = bounds.passed && turning.passed;
    out.csv("asymptotics.csv", |w| bounds.write_csv(w))?;
    out.json("asymptotics.json", &Report { bounds, turning, passed })?;
    Ok(if passed { 0 } else { 2 })
}

fn resonances(config: &RunConfig, task: &ResonanceTask, out: &mut Output) -> Result<i32> {
    #[derive(Serialize)]
    struct Entry {
        map: crate::spectral_analysis::ResonanceMap,
        max_period_defect: f64,
        containment_failures: Vec<usize>,
    }
    if task.q.is_empty() {
        return Err(Error::Config("resonance-map needs at least one q".into()));
    }
    let chart = chart(config)?;
    let mut entries = Vec::new();
    for (i, &q) in task.q.iter().enumerate() {
        let map = resonance_map(&chart, q, task.delta, task.max_ell)?;
        out.csv(&format!("resonance_map_{i}.csv"), |w| map.write_csv(w))?;
        let max_period_defect = map.max_period_defect(&chart)?;
        let containment_failures = map.containment_failures();
        entries.push(Entry { map, max_period_defect, containment_failures });
    }
    out.json("resonance_map.json", &entries)?;
    Ok(0)
}

/// `count` seeded trial potentials with `q` log-uniform on `[q_min, q_max]`.
pub fn random_trials(count: usize, modes: usize, q_min: f64, q_max: f64, seed: u64) -> Result<Vec<(TrialPotential, f64)>> {
    if !(q_min > 0.0 && q_max >= q_min) || modes == 0 {
        return Err(Error::InvalidParameter("trials need 0 < q_min <= q_max and at least one mode".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let t = TrialPotential::random(modes, &mut rng);
            let q = (q_min.ln() + rng.random::<f64>() * (q_max.ln() - q_min.ln())).exp();
            (t, q)
        })
        .collect())
}

fn energy_check(config: &RunConfig, task: &EnergyCheckTask, out: &mut Output) -> Result<i32> {
    #[derive(Serialize)]
    struct Report {
        resolutions: Vec<(IdentitySettings, Vec<crate::spectral_analysis::EnergyIdentity>)>,
        max_residual: f64,
    }
    let chart = chart(config)?;
    let table = KernelTable::new(&chart, task.table)?;
    let trials = random_trials(task.trials, task.trial_modes, task.q_min, task.q_max, config.seed)?;
    let mut levels = vec![task.identity];
    if task.refine {
        levels.push(task.identity.refined());
    }
    let mut resolutions = Vec::new();
    let mut max_residual: f64 = 0.0;
    for s in levels {
        let r = energy_identity(&chart, &table, &trials, &s)?;
        max_residual = r.iter().fold(max_residual, |m, x| m.max(x.residual));
        resolutions.push((s, r));
    }
    out.json("energy_check.json", &Report { resolutions, max_residual })?;
    Ok(0)
}

fn spectrum(config: &RunConfig, task: &SpectrumTask, out: &mut Output) -> Result<i32> {
    #[derive(Serialize)]
    struct Report {
        q_grid: Vec<f64>,
        r_values: Vec<(f64, Vec<f64>)>,
        eps0_estimate: f64,
        sweep: crate::spectral_analysis::SweepReport,
        eigen_report: Option<crate::spectral_analysis::EigenReport>,
    }
    let chart = chart(config)?;
    let table = KernelTable::new(&chart, task.table)?;
    let mut sweep_settings = task.sweep.clone();
    sweep_settings.seed = config.seed;
    let sweep = contradiction_constant(&chart, &table, &sweep_settings)?;
    let eigen_report = match task.eigen {
        Some(g) => {
            let grid = SpectralGrid::new(&chart, g)?;
            Some(eigen_scan(&operator_matrix(&grid, OperatorOptions::default())?)?)
        }
        None => None,
    };
    let report = Report {
        q_grid: sweep.q_grid.clone(),
        r_values: sweep.levels.iter().map(|l| (l.eps, l.r_values.clone())).collect(),
        eps0_estimate: sweep.eps0,
        sweep,
        eigen_report,
    };
    out.json("spectrum_scan.json", &report)?;
    Ok(0)
}

fn simulation(config: &RunConfig, task: &SimulateTask, out: &mut Output) -> Result<i32> {
    #[derive(Serialize)]
    struct Report {
        recurrence_horizon: f64,
        quadratic_form: (f64, f64),
        final_running_avg: f64,
        warnings: Vec<String>,
    }
    if task.output_every == 0 {
        return Err(Error::Config("simulate.output_every must be positive".into()));
    }
    let chart = chart(config)?;
    let grid = SpectralGrid::new(&chart, task.grid)?;
    let initial = task.initial.field(&grid)?;
    let rep = simulate(&grid, initial, &SimSettings { t_end: task.t_end, dt: task.dt, coupling: task.coupling })?;
    let last = rep.history.len() - 1;
    out.csv("simulate.csv", |w| {
        csv_rows(
            w,
            &["t", "force_l2", "running_avg"],
            rep.history
                .iter()
                .enumerate()
                .filter(|(i, _)| i % task.output_every == 0 || *i == last)
                .map(|(_, d)| vec![sci(d.t), sci(d.force_l2), sci(d.running_avg)]),
        )
    })?;
    let report = Report {
        recurrence_horizon: rep.recurrence_horizon,
        quadratic_form: rep.quadratic_form,
        final_running_avg: rep.history[last].running_avg,
        warnings: rep.warnings,
    };
    out.json("simulate.json", &report)?;
    Ok(0)
}

fn scaling(config: &RunConfig, task: &ScalingTask, out: &mut Output) -> Result<i32> {
    let params = match (task.lambda, task.eps) {
        (Some(l), _) => ScalingParams::new(task.a, task.c, l)?,
        (None, Some(e)) => ScalingParams::from_eps(task.a, task.c, e)?,
        (None, None) => ScalingParams::from_eps(task.a, task.c, config.equilibrium.eps)?,
    };
    out.json("scaling.json", &params.derived())?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_and_hash_is_stable() {
        let text = r#"
            seed = 3
            [equilibrium]
            eps = 0.05
            profile = { name = "schamel", alpha = 0.5, beta = 1.0 }
            potential = { shape = "warped_sin2", c = 0.1, amplitude = 0.2 }
            [task]
            kind = "resonance-map"
            q = [1.0]
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.equilibrium.potential.shape, PotentialShape::WarpedSin2 { c: 0.1 });
        assert_eq!(c.task_for(None).unwrap().kind(), "resonance-map");
        assert!(c.task_for(Some("simulate")).is_err());
        let again = RunConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn malformed_config_names_the_line() {
        let err = RunConfig::from_toml("[equilibrium]\neps = \"small\"\n").unwrap_err();
        assert_eq!(exit_code(&err), 1);
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("eps"), "{msg}");
        let err = RunConfig::from_toml("[task]\nkind = \"simulate\"\ntend = 3\n").unwrap_err();
        assert!(err.to_string().contains("tend"));
    }

    #[test]
    fn every_kind_has_defaults() {
        for k in Task::KINDS {
            assert_eq!(Task::default_for(k).unwrap().kind(), k);
        }
        assert!(Task::default_for("nope").is_err());
    }
}
