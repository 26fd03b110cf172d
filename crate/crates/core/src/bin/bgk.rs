use bgk::cli::{exit_code, output_dir, run, RunConfig, Task};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bgk", version, about = "BGK equilibria, period functions, spectral checks and linearized dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for dense linear algebra (1 runs sequentially).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration and $BGK_OUTPUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the configuration.
    Run(Common),
    /// Build the equilibrium and tabulate the ion density.
    BuildEquilibrium(Common),
    /// Check the structural assumptions (exit 2 on failure).
    VerifyAssumptions(Common),
    /// Tabulate the period function and turning points.
    PeriodTable(Common),
    /// Region-wise period bounds and turning-point asymptotics.
    VerifyAsymptotics(Common),
    /// Resonant energy windows for the configured `q` values.
    ResonanceMap(Common),
    /// Energy identity for seeded trial potentials at two resolutions.
    EnergyCheck(Common),
    /// Contradiction sweep and dense eigen-scan.
    SpectrumScan(Common),
    /// Linearized flow and the running average of the force.
    Simulate(Common),
    /// Derived exponents of a rescaling.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, conflicts_with = "eps")]
        lambda: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

fn execute(cli: Cli) -> Result<i32, bgk::Error> {
    let par = if cli.threads <= 1 { faer::Par::Seq } else { faer::Par::rayon(cli.threads) };
    faer::set_global_parallelism(par);
    let (common, kind) = match &cli.command {
        Command::Run(c) => (c, None),
        Command::BuildEquilibrium(c) => (c, Some("build-equilibrium")),
        Command::VerifyAssumptions(c) => (c, Some("verify-assumptions")),
        Command::PeriodTable(c) => (c, Some("period-table")),
        Command::VerifyAsymptotics(c) => (c, Some("verify-asymptotics")),
        Command::ResonanceMap(c) => (c, Some("resonance-map")),
        Command::EnergyCheck(c) => (c, Some("energy-check")),
        Command::SpectrumScan(c) => (c, Some("spectrum-scan")),
        Command::Simulate(c) => (c, Some("simulate")),
        Command::Scaling { common, .. } => (common, Some("scaling")),
    };
    let config = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let mut task = config.task_for(kind)?;
    if let (Command::Scaling { a, c, lambda, eps, .. }, Task::Scaling(s)) = (&cli.command, &mut task) {
        s.a = a.unwrap_or(s.a);
        s.c = c.unwrap_or(s.c);
        if lambda.is_some() || eps.is_some() {
            s.lambda = *lambda;
            s.eps = *eps;
        }
    }
    let dir = output_dir(common.out.as_deref(), &config);
    let outcome = run(&config, &task, &dir)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => {
            eprintln!("validation failed (exit {code}); see the JSON report");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{:#}", anyhow::Error::new(e).context(format!("bgk failed (exit {code})")));
            ExitCode::from(code as u8)
        }
    }
}
