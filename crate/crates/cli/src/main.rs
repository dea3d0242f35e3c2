use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schedsim_core::dp::dump::write_table;
use schedsim_core::report::{
    run_interventions, run_lookahead_sweep, run_return_regimes, run_theory_gap, scenario_table,
    Feasibility, TheoryPolicy,
};
use schedsim_core::scenario::{Intervention, ScenarioConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "schedsim",
    version,
    about = "Consumption under schedule lookahead: tables, sweeps and interventions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the value table of every cohort and dump it as text.
    BuildTable(Common),
    /// Mean utility against lookahead for every cohort.
    SweepLookahead(Common),
    /// The lookahead sweep under each configured return regime.
    SweepReturns(Common),
    /// Compensation and minimum-lookahead arms against the zero-lookahead baseline.
    RunInterventions(Common),
    /// Growth of the lookahead gap on the adversarial income instance.
    TheoryGap {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PolicyArg::Online)]
        policy: PolicyArg,
    },
    /// Parse and check a scenario, then print it with defaults filled in.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Online,
    FixedRate,
    Clairvoyant,
}

impl From<PolicyArg> for TheoryPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Online => TheoryPolicy::Online,
            PolicyArg::FixedRate => TheoryPolicy::FixedRate,
            PolicyArg::Clairvoyant => TheoryPolicy::Clairvoyant,
        }
    }
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<schedsim_core::Error> for Failure {
    fn from(e: schedsim_core::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&common.scenario)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Numeric(e.to_string()))?;
    }
    Ok(cfg)
}

fn check_feasibility(f: &Feasibility) -> Result<(), Failure> {
    log::info!(
        "{} trajectories, max feasibility residual {:e}",
        f.trajectories,
        f.max_residual
    );
    if f.violations > 0 {
        return Err(Failure::Numeric(format!(
            "{} of {} trajectories violate feasibility (max residual {:e})",
            f.violations, f.trajectories, f.max_residual
        )));
    }
    Ok(())
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn build_tables(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Numeric(format!("{}: {e}", out.display())))?;
    let regime = cfg.returns.regime(cfg.returns.regime);
    let mut paths = Vec::new();
    for cohort in cfg.cohorts()? {
        let table = scenario_table(cfg, cohort.midpoint(), &regime, &Intervention::None)?;
        let path = out.join(format!("value_table_{}.txt", cohort.name));
        let file = std::fs::File::create(&path)
            .map_err(|e| Failure::Numeric(format!("{}: {e}", path.display())))?;
        write_table(&table, std::io::BufWriter::new(file))?;
        paths.push(path);
    }
    Ok(paths)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::BuildTable(c) => {
            let cfg = load(&c)?;
            report(&build_tables(&cfg, &c.out)?);
        }
        Command::SweepLookahead(c) => {
            let cfg = load(&c)?;
            let result = run_lookahead_sweep(&cfg)?;
            report(&result.write_csv(&c.out, "sweep", true)?);
            check_feasibility(&result.feasibility)?;
        }
        Command::SweepReturns(c) => {
            let cfg = load(&c)?;
            let result = run_return_regimes(&cfg)?;
            report(&result.write_csv(&c.out, "regimes", false)?);
            check_feasibility(&result.feasibility)?;
        }
        Command::RunInterventions(c) => {
            let cfg = load(&c)?;
            let result = run_interventions(&cfg)?;
            report(&result.write_csv(&c.out)?);
            check_feasibility(&result.feasibility)?;
        }
        Command::TheoryGap { common, policy } => {
            let cfg = load(&common)?;
            let result = run_theory_gap(&cfg, policy.into())?;
            report(&[result.write_csv(&common.out)?]);
        }
        Command::ValidateConfig(c) => {
            let cfg = load(&c)?;
            cfg.cohorts()?;
            print!("{}", cfg.to_toml_string());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
