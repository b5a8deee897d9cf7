use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmwave_plan::pipeline::{cmd_plan_gnb, cmd_plan_pmr, cmd_sweep, cmd_visibility, RunConfig};
use mmwave_plan::visibility::IndirectMode;

/// Visibility-aware mmWave gNB and passive reflector planning.
#[derive(Parser)]
#[command(name = "mmwave-plan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the service grid as direct / indirect / blocked from one source.
    Visibility {
        #[command(flatten)]
        common: Common,
        /// Source point x,y,z in meters.
        #[arg(long, value_delimiter = ',', conflicts_with = "candidate")]
        source: Option<Vec<f64>>,
        /// Use gNB candidate INDEX as the source.
        #[arg(long)]
        candidate: Option<usize>,
    },
    /// Place gNBs to maximize weighted coverage.
    PlanGnb {
        #[command(flatten)]
        common: Common,
    },
    /// Place gNBs, then reflectors for the remaining outage area.
    PlanPmr {
        #[command(flatten)]
        common: Common,
        /// Reflector count of the reported placement.
        #[arg(long)]
        n_pmr: Option<usize>,
        /// Plate side of the reported placement, meters.
        #[arg(long)]
        pmr_size: Option<f64>,
    },
    /// gNB coverage versus threshold in every visibility mode.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario JSON (default: bundled reference map).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Coverage threshold in dB (default: link-budget MAPL).
    #[arg(long)]
    gamma_db: Option<f64>,
    /// direct | specular | diffuse
    #[arg(long)]
    mode: Option<IndirectMode>,
    #[arg(long)]
    n_gnb: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> mmwave_plan::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            c.scenario = Some(s.clone());
        }
        if self.gamma_db.is_some() {
            c.gamma_db = self.gamma_db;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(n) = self.n_gnb {
            c.n_gnb = n;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> mmwave_plan::Result<()> {
    match cli.command {
        Command::Visibility {
            common,
            source,
            candidate,
        } => {
            let mut c = common.resolve()?;
            if let Some(s) = source {
                let [x, y, z] = s[..] else {
                    return Err(mmwave_plan::PlanError::Config(
                        "--source takes x,y,z".into(),
                    ));
                };
                c.visibility.source = Some([x, y, z]);
                c.visibility.candidate = None;
            }
            if candidate.is_some() {
                c.visibility.candidate = candidate;
                c.visibility.source = None;
            }
            cmd_visibility(&c)
        }
        Command::PlanGnb { common } => cmd_plan_gnb(&common.resolve()?),
        Command::PlanPmr {
            common,
            n_pmr,
            pmr_size,
        } => {
            let mut c = common.resolve()?;
            if let Some(n) = n_pmr {
                c.pmr.n_pmr = n;
            }
            if let Some(a) = pmr_size {
                c.pmr.plate_m = a;
            }
            cmd_plan_pmr(&c)
        }
        Command::Sweep { common } => cmd_sweep(&common.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
