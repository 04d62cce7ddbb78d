use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonloc::config::{RunConfig, StudyKind};
use nonloc::record::{unix_now, RunRecord};
use nonloc::studies::{self, Outcome};
use nonloc::Error;

#[derive(Parser)]
#[command(
    name = "nonloc",
    version,
    about = "Nonlocal Dirichlet solver and numerical studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    /// Override a config value, e.g. `--set kernel.epsilon=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem once.
    Solve(Common),
    /// Certify barrier supersolutions.
    BarrierCheck(Common),
    /// Run a numerical study.
    Study {
        #[command(flatten)]
        common: Common,
        /// Study to run instead of `study.kind`.
        #[arg(long)]
        which: Option<String>,
    },
    /// Parse and validate a configuration without computing.
    Validate(Common),
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NONCONVERGED: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_THRESHOLD,
    })
}

fn persist(
    name: &str,
    cfg: &RunConfig,
    out_dir: &Path,
    outcome: &Outcome,
    started: f64,
) -> nonloc::Result<()> {
    for t in &outcome.tables {
        t.write(out_dir)?;
    }
    let checks = serde_json::to_value(&outcome.checks).expect("checks serialize");
    RunRecord::new(
        name,
        cfg.to_toml(),
        &outcome.tables,
        outcome.report.clone(),
        checks,
        started,
    )
    .write(out_dir)
}

fn run(name: &str, common: &Common, which: Option<&str>) -> ExitCode {
    let started = unix_now();
    let cfg = match RunConfig::load(&common.config, &common.set) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let which = match which.map(StudyKind::parse).transpose() {
        Ok(w) => w,
        Err(e) => return fail(e),
    };
    studies::configure_threads();
    let outcome = match name {
        "solve" => studies::run_solve(&cfg),
        "barrier-check" => studies::run_barrier_check(&cfg),
        _ => studies::run_study(&cfg, which),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let out_dir = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    if let Err(e) = persist(name, &cfg, &out_dir, &outcome, started) {
        return fail(e);
    }
    for line in outcome.summary() {
        println!("{line}");
    }
    if outcome.nonconverged {
        eprintln!("error: iteration limit reached before the tolerance");
        ExitCode::from(EXIT_NONCONVERGED)
    } else if !outcome.pass() {
        ExitCode::from(EXIT_THRESHOLD)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve(c) => run("solve", c, None),
        Command::BarrierCheck(c) => run("barrier-check", c, None),
        Command::Study { common, which } => run("study", common, which.as_deref()),
        Command::Validate(c) => match RunConfig::load(&c.config, &c.set) {
            Ok(_) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
