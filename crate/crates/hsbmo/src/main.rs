use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hsbmo::commands::{self, Options};
use hsbmo::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "hsbmo", version, about = "BMO, Carleson and Hölder diagnostics for elliptic systems on the upper half-space")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; the d=1 desk grid is used when absent
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random data and sampling
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample Poisson kernels and check their structural properties
    Kernel(Common),
    /// Extend a boundary datum to the half-space
    Extend(Common),
    /// Compute BMO, Morrey-Campanato, Hölder and Carleson quantities
    Norms(Common),
    /// Run the approximation, mollifier and translation tests
    Approx(Common),
    /// Run the acceptance criteria
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run only criteria whose name contains NAME
        #[arg(long, value_name = "NAME")]
        filter: Option<String>,
        /// Regenerate the calibration entries for this dimension
        #[arg(long)]
        calibrate: bool,
    },
}

fn threads() -> CliResult<()> {
    let Ok(v) = std::env::var("HSBMO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("HSBMO_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("HSBMO_THREADS: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    threads()?;
    let (common, filter, calibrate) = match &cli.command {
        Sub::Kernel(c) | Sub::Extend(c) | Sub::Norms(c) | Sub::Approx(c) => (c, None, false),
        Sub::Verify { common, filter, calibrate } => (common, filter.clone(), *calibrate),
    };
    let opts = Options {
        config: common.config.clone(),
        out: common.out.clone(),
        seed: common.seed,
        filter,
        calibrate,
    };
    let cfg = commands::resolve(&opts)?;
    let manifest = match cli.command {
        Sub::Kernel(_) => commands::cmd_kernel(&cfg)?,
        Sub::Extend(_) => commands::cmd_extend(&cfg)?,
        Sub::Norms(_) => commands::cmd_norms(&cfg)?,
        Sub::Approx(_) => commands::cmd_approx(&cfg)?,
        Sub::Verify { .. } => {
            let (manifest, report) = commands::cmd_verify(&cfg, opts.filter.as_deref(), opts.calibrate)?;
            for c in &report.criteria {
                println!("{:>2} {:<28} {}", c.id, c.name, if c.passed { "pass" } else { "FAIL" });
            }
            println!("{}", manifest.display());
            return report.status();
        }
    };
    println!("{}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hsbmo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
