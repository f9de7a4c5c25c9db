//! Command line front end: sweep curves, Gamma shape reports and Monte
//! Carlo validation, all driven by a flat key=value config file plus flag
//! overrides. dB flags are converted to linear exactly once, inside the
//! library boundary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fasop::config::Config;
use fasop::sweep;

#[derive(Parser)]
#[command(name = "fasop", version, about = "Outage probability of fluid antenna receivers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate outage curves over a sweep grid and write them as CSV.
    Sweep(RunArgs),
    /// Dump the per-branch and combined Gamma fit parameters as CSV.
    Shapes(RunArgs),
    /// Cross-check the analytic routes against Monte Carlo; exit 1 on failure.
    Validate(ValidateArgs),
}

/// Options shared by all subcommands. Flags override config file keys.
#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file (# starts a comment).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Total number of ports.
    #[arg(long = "L", value_name = "PORTS")]
    ports: Option<u32>,

    /// Number of branches (1 = no diversity).
    #[arg(long = "M", value_name = "BRANCHES")]
    branches: Option<u32>,

    /// Antenna size in wavelengths.
    #[arg(long = "W", value_name = "SIZE")]
    size: Option<f64>,

    /// Nakagami fading parameter (integer).
    #[arg(long)]
    m: Option<u32>,

    /// Average channel power per port.
    #[arg(long)]
    omega_sq: Option<f64>,

    /// Average SNR in dB.
    #[arg(long)]
    snr_db: Option<f64>,

    /// SNR outage threshold in dB.
    #[arg(long)]
    gamma_th_db: Option<f64>,

    /// Antenna count of the MRC baseline.
    #[arg(long)]
    mrc_antennas: Option<u32>,

    /// Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,

    /// Monte Carlo base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Sweep variable: snr_db, ports, threshold_db or antenna_size.
    #[arg(long)]
    sweep: Option<String>,

    /// Sweep start (inclusive).
    #[arg(long)]
    from: Option<f64>,

    /// Sweep end (inclusive).
    #[arg(long)]
    to: Option<f64>,

    /// Sweep step.
    #[arg(long)]
    step: Option<f64>,

    /// Comma-separated scheme list, or `all`.
    #[arg(long)]
    schemes: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Output CSV path.
    #[arg(long, default_value = "out.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Fault-injection hook: rescale the fitted Gamma scale before the
    /// comparison. Exists to prove the validation catches a broken fit.
    #[arg(long, hide = true)]
    corrupt_beta: Option<f64>,
}

fn build_config(args: &CommonArgs) -> fasop::Result<Config> {
    let mut cfg = match &args.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(v) = args.ports {
        cfg.ports = v;
    }
    if let Some(v) = args.branches {
        cfg.branches = v;
    }
    if let Some(v) = args.size {
        cfg.size = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.omega_sq {
        cfg.omega_sq = v;
    }
    if let Some(v) = args.snr_db {
        cfg.snr_db = v;
    }
    if let Some(v) = args.gamma_th_db {
        cfg.gamma_th_db = v;
    }
    if let Some(v) = args.mrc_antennas {
        cfg.mrc_antennas = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.sweep {
        cfg.sweep.variable = v.parse()?;
    }
    if let Some(v) = args.from {
        cfg.sweep.from = v;
    }
    if let Some(v) = args.to {
        cfg.sweep.to = v;
    }
    if let Some(v) = args.step {
        cfg.sweep.step = v;
    }
    if let Some(v) = &args.schemes {
        cfg.set("schemes", v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_table(table: &sweep::Table, out: &PathBuf) -> fasop::Result<()> {
    std::fs::write(out, table.to_csv())?;
    println!("wrote {} rows to {}", table.rows.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> fasop::Result<bool> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = build_config(&args.common)?;
            write_table(&sweep::run_sweep(&cfg)?, &args.out)?;
            Ok(true)
        }
        Command::Shapes(args) => {
            let cfg = build_config(&args.common)?;
            write_table(&sweep::shapes_report(&cfg)?, &args.out)?;
            Ok(true)
        }
        Command::Validate(args) => {
            let cfg = build_config(&args.common)?;
            let report = sweep::validate(&cfg, args.corrupt_beta)?;
            print!("{}", report.render());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    // clap itself exits with code 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
