//! Command-line front end to the simulator.
//!
//! Exit status: 0 on success, 1 when `verify` finds a mismatch, 2 on
//! configuration or I/O errors.

use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use korrontea::fusion::PolicyParams;
use korrontea::sim::{
    emit_trace, live, parse_trace, run_simulation, sweep_alpha, sweep_csv, verify, ScenarioConfig,
    SimError,
};

#[derive(Parser)]
#[command(
    name = "korrontea",
    version,
    about = "Synchronous flow fusion simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in virtual time and write its trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a trace against the oracle composition of its scenario.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run a scenario for every alpha in a range and write a CSV summary.
    SweepAlpha {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accept one feeder and fuse its flows on the wall clock.
    Serve {
        #[arg(long)]
        listen: String,
        #[arg(long, default_value_t = 10)]
        theta: u64,
        #[arg(long, default_value_t = 10)]
        alpha: u64,
        #[arg(long, default_value_t = 1)]
        tick_ms: u64,
        /// Trace destination, standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a scenario to a server, pacing slices by their arrival tick.
    Feed {
        #[arg(long)]
        connect: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        tick_ms: u64,
    },
}

fn write(path: &PathBuf, text: &str) -> Result<(), SimError> {
    fs::write(path, text).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<bool, SimError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let result = run_simulation(&cfg)?;
            write(&out, &emit_trace(&result.trace()))?;
            eprintln!(
                "{} slices, {} set aside, policy {:?}",
                result.records.len(),
                result.side_channel.len(),
                result.policy
            );
            Ok(true)
        }
        Command::Verify { config, trace } => {
            let cfg = ScenarioConfig::load(&config)?;
            let text = fs::read_to_string(&trace)
                .map_err(|e| SimError::Io(format!("{}: {e}", trace.display())))?;
            let report = verify(&parse_trace(&text)?, &cfg)?;
            print!("{report}");
            Ok(report.is_clean())
        }
        Command::SweepAlpha {
            config,
            from,
            to,
            out,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            write(&out, &sweep_csv(&sweep_alpha(&cfg, from, to)?))?;
            Ok(true)
        }
        Command::Serve {
            listen,
            theta,
            alpha,
            tick_ms,
            out,
        } => {
            let params = PolicyParams::new(theta, alpha)?;
            let listener = TcpListener::bind(&listen)?;
            eprintln!("listening on {}", listener.local_addr()?);
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(fs::File::create(p)?),
                None => Box::new(std::io::stdout().lock()),
            };
            let summary = live::serve(&listener, params, tick(tick_ms)?, &mut *sink)?;
            eprintln!(
                "received {} slices, emitted {}, set aside {}",
                summary.received,
                summary.emitted,
                summary.side_channel.len()
            );
            Ok(true)
        }
        Command::Feed {
            connect,
            config,
            tick_ms,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let sent = live::feed(connect.as_str(), &cfg, tick(tick_ms)?)?;
            eprintln!("sent {sent} slices");
            Ok(true)
        }
    }
}

fn tick(ms: u64) -> Result<Duration, SimError> {
    if ms == 0 {
        return Err(SimError::InvalidConfig("tick-ms must be positive".into()));
    }
    Ok(Duration::from_millis(ms))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
