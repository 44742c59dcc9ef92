use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use fdsic::harness::{self, OutputFormat, ScenarioConfig};
use fdsic::BaselineMode;

#[derive(Parser)]
#[command(name = "fdsic", version, about = "Full-duplex OFDM self-interference cancellation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenario's scalar settings (sweep axes are ignored).
    Run(Opts),
    /// Simulate every cell of the scenario's sweep.
    Sweep(Opts),
    /// Print the impairment power budget versus SI power.
    Budget(Opts),
}

#[derive(Args)]
struct Opts {
    /// Scenario TOML file, or one of the presets fig2, fig4, fig5, fig6.
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Overrides the baseline of the scenario and of its sweep.
    #[arg(long)]
    baseline: Option<BaselineMode>,
    /// Number of outer estimation iterations.
    #[arg(long)]
    iterations: Option<usize>,
}

impl Opts {
    fn scenario(&self) -> fdsic::Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::load_or_preset(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(b) = self.baseline {
            cfg.baseline = b;
            cfg.sweep.baseline = None;
        }
        if let Some(n) = self.iterations {
            cfg.estimation.n_outer = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn sink(&self) -> fdsic::Result<Box<dyn Write>> {
        match &self.out {
            Some(path) => std::fs::File::create(path)
                .map(|f| Box::new(std::io::BufWriter::new(f)) as Box<dyn Write>)
                .map_err(|source| fdsic::Error::Io { path: path.clone(), source }),
            None => Ok(Box::new(std::io::stdout().lock())),
        }
    }
}

fn execute(cli: Cli) -> fdsic::Result<()> {
    match cli.command {
        Command::Run(opts) => simulate(&opts, false),
        Command::Sweep(opts) => simulate(&opts, true),
        Command::Budget(opts) => {
            let rows = harness::run_budget(&opts.scenario()?)?;
            match &opts.out {
                Some(path) => harness::emit_budget(&rows, opts.format, path),
                None => harness::write_budget(&rows, opts.format, opts.sink()?),
            }
        }
    }
}

fn simulate(opts: &Opts, sweep: bool) -> fdsic::Result<()> {
    let cfg = opts.scenario()?;
    let mut result = if sweep { harness::run_sweep(&cfg)? } else { harness::run_single(&cfg)? };
    if opts.format == OutputFormat::Json {
        result.metadata.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    match &opts.out {
        Some(path) => harness::emit(&result, opts.format, path),
        None => harness::write_sweep(&result, opts.format, opts.sink()?),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdsic: {e}");
            ExitCode::FAILURE
        }
    }
}
