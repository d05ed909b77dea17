use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::Parser;

use htc_core::config::{parse_config_with, Command, Format};
use htc_core::error::{Error, Result};
use htc_core::{output, run};

/// Spectra of molecules in an optical cavity under weak coherent drive.
#[derive(Parser, Debug)]
#[command(name = "htc", version, about)]
struct Cli {
    /// What to compute.
    #[arg(value_parser = PossibleValuesParser::new(Command::ALL.map(|c| c.as_str())))]
    command: String,

    /// TOML configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Override a key, e.g. `--set lambda=0.6` or `--set sweep.points=101`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output file; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,

    #[arg(short, long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

fn threads() -> Result<()> {
    let Ok(raw) = std::env::var("HTC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("HTC_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))
}

fn execute(cli: Cli) -> Result<()> {
    threads()?;
    let command: Command = cli.command.parse()?;
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut config = parse_config_with(&text, &cli.overrides)?;
    if let Some(f) = &cli.format {
        config.output.format = f.parse::<Format>()?;
    }
    if let Some(p) = cli.out {
        config.output.path = Some(p);
    }
    let env = run::run(command, &config)?;
    match &config.output.path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            output::write(&env, config.output.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            output::write(&env, config.output.format, stdout.lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("htc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
