use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ppinfo::cli::{run, CliError, Command, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "ppinfo", version, about = "Densities, information functionals and MAP estimates for finite point processes")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (written atomically); standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `mc.seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Differential entropy by quadrature and Monte Carlo.
    Entropy,
    /// KL divergence against `kl.reference_model`.
    Kl,
    /// MAP estimate for `reference.c_value`.
    Map,
    /// MAP estimates over `c_sweep.c_values` and the crossings between them.
    CSweep,
    /// Unit audit of the entropy functionals.
    Audit,
    /// Compare p.g.fl. differentials with direct projections and densities.
    PgflCheck,
    /// Draw one realization.
    Sample,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Entropy => Command::Entropy,
            Cmd::Kl => Command::Kl,
            Cmd::Map => Command::Map,
            Cmd::CSweep => Command::CSweep,
            Cmd::Audit => Command::Audit,
            Cmd::PgflCheck => Command::PgflCheck,
            Cmd::Sample => Command::Sample,
        }
    }
}

fn write_atomic(path: &PathBuf, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(config) = &args.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let result = run(args.command.into(), &text, args.seed).and_then(|out| match &args.out {
        None => std::io::stdout()
            .write_all(out.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
        Some(path) => write_atomic(path, &out).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
