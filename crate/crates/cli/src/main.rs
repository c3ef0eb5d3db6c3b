use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aggdiff_cli::experiment::output_dir;
use aggdiff_cli::{check_command, exit, run_experiment, run_sweep, CliError, RawConfig, SweepSpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aggdiff",
    version,
    about = "Nonlocal aggregation-diffusion experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `[output] directory`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run one experiment per value, e.g. `datum.mass=0.1,0.5`.
        #[arg(long)]
        sweep: Option<SweepSpec>,
    },
    /// Run the built-in property suite.
    Check {
        #[arg(long, default_value_t = 20240531)]
        seed: u64,
    },
}

fn run(config: &Path, out: Option<&Path>, sweep: Option<&SweepSpec>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config).map_err(|source| CliError::Io {
        path: config.to_path_buf(),
        source,
    })?;
    let base = config.parent().filter(|p| !p.as_os_str().is_empty());
    let raw = RawConfig::parse(&text)?;
    match sweep {
        None => {
            let cfg = raw.build(base)?;
            let dir = output_dir(&cfg, out);
            let exp = run_experiment(&cfg, &dir)?;
            print!("{}", exp.summary.render());
            println!("artifacts in {}", dir.display());
            Ok(())
        }
        Some(spec) => {
            let cfg = raw.build(base)?;
            let dir = output_dir(&cfg, out);
            let runs = run_sweep(&raw, base, spec, &dir)?;
            let mut worst: Option<CliError> = None;
            for r in runs {
                match r.result {
                    Ok(_) => println!("{}={}: ok ({})", spec.param, r.value, r.directory.display()),
                    Err(e) => {
                        eprintln!("{}={}: {e}", spec.param, r.value);
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            worst.map_or(Ok(()), Err)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Run { config, out, sweep } => run(config, out.as_deref(), sweep.as_ref()),
        Command::Check { seed } => check_command(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
