//! `sas-mimo` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sas_mimo::cli_io::{
    find_preset, parse_config, preset_theory, presets, run_config, run_preset, run_theory, theory_rows, write_csv, CliIoError,
    Overrides, PresetOutput,
};

#[derive(Parser)]
#[command(name = "sas-mimo", version, about = "BER sweeps and closed-form curves for Alamouti links in alpha-stable noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Bit errors per point before stopping.
    #[arg(long)]
    min_errors: Option<u64>,
    /// Trial cap per point.
    #[arg(long)]
    max_trials: Option<u64>,
    /// Use the full trial cap instead of the desk-scale one.
    #[arg(long)]
    full: bool,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            workers: self.workers,
            min_errors: self.min_errors,
            max_trials: self.max_trials,
            full: self.full,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a named preset; without a name, list the catalog.
    Preset {
        name: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write closed-form curves for a preset or configuration file.
    Theory {
        /// Preset name or configuration file.
        source: String,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
    /// Build a unit-scale amplitude pdf table and write it as text.
    Table {
        #[arg(long)]
        alpha: f64,
        /// Vector dimension (2·nr for Model I, 2 for Model II).
        #[arg(long)]
        dim: usize,
        /// Output file; defaults to a name inside --out-dir.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<CliIoError> for Failure {
    fn from(e: CliIoError) -> Self {
        match e {
            CliIoError::Config(_) | CliIoError::UnknownPreset(_) => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn read_config(path: &Path) -> Result<sas_mimo::montecarlo::SimConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

fn report(out: &PresetOutput) {
    for p in [&out.sim_csv, &out.theory_csv, &out.manifest] {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, flags } => {
            let c = read_config(&config)?;
            report(&run_config(&stem(&config), c, &flags.overrides(), &flags.out_dir)?);
        }
        Command::Preset { name: None, .. } => {
            for p in presets() {
                println!("{:<6} {:<36} {}", p.alias, p.name, p.description);
            }
        }
        Command::Preset { name: Some(name), flags } => report(&run_preset(&name, &flags.overrides(), &flags.out_dir)?),
        Command::Theory { source, out_dir } => {
            let (name, curve) = match find_preset(&source) {
                Ok(p) => (p.name.to_string(), preset_theory(&p)?),
                Err(_) => {
                    let path = PathBuf::from(&source);
                    (stem(&path), run_theory(&read_config(&path)?)?)
                }
            };
            std::fs::create_dir_all(&out_dir).map_err(|e| Failure::Runtime(format!("{}: {e}", out_dir.display())))?;
            let path = out_dir.join(format!("{name}_theory.csv"));
            let file = std::fs::File::create(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            write_csv(&theory_rows(&curve), std::io::BufWriter::new(file))
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        Command::Table { alpha, dim, output, out_dir } => {
            let path = match output {
                Some(p) => p,
                None => {
                    std::fs::create_dir_all(&out_dir).map_err(|e| Failure::Runtime(format!("{}: {e}", out_dir.display())))?;
                    out_dir.join(format!("amplitude_alpha{alpha}_d{dim}.txt"))
                }
            };
            let table = sas_mimo::cli_io::write_table(alpha, dim, &path).map_err(|e| match e {
                CliIoError::Table(e) => Failure::Usage(e.to_string()),
                e => Failure::from(e),
            })?;
            println!("wrote {} ({} nodes, r_max = {})", path.display(), table.grid().len(), table.r_max());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
