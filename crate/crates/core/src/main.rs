//! Command-line driver for refinement studies and interface sweeps.
//!
//! Exit codes: 0 on success, 2 when a linear solve fails, 3 for
//! configuration errors, 1 for anything else.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cutmix::study::{config_from_text, run_study, run_sweep, write_study_csv, write_sweep_csv, RunConfig};
use cutmix::Error;

#[derive(Parser, Debug)]
#[command(name = "cutmix", version, about = "Unfitted mixed finite element studies for elliptic interface problems")]
struct Cli {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// example1 .. example5.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    alpha1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha2: Option<f64>,
    /// Comma-separated subdivision counts, e.g. 8,16,32.
    #[arg(long)]
    mesh_sizes: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Interface offset for example3.
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Comma-separated offsets; switches to a sweep at the first mesh size.
    #[arg(long, allow_hyphen_values = true)]
    xi_list: Option<String>,
    #[arg(long)]
    mesh_file: Option<PathBuf>,
    /// Interface polyline refinement depth.
    #[arg(long)]
    depth: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Prefix for Matrix Market dumps of each system.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("problem", self.problem.clone());
        put("alpha1", self.alpha1.map(|v| v.to_string()));
        put("alpha2", self.alpha2.map(|v| v.to_string()));
        put("mesh_sizes", self.mesh_sizes.clone());
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("gamma1", self.gamma1.map(|v| v.to_string()));
        put("gamma2", self.gamma2.map(|v| v.to_string()));
        put("xi", self.xi.map(|v| v.to_string()));
        put("xi_list", self.xi_list.clone());
        put("mesh_file", self.mesh_file.as_ref().map(|p| p.display().to_string()));
        put("depth", self.depth.map(|v| v.to_string()));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("dump_matrix", self.dump_matrix.as_ref().map(|p| p.display().to_string()));
        out
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            config_from_text(&text)?
        }
        None => RunConfig::default(),
    };
    for (k, v) in cli.overrides() {
        cfg.set(k, &v)?;
    }
    if cfg.problem.is_none() {
        return Err(Error::Config("--problem is required (example1 .. example5)".into()));
    }
    if let Some(path) = &cfg.mesh_file {
        if !path.is_file() {
            return Err(Error::Config(format!("mesh file {} is not readable", path.display())));
        }
    }
    Ok(cfg)
}

fn run(cfg: &RunConfig) -> Result<(), Error> {
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    if cfg.xi_list.is_empty() {
        write_study_csv(&run_study(cfg)?, &mut out)?;
    } else {
        write_sweep_csv(&run_sweep(cfg)?, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Singular { .. } | Error::Solver(_) => 2,
        Error::Config(_) | Error::Import { .. } | Error::InvalidMesh(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    let result = build_config(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                eprintln!("usage: cutmix --problem <example1..example5> [--alpha1 A] [--alpha2 A] [--mesh-sizes 8,16,32]");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
