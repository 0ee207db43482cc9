//! Command-line front end: `build`, `simulate`, `eigs`, `table3`, `table4`,
//! `convergence` and `wave2d`.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use phfem::analysis::Method;
use phfem::sim::Wave2dConfig;
use phfem::WeightsConfig;

use crate::config::{read_json, BuildConfig, MeshConfig, SimulateConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "phfem", version, about = "Structure-preserving port-Hamiltonian discretizations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble a model, check its structure and export it.
    Build(BuildArgs),
    /// Integrate an exported model with the implicit midpoint rule.
    Simulate(SimulateArgs),
    /// Positive spectrum of a chain or an exported model.
    Eigs(EigsArgs),
    /// Eigenvalue table of the parametrized flow maps.
    Table3(TableArgs),
    /// Eigenvalue table of the effort-averaging method.
    Table4(TableArgs),
    /// Relative error of the first eigenvalue under refinement.
    Convergence(ConvergenceArgs),
    /// Corner-driven wave on the square (0, 20)².
    Wave2d(WaveArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// JSON build config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Cells along x (rect) or edges (interval).
    #[arg(long)]
    pub n: Option<usize>,
    /// Cells along y; selects a rect mesh.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_prime: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model directory or its manifest.json.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    /// Exported model; otherwise a chain is built from the flags.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "ours")]
    pub method: Method,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_prime: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_values_t = [0.0, 0.5])]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 80, 160])]
    pub n: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WaveArgs {
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value = "set4")]
    pub preset: String,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 18.0)]
    pub t_end: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Merges a config file with command-line overrides.
pub fn build_config(args: &BuildArgs) -> CliResult<BuildConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_json::<BuildConfig>(p)?,
        None => {
            let n = args.n.ok_or_else(|| CliError::config("build needs --config or --n"))?;
            let mesh = match args.m {
                Some(m) => MeshConfig::Rect { n, m, h: 1.0 },
                None => MeshConfig::Interval { n },
            };
            BuildConfig {
                mesh,
                causality: None,
                weights: None,
                method: None,
                alpha: None,
                alpha_prime: None,
                hodge: Default::default(),
            }
        }
    };
    if args.config.is_some() {
        match &mut cfg.mesh {
            MeshConfig::Rect { n, m, .. } => {
                *n = args.n.unwrap_or(*n);
                *m = args.m.unwrap_or(*m);
            }
            MeshConfig::Interval { n } => *n = args.n.unwrap_or(*n),
        }
    }
    if let Some(p) = &args.preset {
        cfg.weights = Some(WeightsConfig::Preset(p.clone()));
    }
    cfg.method = args.method.or(cfg.method);
    cfg.alpha = args.alpha.or(cfg.alpha);
    cfg.alpha_prime = args.alpha_prime.or(cfg.alpha_prime);
    Ok(cfg)
}

/// Caps the rayon pool at `PHFEM_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("PHFEM_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::config(format!("PHFEM_THREADS='{v}' is not a count")))?;
        if n == 0 {
            return Err(CliError::config("PHFEM_THREADS must be positive"));
        }
        // A second initialization (in tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one command and returns its summary line.
pub fn run(cli: Cli) -> CliResult<String> {
    init_threads()?;
    match cli.command {
        Command::Build(a) => commands::cmd_build(&build_config(&a)?, &a.out),
        Command::Simulate(a) => {
            commands::resolve_model_dir(&a.model)?;
            let mut cfg: SimulateConfig = read_json(&a.config)?;
            cfg.sim.dt = a.dt.unwrap_or(cfg.sim.dt);
            cfg.sim.t_end = a.t_end.unwrap_or(cfg.sim.t_end);
            commands::cmd_simulate(&a.model, &cfg, &a.out)
        }
        Command::Eigs(a) => {
            let param = match a.method {
                Method::Ours if a.alpha_prime.is_some() => return Err(CliError::config("--alpha-prime needs --method golo")),
                Method::Golo if a.alpha.is_some() => return Err(CliError::config("--alpha needs --method ours")),
                Method::Ours => a.alpha.unwrap_or(0.0),
                Method::Golo => a.alpha_prime.unwrap_or(0.0),
            };
            commands::cmd_eigs(a.model.as_deref(), a.method, a.n, param, a.out.as_deref())
        }
        Command::Table3(a) => commands::cmd_table("table3", a.out.as_deref()),
        Command::Table4(a) => commands::cmd_table("table4", a.out.as_deref()),
        Command::Convergence(a) => commands::cmd_convergence(&a.alpha, &a.n, a.out.as_deref()),
        Command::Wave2d(a) => {
            let cfg = Wave2dConfig {
                n: a.n,
                preset: a.preset,
                dt: a.dt,
                t_end: a.t_end,
                snapshot_times: snapshot_times(a.t_end),
            };
            commands::cmd_wave2d(&cfg, &a.out)
        }
    }
}

/// Snapshots at 0, T/3, 2T/3 and T.
fn snapshot_times(t_end: f64) -> Vec<f64> {
    (0..=3).map(|i| t_end * i as f64 / 3.0).collect()
}
