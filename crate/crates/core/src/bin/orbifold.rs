use clap::{Parser, Subcommand};
use orbifold_ymh::config::RunConfig;
use orbifold_ymh::harness::{self, Command};
use orbifold_ymh::Result;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "orbifold", version, about = "Theta-function Fuchsian solutions, magnetic spectra and bifurcation on the four-point orbifold")]
struct Cli {
    /// TOML run configuration (defaults apply when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// ODE integration tolerance, overriding `tolerances.ode`
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed, overriding `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Period lattice and half-period images
    Periods,
    /// Theta values and automorphy defects on a grid over the cell
    ThetaEval,
    /// Explicit solution: jumps, residues, column multipliers, samples
    SolveRh,
    /// Monodromy of the extracted Fuchsian system
    Monodromy,
    /// Chern–Weil integrals and parabolic degrees
    Degree,
    /// Magnetic Laplacian spectrum on the torus
    Spectrum,
    /// Branch scan over the metric scale
    Bifurcate {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Full cross-check battery
    Verify,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(t) = cli.tol {
        cfg.tolerances.ode = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let cmd = match &cli.command {
        Sub::Periods => Command::Periods,
        Sub::ThetaEval => Command::ThetaEval,
        Sub::SolveRh => Command::SolveRh,
        Sub::Monodromy => Command::Monodromy,
        Sub::Degree => Command::Degree,
        Sub::Spectrum => Command::Spectrum,
        Sub::Bifurcate { kappa, r_min, r_max, steps } => {
            Command::Bifurcate { kappa: *kappa, r_min: *r_min, r_max: *r_max, steps: *steps }
        }
        Sub::Verify => Command::Verify,
    };
    match config(&cli).and_then(|cfg| harness::run(&cmd, &cfg)) {
        Ok(summary) => {
            for l in &summary.lines {
                println!("{l}");
            }
            println!("artifacts in {}", summary.out_dir.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            let (code, report) = harness::error_report(&e);
            eprintln!("{report}");
            ExitCode::from(code as u8)
        }
    }
}
