//! Command-line front end: growth tables, kernel sampling, decay reports.
//!
//! Exit codes: 0 success, 2 configuration/domain errors, 3 numerical
//! failures. All artifacts are deterministic for a fixed configuration and
//! seed.

use bergman_lab::bergman::QuadratureSpec;
use bergman_lab::config::{
    load_json, ExperimentConfig, GeometryConfig, KGridSpec, MajorantConfig, PointGridSpec,
};
use bergman_lab::decay::DecayLaw;
use bergman_lab::experiment::{
    kernel_csv, parse_kernel_csv, run_compute_kernel, run_verify_decay, solve_fk_csv,
    solve_fk_table, GrowthValue, Pairing,
};
use bergman_lab::{Error, Precision};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bergman-lab",
    version,
    about = "Growth functions of majorant classes and numerical Bergman kernels on model geometries"
)]
struct Cli {
    /// Experiment configuration file providing defaults for the flags.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Output directory used when a subcommand does not name a file.
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,

    /// Seed for the randomized validation checks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the growth equation over a k-grid and emit a CSV table.
    SolveFk {
        /// Majorant config (inline JSON or path).
        #[arg(long)]
        majorant: Option<String>,
        /// Grid spec: start,stop,points,log|lin.
        #[arg(long = "k-grid")]
        k_grid: Option<String>,
        /// Band-boundary constant.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Evaluate the numerical kernel over a point grid and write sample CSV.
    ComputeKernel {
        /// Geometry config (inline JSON or path).
        #[arg(long)]
        geometry: Option<String>,
        #[arg(long)]
        k: f64,
        /// Point-set spec: polar:rmin,rmax,nr:tmin,tmax,nt or points:...
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Growth value for region tags (defaults to sqrt(k/log k)).
        #[arg(long = "f-val")]
        f_val: Option<f64>,
        /// Majorant config whose growth function tags the regions.
        #[arg(long)]
        majorant: Option<String>,
        /// Restrict to diagonal pairs (z, z).
        #[arg(long, default_value_t = false)]
        diagonal: bool,
        /// Output CSV path.
        #[arg(long = "out")]
        out_file: Option<PathBuf>,
    },
    /// Fit decay laws to sample CSVs and emit a JSON report.
    VerifyDecay {
        /// Sample CSV path (repeatable; rows are concatenated).
        #[arg(long, required = true)]
        samples: Vec<PathBuf>,
        #[arg(long)]
        majorant: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Envelope law to gate: gaussian | exponential | agmon.
        #[arg(long, default_value = "gaussian")]
        law: String,
        /// Optional output path for the JSON report (stdout otherwise).
        #[arg(long = "out")]
        out_file: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn precision_from_env() -> bergman_lab::Result<Precision> {
    match std::env::var("BERGMAN_LAB_PRECISION") {
        Ok(v) => v.parse(),
        Err(_) => Ok(Precision::Double),
    }
}

fn run(cli: Cli) -> bergman_lab::Result<()> {
    let config: ExperimentConfig = match &cli.config {
        Some(path) => load_json(path)?,
        None => ExperimentConfig::default(),
    };
    let precision = precision_from_env()?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);

    match cli.command {
        Command::SolveFk {
            majorant,
            k_grid,
            gamma,
        } => {
            let mc: MajorantConfig = resolve_majorant(&majorant, &config)?;
            let m = mc.build()?;
            m.validate()?;
            let grid_arg = k_grid
                .or(config.k_grid.clone())
                .ok_or_else(|| Error::Config("missing --k-grid".to_string()))?;
            let ks = KGridSpec::parse(&grid_arg)?.values();
            let gamma = gamma.or(config.gamma).unwrap_or(1.0);
            let rows = solve_fk_table(&m, &ks, gamma)?;
            let csv = solve_fk_csv(&rows);
            match &cli.out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("solve_fk.csv"), csv)?;
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::ComputeKernel {
            geometry,
            k,
            grid,
            gamma,
            f_val,
            majorant,
            diagonal,
            out_file,
        } => {
            let gc: GeometryConfig = match (&geometry, &config.geometry) {
                (Some(arg), _) => load_json(arg)?,
                (None, Some(cfg)) => cfg.clone(),
                (None, None) => return Err(Error::Config("missing --geometry".to_string())),
            };
            let g = gc.build()?;
            g.validate_positivity(seed, 100, 1.0)?;
            let grid_arg = grid
                .or(config.grid.clone())
                .ok_or_else(|| Error::Config("missing --grid".to_string()))?;
            let points = PointGridSpec::parse(&grid_arg)?.points();
            let gamma = gamma.or(config.gamma).unwrap_or(1.0);
            let growth_value = if let Some(v) = f_val {
                GrowthValue::Fixed(v)
            } else if let Some(marg) = &majorant {
                let mc: MajorantConfig = load_json(marg)?;
                GrowthValue::FromMajorant(mc.build()?)
            } else {
                GrowthValue::Analytic
            };
            let quad = QuadratureSpec::default().with_precision(precision);
            let pairing = if diagonal {
                Pairing::Diagonal
            } else {
                Pairing::All
            };
            let samples = run_compute_kernel(
                &g,
                k,
                &points,
                &points,
                gamma,
                &growth_value,
                &quad,
                pairing,
            )?;
            let csv = kernel_csv(&samples);
            match (out_file, &cli.out_dir) {
                (Some(path), _) => {
                    if let Some(parent) = path.parent() {
                        if !parent.as_os_str().is_empty() {
                            std::fs::create_dir_all(parent)?;
                        }
                    }
                    std::fs::write(path, csv)?;
                }
                (None, Some(dir)) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("kernel_samples.csv"), csv)?;
                }
                (None, None) => print!("{csv}"),
            }
            Ok(())
        }
        Command::VerifyDecay {
            samples,
            majorant,
            gamma,
            law,
            out_file,
        } => {
            let mut rows = Vec::new();
            for path in &samples {
                let text = std::fs::read_to_string(path)?;
                rows.extend(parse_kernel_csv(&text)?);
            }
            let growth_value = match (&majorant, &config.majorant) {
                (Some(arg), _) => {
                    let mc: MajorantConfig = load_json(arg)?;
                    GrowthValue::FromMajorant(mc.build()?)
                }
                (None, Some(mc)) => GrowthValue::FromMajorant(mc.build()?),
                (None, None) => GrowthValue::Analytic,
            };
            let gamma = gamma.or(config.gamma).unwrap_or(1.0);
            let law = match law.as_str() {
                "gaussian" => DecayLaw::GaussianInD2,
                "exponential" => DecayLaw::ExponentialInD,
                "agmon" => DecayLaw::AgmonSqrtK,
                other => {
                    return Err(Error::Config(format!(
                        "unknown law '{other}' (gaussian | exponential | agmon)"
                    )))
                }
            };
            let report = run_verify_decay(&rows, &growth_value, gamma, law)?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
            match (out_file, &cli.out_dir) {
                (Some(path), _) => {
                    if let Some(parent) = path.parent() {
                        if !parent.as_os_str().is_empty() {
                            std::fs::create_dir_all(parent)?;
                        }
                    }
                    std::fs::write(path, json)?;
                }
                (None, Some(dir)) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("decay_report.json"), json)?;
                }
                (None, None) => println!("{json}"),
            }
            Ok(())
        }
    }
}

fn resolve_majorant(
    arg: &Option<String>,
    config: &ExperimentConfig,
) -> bergman_lab::Result<MajorantConfig> {
    match (arg, &config.majorant) {
        (Some(a), _) => load_json(a),
        (None, Some(mc)) => Ok(mc.clone()),
        (None, None) => Err(Error::Config("missing --majorant".to_string())),
    }
}
