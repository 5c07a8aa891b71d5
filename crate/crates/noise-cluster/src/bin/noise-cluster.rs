use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noise_cluster::calibrate::ScanGrids;
use noise_cluster::device::{DeviceConfig, Geometry};
use noise_cluster::pipeline::{self, Figure, Pipeline};
use noise_cluster::{Error, Result};

#[derive(Parser)]
#[command(name = "noise-cluster", version, about = "Pulse-level noise simulation and cluster-expanded noise models for a 3-qubit device")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Default,
    Coarse,
}

#[derive(Args, Clone)]
struct Common {
    /// Device geometry: linear or triangle.
    #[arg(long, default_value = "linear")]
    geometry: Geometry,
    /// JSON device configuration; overrides --geometry.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Calibrate single-qubit and echoed cross-resonance pulses.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "default")]
        grid: GridKind,
        /// Also copy the pulse table to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate the two stabilizer schedules to process matrices.
    SimulatePropagators {
        #[command(flatten)]
        common: Common,
    },
    /// Effective generators and their cluster decomposition.
    Decompose {
        #[command(flatten)]
        common: Common,
    },
    /// Truncated, gain-scaled approximate channels.
    BuildApprox {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: usize,
        /// Gain value or "opt" for the optimized one.
        #[arg(long, default_value = "1.0")]
        gain: String,
    },
    /// Repeated syndrome extraction on the four Bell inputs.
    #[command(name = "run-202")]
    Run202 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value = "opt")]
        gain: String,
        #[arg(long, default_value_t = 8)]
        rounds: usize,
    },
    /// Choose the gain maximizing accuracy subject to honesty.
    OptimizeGain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = 8)]
        rounds: usize,
        /// start:stop:step
        #[arg(long)]
        grid: Option<String>,
    },
    /// Every stage for one geometry, both orders.
    All {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "default")]
        grid: GridKind,
        #[arg(long, default_value_t = 8)]
        rounds: usize,
    },
    /// Write the CSV of a figure (4, 5, 6 or 7).
    Report {
        #[arg(long)]
        figure: u32,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn pipeline_for(c: &Common) -> Result<Pipeline> {
    let config = match &c.config {
        Some(p) => serde_json::from_str::<DeviceConfig>(&std::fs::read_to_string(p)?)?,
        None => DeviceConfig::reference(c.geometry),
    };
    config.validate()?;
    let mut p = Pipeline::new(&c.out_dir, config);
    p.config_path = c.config.clone();
    p.verbose = !c.quiet;
    Ok(p)
}

fn grids(g: GridKind) -> ScanGrids {
    match g {
        GridKind::Default => ScanGrids::default(),
        GridKind::Coarse => ScanGrids::coarse(),
    }
}

fn gain(p: &Pipeline, order: usize, s: &str) -> Result<f64> {
    if s == "opt" {
        return p.optimized_gain(order);
    }
    let g: f64 = s.parse().map_err(|_| Error::InvalidInput(format!("gain {s:?} is neither a number nor \"opt\"")))?;
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Domain(format!("gain must be positive, got {g}")));
    }
    Ok(g)
}

fn run(cli: Cli) -> Result<()> {
    pipeline::init_threads()?;
    match cli.cmd {
        Cmd::Calibrate { common, grid, out } => {
            let mut p = pipeline_for(&common)?;
            p.grids = grids(grid);
            let a = p.calibrate()?;
            for r in &a.data.calibration.results {
                println!("{:<12} f={:.4} MHz  A={:.6e}  F={:.6}", r.name, r.freq_hz / 1e6, r.amplitude, r.achieved_fidelity);
            }
            if let Some(out) = out {
                std::fs::copy(p.pulses_path(), out)?;
            }
        }
        Cmd::SimulatePropagators { common } => {
            for c in pipeline_for(&common)?.simulate_propagators()?.data {
                println!(
                    "{}: duration {:.0} ns, average fidelity {:.5}, steps {}",
                    c.stabilizer.name(),
                    c.duration * 1e9,
                    c.average_fidelity,
                    c.step_count
                );
            }
        }
        Cmd::Decompose { common } => {
            for d in pipeline_for(&common)?.decompose()?.data {
                println!(
                    "{}: |L|_F = {:.4}, max Re eig = {:.3e}, {} clusters",
                    d.stabilizer.name(),
                    d.generator_norm,
                    d.max_re_eigenvalue,
                    d.decomposition.ordered().count()
                );
            }
        }
        Cmd::BuildApprox { common, order, gain: g } => {
            let p = pipeline_for(&common)?;
            let g = gain(&p, order, &g)?;
            p.build_approx(order, g)?;
            println!("{}", p.approx_path(order, g).display());
        }
        Cmd::Run202 { common, order, gain: g, rounds } => {
            let p = pipeline_for(&common)?;
            let g = gain(&p, order, &g)?;
            let r = p.run_202(order, g, rounds)?.data.report;
            println!("round  D(i,a)     D(i,p)     D(a,p)     honesty  accuracy");
            for a in &r.averages {
                println!(
                    "{:>5}  {:.4e} {:.4e} {:.4e} {:.4}   {:.3}",
                    a.round, a.d_ideal_actual, a.d_ideal_approx, a.d_actual_approx, a.honesty, a.accuracy
                );
            }
        }
        Cmd::OptimizeGain { common, order, rounds, grid } => {
            let p = pipeline_for(&common)?;
            let grid = grid.as_deref().map(pipeline::parse_grid).transpose()?;
            let s = p.optimize_gain(order, rounds, grid)?.data;
            let a = s.report.average_at(rounds).ok_or_else(|| Error::Inconsistent("missing final round".into()))?;
            println!("g_opt = {}  honesty = {:.4}  accuracy = {:.3}", s.g_opt, a.honesty, a.accuracy);
        }
        Cmd::All { common, grid, rounds } => {
            let mut p = pipeline_for(&common)?;
            p.grids = grids(grid);
            for s in p.run_all(rounds)? {
                println!("order {}: g_opt = {}", s.data.order, s.data.g_opt);
            }
        }
        Cmd::Report { figure, out_dir, out } => {
            let f = Figure::from_number(figure)?;
            let rows = match &out {
                Some(path) => pipeline::report(&out_dir, f, std::fs::File::create(path)?)?,
                None => pipeline::report(&out_dir, f, std::io::stdout().lock())?,
            };
            if out.is_some() {
                eprintln!("{rows} rows");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
