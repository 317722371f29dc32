use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gfonls::engine::{evaluate_grid, FieldMeta, Grid, SolutionField};
use gfonls::io::output::{self, RunMetadata};
use gfonls::io::{parse_config, read_csv, ConfigError, OutputKind, RunConfig};
use gfonls::spectral::{lambda_of_z, SpectralPoint};
use gfonls::spectrum::format_theta;
use gfonls::trace::{self, Contour};
use gfonls::verification::{residual, ResidualReport};
use gfonls::{lax, ModelParams};

#[derive(Parser)]
#[command(name = "gfonls", version, about = "Reflectionless solutions of the fifth-order NLS on a nonzero background")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the solution on the configured grid and write the outputs.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Directory that relative output paths resolve against.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the PDE residual report as JSON.
    Verify {
        #[arg(short, long)]
        config: PathBuf,
        /// Also evaluate on a grid refined by this factor and report the order.
        #[arg(long)]
        refine: Option<usize>,
        /// Check a field stored as CSV instead of regenerating it.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Sample s11 and s22 along a contour and write CSV.
    Trace {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        contour: ContourArg,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the printed dispersion with the one extracted from the Lax pair.
    Calibrate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the theta condition of the configured spectrum.
    Theta {
        #[arg(short, long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ContourArg {
    Real,
    Circle,
}

enum Failure {
    Config(ConfigError),
    Numeric(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(anyhow!("{}: {e}", path.display()))
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(anyhow!("{e}"))
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_config(&text)?)
}

fn compute(cfg: &RunConfig, grid: &Grid) -> Result<SolutionField, Failure> {
    let engine = cfg.engine()?;
    let field = evaluate_grid(&engine, grid, &cfg.digest()).map_err(numeric)?;
    if field.meta.flagged_points == grid.len() {
        return Err(numeric(format!("all {} grid points are flagged", grid.len())));
    }
    Ok(field)
}

fn simulate(config: &Path, out_dir: Option<&Path>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let field = compute(&cfg, &cfg.grid())?;
    let meta = RunMetadata::new(&field, &cfg);
    for o in &cfg.outputs {
        let path = match out_dir {
            Some(d) => d.join(&o.path),
            None => PathBuf::from(&o.path),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let written = match o.kind {
            OutputKind::Csv => output::write_csv(&field, &path),
            OutputKind::Pgm => output::write_pgm(&field, &path),
            OutputKind::JsonMeta => output::write_metadata(&meta, &path),
        };
        written.map_err(|e| match e {
            output::OutputError::PgmTooSmall { .. } => Failure::Config(ConfigError::Invalid(vec![format!(
                "outputs: {e}"
            )])),
            e => io_err(&path, e),
        })?;
    }
    print!("{}", meta.to_json());
    Ok(())
}

fn refined(g: &Grid, r: usize) -> Grid {
    let n = |n: usize| if n > 1 { (n - 1) * r + 1 } else { n };
    Grid::new((g.x0, g.x1, n(g.nx)), (g.t0, g.t1, n(g.nt)))
}

fn verify(config: &Path, refine: Option<usize>, field_csv: Option<&Path>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let p = cfg.params()?;
    let opts = cfg.residual_options();
    let field = match field_csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let csv = read_csv(&text).map_err(|e| io_err(path, e))?;
            let engine = cfg.engine()?;
            csv.into_field(FieldMeta::for_engine(&engine, cfg.digest()))
        }
        None => compute(&cfg, &cfg.grid())?,
    };
    let coarse = residual(&field, &p, opts).map_err(numeric)?;
    let json = match refine {
        None => serde_json::to_value(&coarse),
        Some(r) if r >= 2 => {
            let fine_field = compute(&cfg, &refined(&field.grid, r))?;
            let fine = residual(&fine_field, &p, opts).map_err(numeric)?;
            let reduction = ResidualReport::reduction_factor(&coarse, &fine).map_err(numeric)?;
            let fine = ResidualReport::refine(&coarse, &fine).map_err(numeric)?;
            serde_json::to_value(serde_json::json!({
                "coarse": coarse,
                "fine": fine,
                "reduction_factor": reduction,
                "convergence_order": fine.convergence_order,
            }))
        }
        Some(r) => {
            return Err(Failure::Config(ConfigError::Invalid(vec![format!("--refine: factor must be >= 2, got {r}")])))
        }
    }
    .map_err(numeric)?;
    println!("{}", serde_json::to_string_pretty(&json).map_err(numeric)?);
    Ok(())
}

fn trace_cmd(config: &Path, contour: ContourArg, samples: usize, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let p = cfg.params()?;
    let spectrum = cfg.spectrum_raw();
    let contour = match contour {
        ContourArg::Real => Contour::Real,
        ContourArg::Circle => Contour::Circle,
    };
    let eig = spectrum.eigenvalues();
    let mut s = String::from("z_re,z_im,s11_re,s11_im,s22_re,s22_im,abs_s11\n");
    for z in trace::contour_points(contour, &p, samples) {
        let Some(ev) = trace::evaluate(z, &eig, &p, spectrum.pole_order()) else { continue };
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            z.re,
            z.im,
            ev.s11.re,
            ev.s11.im,
            ev.s22.re,
            ev.s22.im,
            ev.s11.norm()
        ));
    }
    match out {
        Some(path) => std::fs::write(path, s).map_err(|e| io_err(path, e)),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

/// Random points in the annulus `0.2ψ0 < |z| < 5ψ0`, away from `±iψ0`.
fn sample_points(p: &ModelParams, n: usize, seed: u64) -> Vec<SpectralPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = p.psi0() * rng.gen_range(0.2..5.0);
        let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        if let Ok(z) = SpectralPoint::new(Complex64::from_polar(r, a)) {
            if lambda_of_z(z, p).norm() > 1e-3 * p.psi0() {
                out.push(z);
            }
        }
    }
    out
}

fn calibrate(config: &Path, samples: usize, seed: u64) -> Result<(), Failure> {
    let cfg = load(config)?;
    let p = cfg.params()?;
    let report = lax::calibrate(&p, &sample_points(&p, samples, seed));
    println!("{}", serde_json::to_string_pretty(&report).map_err(numeric)?);
    Ok(())
}

fn theta(config: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    println!("{}", format_theta(&cfg.spectrum_raw()));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, out_dir, workers } => {
            let run = || simulate(&config, out_dir.as_deref());
            match workers {
                Some(w) => rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(numeric)?
                    .install(run),
                None => run(),
            }
        }
        Command::Verify { config, refine, field } => verify(&config, refine, field.as_deref()),
        Command::Trace { config, contour, samples, out } => trace_cmd(&config, contour, samples, out.as_deref()),
        Command::Calibrate { config, samples, seed } => calibrate(&config, samples, seed),
        Command::Theta { config } => theta(&config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e}"),
                Failure::Numeric(e) => eprintln!("numerical failure: {e}"),
                Failure::Io(e) => eprintln!("I/O error: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}
