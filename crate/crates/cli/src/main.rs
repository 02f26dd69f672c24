//! `medusa`: compute matings of quadratic polynomials, render them, and sweep
//! families of angles.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use medusa_core::medusa::{run_mating, MapParams, MatingConfig, MatingResult, Precision, Status};
use medusa_core::render::{
    default_m, render_plane, render_sphere, write_image, Bounds, Image, ImageFormat, View,
};
use medusa_core::sweep::{any_success, sweep, write_summary};
use medusa_core::{Execution, RationalAngle, Trace};

#[derive(Parser)]
#[command(
    name = "medusa",
    version,
    about = "Matings of quadratic polynomials via the Medusa algorithm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the mating of two angles and print the limit map.
    Mate(MateArgs),
    /// Render approximations K_m of a mating's Julia set.
    Render(RenderArgs),
    /// Mate every n/D with a fixed angle.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct IterOpts {
    /// Maximum number of iterations.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    /// Convergence threshold on the chordal step of the critical values.
    #[arg(long, default_value_t = 1e-10, value_parser = positive_f64)]
    tol: f64,
    /// Consecutive small (or growing) steps needed to stop.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    patience: u64,
    /// Largest rotation-number denominator searched when locating limbs.
    #[arg(long, default_value_t = 64)]
    q_max: u32,
    /// Run even when the angles lie in complex conjugate limbs.
    #[arg(long)]
    force: bool,
    /// Arithmetic for the iteration; `auto` uses double-double when either
    /// angle has an even denominator.
    #[arg(long, value_enum, default_value_t = PrecisionArg::Auto)]
    precision: PrecisionArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Auto,
    Double,
    DoubleDouble,
}

impl IterOpts {
    fn config(&self) -> MatingConfig {
        MatingConfig {
            max_iter: self.max_iter as usize,
            tol: self.tol,
            patience: self.patience as usize,
            q_max: self.q_max,
            allow_unmateable: self.force,
            precision: match self.precision {
                PrecisionArg::Auto => Precision::Auto,
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::DoubleDouble => Precision::DoubleDouble,
            },
            ..MatingConfig::default()
        }
    }
}

#[derive(Args)]
struct MateArgs {
    theta1: RationalAngle,
    theta2: RationalAngle,
    #[command(flatten)]
    iter: IterOpts,
    /// Write the parameter trace to this file.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Projection {
    Plane,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Ppm,
    Png,
}

#[derive(Args)]
struct RenderArgs {
    /// Trace file written by `medusa mate --trace-out`.
    #[arg(long, conflicts_with = "mate", required_unless_present = "mate")]
    trace: Option<PathBuf>,
    /// Run the mating of these two angles instead of reading a trace.
    #[arg(long, num_args = 2, value_names = ["THETA1", "THETA2"])]
    mate: Option<Vec<RationalAngle>>,
    #[arg(long, value_enum, default_value_t = Projection::Plane)]
    proj: Projection,
    /// Plane window.
    #[arg(long, num_args = 4, value_names = ["X0", "X1", "Y0", "Y1"], allow_negative_numbers = true,
          default_values_t = [-4.0, 4.0, -4.0, 4.0])]
    bounds: Vec<f64>,
    /// Image size in pixels.
    #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [512, 512])]
    res: Vec<usize>,
    /// Which approximation to draw; defaults to min(14, trace length).
    #[arg(long, conflicts_with = "series")]
    m: Option<usize>,
    /// Draw several approximations, one file each.
    #[arg(long, num_args = 1..)]
    series: Option<Vec<usize>>,
    /// Sphere view: rotation about the polar axis, in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    yaw: f64,
    /// Sphere view: tilt bringing 0 towards the viewer, in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pitch: f64,
    /// Sphere view: rotation about the viewing direction, in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    roll: f64,
    /// Output format; guessed from the file extension when absent.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file. With --series, `_K<m>` is inserted before the extension.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    iter: IterOpts,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    denominator: u64,
    /// The fixed partner angle.
    #[arg(long = "with")]
    with: RationalAngle,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory for summary.tsv and per-run traces; the summary goes to
    /// standard output when absent.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    iter: IterOpts,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

/// Process exit code for a finished mating.
fn exit_code(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::NotMateable => 2,
        Status::Degenerate => 3,
        Status::Stagnated | Status::Diverged => 4,
    }
}

fn format_complex(z: num_complex::Complex64) -> String {
    format!("{:.12}{:+.12}i", z.re, z.im)
}

fn write_trace(path: &Path, r: &MatingResult) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    Trace::from_result(r).write(&mut w)?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

fn cmd_mate(args: &MateArgs) -> Result<ExitCode> {
    let r = run_mating(args.theta1, args.theta2, &args.iter.config());
    if let Some(path) = &args.trace_out {
        write_trace(path, &r)?;
    }
    let mut out = io::stdout().lock();
    writeln!(out, "mating {} with {}: {}", r.theta1, r.theta2, r.status)?;
    if let Some(msg) = &r.message {
        writeln!(out, "note: {msg}")?;
    }
    writeln!(out, "iterations: {}", r.iterations_run)?;
    if let Some(p) = r.best() {
        if r.status != Status::Converged {
            let best = r.best_index.map_or(0, |i| i + 1);
            writeln!(out, "best estimate at iteration {best}")?;
        }
        writeln!(
            out,
            "a = {}  b = {}",
            format_complex(p.a),
            format_complex(p.b)
        )?;
    }
    Ok(ExitCode::from(exit_code(r.status)))
}

fn series_path(out: &Path, m: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_K{m}.{}", ext.to_string_lossy()),
        None => format!("{stem}_K{m}"),
    };
    out.with_file_name(name)
}

fn cmd_render(args: &RenderArgs) -> Result<ExitCode> {
    let trace: Vec<MapParams> = match (&args.trace, &args.mate) {
        (Some(path), _) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Trace::read(BufReader::new(f))
                .with_context(|| format!("reading trace {}", path.display()))?
                .params
        }
        (None, Some(angles)) => {
            let r = run_mating(angles[0], angles[1], &args.iter.config());
            log::info!("mating {} with {}: {}", angles[0], angles[1], r.status);
            if r.status == Status::NotMateable {
                bail!(
                    "{} and {} are not mateable (use --force to run anyway)",
                    angles[0],
                    angles[1]
                );
            }
            r.trace
        }
        (None, None) => unreachable!("clap requires --trace or --mate"),
    };

    let ms = match (&args.series, args.m) {
        (Some(series), _) => series.clone(),
        (None, Some(m)) => vec![m],
        (None, None) => vec![default_m(trace.len())],
    };
    for &m in &ms {
        ensure!(
            m <= trace.len(),
            "m = {m} exceeds the trace length {}",
            trace.len()
        );
    }
    let (width, height) = (args.res[0], args.res[1]);
    ensure!(width >= 1 && height >= 1, "resolution must be positive");
    let bounds = Bounds {
        x0: args.bounds[0],
        x1: args.bounds[1],
        y0: args.bounds[2],
        y1: args.bounds[3],
    };
    ensure!(
        bounds.x0 < bounds.x1 && bounds.y0 < bounds.y1,
        "bounds must satisfy x0 < x1 and y0 < y1"
    );
    let view = View {
        yaw: args.yaw.to_radians(),
        pitch: args.pitch.to_radians(),
        roll: args.roll.to_radians(),
    };
    let format = match args.format {
        Some(FormatArg::Ppm) => ImageFormat::Ppm,
        Some(FormatArg::Png) => ImageFormat::Png,
        None => ImageFormat::from_path(&args.out),
    };

    let exec = Execution::default();
    for &m in &ms {
        let img: Image = match args.proj {
            Projection::Plane => render_plane(&trace, m, &bounds, width, height, exec),
            Projection::Sphere => render_sphere(&trace, m, width, height, &view, exec),
        };
        let path = if args.series.is_some() {
            series_path(&args.out, m)
        } else {
            args.out.clone()
        };
        write_image(&img, &path, format).with_context(|| format!("writing {}", path.display()))?;
        println!("K_{m} -> {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let exec = match args.jobs {
        Some(k) => Execution::with_threads(k),
        None => Execution::default(),
    };
    let rows = sweep(args.denominator, args.with, &args.iter.config(), exec);
    match &args.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for row in &rows {
                if row.result.trace.is_empty() {
                    continue;
                }
                let name = format!("{}_{}.trace", row.n, args.denominator);
                write_trace(&dir.join(name), &row.result)?;
            }
            let path = dir.join("summary.tsv");
            let mut w = BufWriter::new(
                File::create(&path).with_context(|| format!("creating {}", path.display()))?,
            );
            write_summary(&rows, &mut w)?;
            w.flush()?;
            println!("{} rows -> {}", rows.len(), path.display());
        }
        None => write_summary(&rows, io::stdout().lock())?,
    }
    Ok(if any_success(&rows) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEDUSA_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Mate(a) => cmd_mate(a),
        Command::Render(a) => cmd_render(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
