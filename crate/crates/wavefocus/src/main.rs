use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wavefocus::run::{self, Figure};
use wavefocus::{exit, CliResult, DesignConfig, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "wavefocus",
    version,
    about = "Design particle media that focus a scattered plane wave"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the design pipeline and write a bundle.
    Design {
        config: PathBuf,
        /// Output directory; default `$WAVEFOCUS_OUTPUT_DIR`, else `<config stem>_bundle`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the forward problem for a bundle's potential and compare far fields.
    Verify {
        bundle: PathBuf,
        /// Output directory; default `$WAVEFOCUS_OUTPUT_DIR`, else the bundle.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design and verify for each clipping bound T.
    SweepT {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        /// Output directory; default `$WAVEFOCUS_OUTPUT_DIR`, else `<config stem>_sweep`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spherical-harmonic analysis of sphere samples (theta, phi, re, im).
    Analyze {
        samples: PathBuf,
        /// Band limit; default the largest the grid resolves.
        #[arg(long)]
        band: Option<usize>,
        /// Output directory; default `$WAVEFOCUS_OUTPUT_DIR`, else next to the samples.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a figure from a verified bundle.
    Plot {
        bundle: PathBuf,
        #[arg(long, value_enum)]
        figure: FigureArg,
        /// Output directory; default `$WAVEFOCUS_OUTPUT_DIR`, else the bundle.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Pattern,
    Contour,
}

/// `--out`, then the environment override, then the command's default.
fn output_dir(flag: Option<PathBuf>, default: impl FnOnce() -> PathBuf) -> PathBuf {
    flag.or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    })
    .unwrap_or_else(default)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Design { config, out } => {
            let cfg = DesignConfig::load(&config)?;
            let out = output_dir(out, || sibling(&config, "_bundle"));
            let r = run::run_design(&cfg, &out)?;
            println!(
                "design: max|q| = {:e}, min denominator = {:e}, clipped {}, bundle {}",
                r.report.max_abs_q,
                r.report.min_denominator,
                r.report.clipped_count,
                out.display()
            );
        }
        Command::Verify { bundle, out } => {
            let out = output_dir(out, || bundle.clone());
            let r = run::run_verify(&bundle, &out)?;
            let f = r
                .report
                .in_cone_fraction
                .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
            println!(
                "verify: relative misfit {:.4}, in-cone fraction {f}, bound {}, {} iterations",
                r.report.relative_misfit, r.report.bound_report.status, r.report.iterations
            );
        }
        Command::SweepT { config, values, out } => {
            let cfg = DesignConfig::load(&config)?;
            let out = output_dir(out, || sibling(&config, "_sweep"));
            for r in run::sweep_t(&cfg, &values, &out)? {
                println!(
                    "T = {:e}: {} max|q| = {:e} relative misfit = {:.4} in-cone = {:.4}",
                    r.t, r.status, r.max_abs_q, r.relative_misfit, r.in_cone_fraction
                );
            }
        }
        Command::Analyze { samples, band, out } => {
            let out = output_dir(out, || {
                samples.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
            });
            let a = run::analyze_samples(&samples, band, &out)?;
            println!(
                "analyze: band {} on {} x {}, norm {:e}",
                a.band, a.n_theta, a.n_phi, a.l2_norm
            );
        }
        Command::Plot { bundle, figure, out } => {
            let out = output_dir(out, || bundle.clone());
            let figure = match figure {
                FigureArg::Pattern => Figure::Pattern,
                FigureArg::Contour => Figure::Contour,
            };
            let path = run::plot(&bundle, figure, &out)?;
            println!("plot: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("wavefocus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
