use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhinr_cli::experiments::replot;
use mhinr_cli::{
    cmd_compare, cmd_fit, cmd_perlin, cmd_sweep_heads, cmd_sweep_octaves, ExperimentConfig,
    ExperimentKind, Overrides, Result,
};
use mhinr_core::signal::Image;

/// Multi-head implicit neural representations for grayscale images.
#[derive(Parser)]
#[command(name = "mhinr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on an image or a Perlin target
    Fit(Overrides),
    /// PSNR against Perlin octave count for several head grids
    SweepOctaves(Overrides),
    /// Train on a 2x downsampled image, evaluate on the original
    SweepHeads(Overrides),
    /// Multi-head model against parameter-matched SIREN and Fourier features
    Compare(Overrides),
    /// Write a fractal Perlin noise image
    Perlin(Overrides),
    /// Regenerate the SVG plot of a sweep CSV
    Plot { csv: PathBuf },
}

fn resolve(kind: ExperimentKind, overrides: Overrides) -> Result<ExperimentConfig> {
    ExperimentConfig::resolve(kind, overrides.with_config_file()?)
}

fn stats(img: &Image) -> String {
    let (min, max) = img.min_max();
    format!("min {min:.6} max {max:.6} mean {:.6}", img.mean())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(o) => {
            let cfg = resolve(ExperimentKind::Fit, o)?;
            let report = cmd_fit(&cfg)?;
            println!(
                "train PSNR {:.2} dB, {} params, outputs in {}",
                report.train_psnr_db,
                report.params,
                cfg.out_dir.display()
            );
        }
        Command::SweepOctaves(o) => {
            let cfg = resolve(ExperimentKind::SweepOctaves, o)?;
            cmd_sweep_octaves(&cfg)?;
            println!("wrote {}", cfg.out_dir.join("octaves.csv").display());
        }
        Command::SweepHeads(o) => {
            let cfg = resolve(ExperimentKind::SweepHeads, o)?;
            cmd_sweep_heads(&cfg)?;
            println!("wrote {}", cfg.out_dir.join("heads.csv").display());
        }
        Command::Compare(o) => {
            let cfg = resolve(ExperimentKind::Compare, o)?;
            cmd_compare(&cfg)?;
            println!("wrote {}", cfg.out_dir.join("compare.csv").display());
        }
        Command::Perlin(o) => {
            let cfg = resolve(ExperimentKind::Perlin, o)?;
            let (img, path) = cmd_perlin(&cfg)?;
            println!("{}: {}", path.display(), stats(&img));
        }
        Command::Plot { csv } => {
            println!("wrote {}", replot(&csv)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
