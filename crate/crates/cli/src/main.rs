//! Command-line front end: tube classification, scene development with JSON
//! and SVG export, convexity certification, and boundary-torus parameter
//! scans.
//!
//! Exit codes: 0 pass, 1 mathematical failure with witness, 2 input error,
//! 3 internal consistency failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod ops;

#[derive(Parser)]
#[command(name = "bulgekit", version, about = "convex projective gluing engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a tube descriptor: complete/uniformisable, special margin.
    ClassifyTube {
        /// Tube JSON file: {d, mu, sl2, lift_index, C}.
        file: PathBuf,
    },
    /// Develop a scene to a tile set (JSON), optionally rendering an SVG.
    Develop {
        scene: PathBuf,
        /// Development depth (defaults to the scene's depth field).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// SVG output path (dimension 2 scenes only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Certify convexity of a scene; writes the certificate as JSON.
    Certify {
        scene: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        /// Override the scene's sampling segment count.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the scene's tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the scene's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Certificate output path (defaults to stdout only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan boundary-torus parameters over a grid in (a, b, c).
    Scan {
        /// Corner angle in radians.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
        theta: f64,
        /// Range start:end:count for a.
        #[arg(long, default_value = "1.01:2.0:5")]
        a: String,
        /// Range start:end:count for b.
        #[arg(long, default_value = "3.0:8.0:5")]
        b: String,
        /// Range start:end:count for c.
        #[arg(long, default_value = "1.0:6.0:5")]
        c: String,
        /// Output file; extension selects csv or json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a ready-made demo scene.
    DemoScene {
        /// quad-double or sector-double.
        #[arg(long, default_value = "quad-double")]
        kind: String,
        /// Corner angle in radians.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        theta: f64,
        /// Bulging parameter (alternates with its inverse on the double).
        #[arg(long, default_value_t = 1.0)]
        bulge: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 10000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::ClassifyTube { file } => ops::classify_tube(&file),
        Command::Develop {
            scene,
            depth,
            out,
            svg,
        } => ops::develop(&scene, depth, &out, svg.as_deref()),
        Command::Certify {
            scene,
            depth,
            samples,
            tol,
            seed,
            out,
        } => ops::certify(&scene, depth, samples, tol, seed, out.as_deref()),
        Command::Scan { theta, a, b, c, out } => ops::scan(theta, &a, &b, &c, out.as_deref()),
        Command::DemoScene {
            kind,
            theta,
            bulge,
            seed,
            depth,
            samples,
            out,
        } => ops::demo_scene(&kind, theta, bulge, seed, depth, samples, &out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
