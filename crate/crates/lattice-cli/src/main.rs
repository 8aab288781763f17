//! Command-line surface for the scene-layout compiler.
//!
//! Subcommands: `compile` (layout + config -> masks + manifest), `generate`
//! (instruction -> generator -> compiled artifacts), `validate`, `forge`
//! (dataset construction), and `inspect`. Every subcommand is deterministic
//! given its inputs, flags, and `--seed`.
//!
//! Exit codes are a stable CI contract: 0 success, 1 validation failure,
//! 2 consistency violation, 3 generator failure, 4 I/O error.

mod cmd_compile;
mod cmd_forge;
mod cmd_generate;
mod cmd_inspect;
mod cmd_validate;
mod util;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lattice_core::exec::ExecMode;

use util::Logger;

#[derive(Parser)]
#[command(name = "lattice", version, about = "Deterministic scene-layout compiler")]
struct Cli {
    /// Root seed for all stochastic stages.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Emit machine-readable JSON events on stdout.
    #[arg(long = "json-logs", global = true)]
    json_logs: bool,
    /// Force sequential execution (default is parallel where available).
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CompileFlags {
    /// Output mask resolution in pixels per side.
    #[arg(long, default_value_t = 512)]
    resolution: usize,
    /// Gaussian edge-blend standard deviation in pixels.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Amplitude of the value noise in mask transition bands.
    #[arg(long = "noise-amp", default_value_t = 0.05)]
    noise_amp: f64,
    /// World side length in meters.
    #[arg(long = "world-size", default_value_t = 1024.0)]
    world_size: f64,
    /// Elevation value 65535 in meters.
    #[arg(long = "max-height", default_value_t = 256.0)]
    max_height: f64,
    /// Elevation zone thresholds as `low,high` (of 65535).
    #[arg(long = "zone-thresholds", default_value = "20000,45000", value_parser = parse_thresholds)]
    zone_thresholds: (u16, u16),
    /// Minimum distance between buildings in meters.
    #[arg(long = "d-min", default_value_t = 15.0)]
    d_min: f64,
    /// Nearest-neighbor distance beyond which a building is flagged isolated.
    #[arg(long = "d-max", default_value_t = 60.0)]
    d_max: f64,
    /// Maximum terrain slope (degrees) for building sites.
    #[arg(long = "slope-max", default_value_t = 15.0)]
    slope_max: f64,
    /// Uniform yaw jitter (degrees) applied to building orientations.
    #[arg(long = "yaw-jitter", default_value_t = 15.0)]
    yaw_jitter: f64,
}

fn parse_thresholds(s: &str) -> Result<(u16, u16), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "expected `low,high`".to_string())?;
    let low: u16 = a.trim().parse().map_err(|e| format!("low: {e}"))?;
    let high: u16 = b.trim().parse().map_err(|e| format!("high: {e}"))?;
    if low >= high {
        return Err(format!("thresholds must be strictly increasing, got {low} >= {high}"));
    }
    Ok((low, high))
}

#[derive(Subcommand)]
enum Command {
    /// Compile a layout and configuration into masks and a placement manifest.
    Compile {
        /// Layout string file (p lines of p symbols).
        #[arg(long)]
        layout: PathBuf,
        /// Environment configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// 16-bit grayscale heightmap PNG (flat zero terrain when omitted).
        #[arg(long)]
        heightmap: Option<PathBuf>,
        /// Symbol table: `loveda`, `wild`, or a JSON file path.
        #[arg(long, default_value = "loveda")]
        table: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: CompileFlags,
    },
    /// Generate a layout and configuration from an instruction, then compile.
    Generate {
        /// Scene instruction text.
        #[arg(long, conflicts_with = "instruction_file")]
        instruction: Option<String>,
        /// Read the instruction from a file instead.
        #[arg(long = "instruction-file")]
        instruction_file: Option<PathBuf>,
        /// 16-bit grayscale heightmap PNG for the variable-height path.
        #[arg(long, conflicts_with = "sketch")]
        heightmap: Option<PathBuf>,
        /// Ridge/valley sketch PNG, converted to a heightmap first.
        #[arg(long)]
        sketch: Option<PathBuf>,
        /// Generator backend.
        #[arg(long, default_value = "mock")]
        backend: String,
        #[arg(long, default_value = "loveda")]
        table: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: CompileFlags,
    },
    /// Validate layout, config, heightmap, manifest, table, or dataset files.
    Validate {
        /// Files (or dataset directories) to validate.
        paths: Vec<PathBuf>,
        #[arg(long, default_value = "loveda")]
        table: String,
        /// Override kind detection: layout, config, manifest, heightmap,
        /// segmentation, sketch, table, masks, or dataset.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Build a dataset from `<name>.seg.png` (+ optional `<name>.dem.png`) sources.
    Forge {
        /// Directory scanned for source rasters.
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tile side in pixels.
        #[arg(long, default_value_t = 512)]
        tile: usize,
        /// Matrix side length per record.
        #[arg(long, default_value_t = 32)]
        p: usize,
        /// Comma-separated quarter-turn rotation set.
        #[arg(long, default_value = "0,1,2,3", value_parser = parse_rotations)]
        rotations: std::vec::Vec<u8>,
        #[arg(long, default_value = "loveda")]
        table: String,
        /// Skip configuration sampling.
        #[arg(long = "no-configs")]
        no_configs: bool,
    },
    /// Pretty-print statistics of an artifact.
    Inspect {
        path: PathBuf,
        #[arg(long, default_value = "loveda")]
        table: String,
    },
}

fn parse_rotations(s: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let k: u8 = part.trim().parse().map_err(|e| format!("rotation '{part}': {e}"))?;
        if k > 3 {
            return Err(format!("rotation {k} outside 0..=3"));
        }
        out.push(k);
    }
    if out.is_empty() {
        return Err("empty rotation set".into());
    }
    Ok(out)
}

fn main() {
    let cli = Cli::parse();
    let log = Logger {
        quiet: cli.quiet,
        json: cli.json_logs,
    };
    let exec = if cli.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    let result = match cli.command {
        Command::Compile {
            layout,
            config,
            heightmap,
            table,
            out,
            flags,
        } => cmd_compile::run(
            &layout, &config, heightmap.as_deref(), &table, &out, &flags, cli.seed, exec, log,
        ),
        Command::Generate {
            instruction,
            instruction_file,
            heightmap,
            sketch,
            backend,
            table,
            out,
            flags,
        } => cmd_generate::run(
            instruction.as_deref(),
            instruction_file.as_deref(),
            heightmap.as_deref(),
            sketch.as_deref(),
            &backend,
            &table,
            &out,
            &flags,
            cli.seed,
            exec,
            log,
        ),
        Command::Validate { paths, table, kind } => {
            cmd_validate::run(&paths, &table, kind.as_deref(), log)
        }
        Command::Forge {
            src,
            out,
            tile,
            p,
            rotations,
            table,
            no_configs,
        } => cmd_forge::run(&src, &out, tile, p, &rotations, &table, !no_configs, cli.seed, exec, log),
        Command::Inspect { path, table } => cmd_inspect::run(&path, &table, log),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
