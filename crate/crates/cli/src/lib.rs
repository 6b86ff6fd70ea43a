//! Reproducible pipeline steps over KITTI-layout data: synthetic splits,
//! stereo volume generation, copy-paste augmentation, analysis CSVs and a
//! sweep benchmark.
//!
//! Exit status: 0 success, 2 usage, 3 input/output, 4 domain error.

// Negated comparisons reject NaN flags too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub mod cmd;
pub mod error;
pub mod features;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sweepvol", version, about = "Stereo volume, augmentation and evaluation pipeline steps")]
pub struct Cli {
    /// Seed of the run's single random generator.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for scene-level parallelism (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic KITTI-layout split.
    Synth(cmd::synth::SynthArgs),
    /// Build a stereo volume for one frame and write it as DVOL.
    Volgen(cmd::volgen::VolgenArgs),
    /// Per-box frustum and voxel occupancy CSV.
    Occupancy(cmd::occupancy::OccupancyArgs),
    /// Write ground-truth depth PNGs projected from the LiDAR scans.
    Depthgt(cmd::depth::DepthgtArgs),
    /// Foreground depth error CSV, binned by depth.
    Deptherr(cmd::depth::DeptherrArgs),
    /// AP over 40 recall positions per class, 3D and bird's-eye view.
    Evalap(cmd::evalap::EvalapArgs),
    /// Stereo-LiDAR copy-paste augmentation of a split.
    Slcp(cmd::slcp::SlcpArgs),
    /// Time plane-sweep volume construction per mode.
    Bench(cmd::bench::BenchArgs),
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: u64,
}

pub fn run(cli: Cli) -> CliResult<()> {
    if cli.jobs > 0 {
        // Fails only if a pool already exists, e.g. on a second run in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let ctx = Context { seed: cli.seed };
    match cli.command {
        Command::Synth(a) => cmd::synth::run(&a, ctx),
        Command::Volgen(a) => cmd::volgen::run(&a, ctx),
        Command::Occupancy(a) => cmd::occupancy::run(&a, ctx),
        Command::Depthgt(a) => cmd::depth::run_gt(&a, ctx),
        Command::Deptherr(a) => cmd::depth::run_err(&a, ctx),
        Command::Evalap(a) => cmd::evalap::run(&a, ctx),
        Command::Slcp(a) => cmd::slcp::run(&a, ctx),
        Command::Bench(a) => cmd::bench::run(&a, ctx),
    }
}

/// Parses arguments, runs, reports errors on stderr and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sweepvol: {e}");
            e.exit_code()
        }
    }
}
