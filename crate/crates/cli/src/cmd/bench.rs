use std::time::Instant;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sweepvol::kitti_io::random_feature_map;
use sweepvol::sweep::build_psv_into;
use sweepvol::{CameraModel, FrustumSpec, FrustumVolume, StereoRig, SweepConfig, SweepStats};

use super::usage;
use crate::{CliError, CliResult, Context};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Timed repetitions per mode (after one warm-up); the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Feature-map rows.
    #[arg(long, default_value_t = 96)]
    pub rows: usize,
    /// Feature-map columns.
    #[arg(long, default_value_t = 312)]
    pub cols: usize,
    #[arg(long, default_value_t = SweepConfig::DEFAULT_PLANES)]
    pub planes: usize,
    #[arg(long, default_value_t = SweepConfig::DEFAULT_IN_CHANNELS)]
    pub cin: usize,
    #[arg(long, default_value_t = SweepConfig::DEFAULT_OUT_CHANNELS)]
    pub cv: usize,
    #[arg(long, default_value_t = SweepConfig::DEFAULT_FRUSTUM_ALPHA)]
    pub alpha: f64,
    /// Channel shift ratio of the depth-wise mode; defaults to cin / planes.
    #[arg(long)]
    pub shift_ratio: Option<f64>,
}

/// Median of a non-empty sample.
pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn run(a: &BenchArgs, ctx: Context) -> CliResult<()> {
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    if a.rows == 0 || a.cols == 0 || a.planes == 0 {
        return Err(usage("--rows, --cols and --planes must be positive"));
    }
    let mut dps = SweepConfig::depthwise(a.cv, a.alpha);
    if let Some(s) = a.shift_ratio {
        dps = dps.with_shift_ratio(s);
    }
    let modes = [("ps", SweepConfig::classic(a.cv)), ("d-ps", dps), ("group-ps", SweepConfig::grouped(a.cv))];
    for (_, cfg) in &modes {
        cfg.validate(a.cin).map_err(CliError::flags)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let left = random_feature_map(a.rows, a.cols, a.cin, rng.random());
    let right = random_feature_map(a.rows, a.cols, a.cin, rng.random());
    let stride = 4.0;
    let (w, h) = (a.cols * 4, a.rows * 4);
    let cam = CameraModel::new(720.0, 720.0, (w / 2) as f64, (h / 2) as f64, w, h)?;
    let rig = StereoRig::symmetric(cam, 0.5)?;
    let spec = FrustumSpec::new(a.rows, a.cols, stride, FrustumSpec::uniform_depth(2.0, 59.4, a.planes)?)?;
    // One buffer shared by every run; each build overwrites every cell.
    let mut vol = FrustumVolume::zeros(spec, 2 * a.cv);

    println!("mode,median_ms,min_ms,cells,samples_per_cell,bytes_moved");
    for (name, cfg) in &modes {
        let mut stats = SweepStats::default();
        let mut times = Vec::with_capacity(a.repeats);
        build_psv_into(&left, &right, &rig, cfg, &mut vol)?;
        for _ in 0..a.repeats {
            let t = Instant::now();
            stats = build_psv_into(&left, &right, &rig, cfg, &mut vol)?;
            times.push(t.elapsed().as_secs_f64() * 1e3);
        }
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        let med = median(&mut times);
        let bytes = stats.channel_values * 4;
        println!("{name},{med:.1},{min:.1},{},{},{bytes}", stats.cells, stats.samples_per_cell());
    }
    Ok(())
}
