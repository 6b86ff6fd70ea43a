use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sweepvol::kitti_io::{frame_id, synth_scene, write_scene, Calibration, KittiLayout, SynthConfig};

use super::{parse_counts, usage, CLASSES};
use crate::{CliResult, Context};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output split root.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub frames: usize,
    /// Objects per frame as Car,Pedestrian,Cyclist.
    #[arg(long, default_value = "3,2,2", value_parser = parse_counts)]
    pub objects: ::std::vec::Vec<usize>,
    #[arg(long, default_value_t = 1242)]
    pub width: usize,
    #[arg(long, default_value_t = 375)]
    pub height: usize,
    #[arg(long, default_value_t = 720.0)]
    pub focal: f64,
    #[arg(long, default_value_t = 0.5)]
    pub baseline: f64,
    /// Nearest box-center depth, meters.
    #[arg(long, default_value_t = 8.0)]
    pub zmin: f64,
    /// Farthest box-center depth, meters.
    #[arg(long, default_value_t = 50.0)]
    pub zmax: f64,
    /// Ground point grid spacing, meters.
    #[arg(long, default_value_t = 0.5)]
    pub ground_spacing: f64,
}

pub fn run(a: &SynthArgs, ctx: Context) -> CliResult<()> {
    if a.frames == 0 || a.width < 8 || a.height < 8 {
        return Err(usage("need at least one frame of at least 8x8 pixels"));
    }
    if !(a.focal > 0.0 && a.baseline > 0.0 && a.ground_spacing > 0.0) {
        return Err(usage("--focal, --baseline and --ground-spacing must be positive"));
    }
    if !(a.zmin > 0.0 && a.zmax > a.zmin) {
        return Err(usage("depth range needs 0 < zmin < zmax"));
    }
    let counts: BTreeMap<_, _> = CLASSES.iter().cloned().zip(a.objects.iter().copied()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let seeds: Vec<u64> = (0..a.frames).map(|_| rng.random()).collect();
    let layout = KittiLayout::new(&a.out);
    let boxes = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let cfg = SynthConfig {
                seed,
                counts: counts.clone(),
                depth_range: (a.zmin, a.zmax),
                width: a.width,
                height: a.height,
                focal: a.focal,
                baseline: a.baseline,
                ground_spacing: a.ground_spacing,
            };
            let scene = synth_scene(&cfg)?;
            write_scene(&layout, &frame_id(i), &scene, &Calibration::from_rig(&scene.rig))?;
            Ok(scene.boxes.len())
        })
        .collect::<CliResult<Vec<usize>>>()?;
    println!("frames,boxes");
    println!("{},{}", a.frames, boxes.iter().sum::<usize>());
    Ok(())
}
