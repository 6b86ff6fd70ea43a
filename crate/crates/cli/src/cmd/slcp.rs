use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sweepvol::kitti_io::dataset::read_file;
use sweepvol::kitti_io::velodyne::scene_points_to_velo;
use sweepvol::kitti_io::{encode_rgb_png, read_frame, read_velodyne, write_atomic, write_velodyne, KittiLayout, KittiObject};
use sweepvol::slcp::{paste, sample_objects, ObjectBank, DEFAULT_APPLY_PROB};
use sweepvol::ObjectClass;

use super::{parse_counts, usage, DataArgs, CLASSES};
use crate::{CliResult, Context};

#[derive(Debug, Args)]
pub struct SlcpArgs {
    /// Target split to augment.
    #[command(flatten)]
    pub data: DataArgs,
    /// Split the object bank is cut from; defaults to the target split.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    /// Output split root.
    #[arg(long)]
    pub out: PathBuf,
    /// Objects sampled per scene as Car,Pedestrian,Cyclist.
    #[arg(long, default_value = "5,5,5", value_parser = parse_counts)]
    pub samples: ::std::vec::Vec<usize>,
    /// Probability that a scene is augmented.
    #[arg(long, default_value_t = DEFAULT_APPLY_PROB)]
    pub prob: f64,
}

#[derive(Debug, Default)]
struct Tally {
    applied: usize,
    pasted: BTreeMap<ObjectClass, usize>,
    rejected: BTreeMap<ObjectClass, usize>,
}

fn copy_frame(src: &KittiLayout, dst: &KittiLayout, id: &str) -> CliResult<()> {
    for (from, to) in src.frame_files(id).iter().zip(dst.frame_files(id).iter()) {
        if from.exists() {
            write_atomic(to, &read_file(from)?)?;
        }
    }
    Ok(())
}

pub fn run(a: &SlcpArgs, ctx: Context) -> CliResult<()> {
    if !(0.0..=1.0).contains(&a.prob) {
        return Err(usage("--prob must lie in [0, 1]"));
    }
    let (target, ids) = a.data.open()?;
    let (bank_layout, bank_ids) = match &a.bank {
        Some(root) => super::DataArgs { data: root.clone() }.open()?,
        None => (target.clone(), ids.clone()),
    };
    let out = KittiLayout::new(&a.out);
    let counts: BTreeMap<ObjectClass, usize> = CLASSES.iter().cloned().zip(a.samples.iter().copied()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let seeds: Vec<(u64, u64)> = ids.iter().map(|_| (rng.random(), rng.random())).collect();

    let wants_samples = counts.values().any(|&n| n > 0) && a.prob > 0.0;
    let mut bank = ObjectBank::default();
    if wants_samples {
        let parts = bank_ids
            .par_iter()
            .map(|id| -> CliResult<ObjectBank> {
                let mut b = ObjectBank::default();
                b.add_scene(&read_frame(&bank_layout, id)?.scene);
                Ok(b)
            })
            .collect::<CliResult<Vec<_>>>()?;
        for part in parts {
            bank.skipped += part.skipped;
            for (class, samples) in part.by_class {
                bank.by_class.entry(class).or_default().extend(samples);
            }
        }
    }

    let tallies = ids
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(id, &(sample_seed, paste_seed))| -> CliResult<Tally> {
            let mut tally = Tally::default();
            if !wants_samples {
                copy_frame(&target, &out, id)?;
                return Ok(tally);
            }
            let frame = read_frame(&target, id)?;
            let samples = sample_objects(&bank, &counts, sample_seed);
            let (scene, report) = paste(&frame.scene, &samples, paste_seed, a.prob);
            for (i, _) in &report.rejected {
                *tally.rejected.entry(samples[*i].bbox.class.clone()).or_default() += 1;
            }
            if !report.applied || report.accepted.is_empty() {
                copy_frame(&target, &out, id)?;
                return Ok(tally);
            }
            tally.applied = 1;
            for &i in &report.accepted {
                *tally.pasted.entry(samples[i].bbox.class.clone()).or_default() += 1;
            }

            // Retained returns keep their original bytes; pasted ones are
            // mapped into this frame's sensor frame.
            let raw = read_velodyne(&read_file(&target.velodyne(id))?)?;
            let mut velo: Vec<_> = report.kept_points.iter().map(|&i| raw[i]).collect();
            let added = &scene.points[report.kept_points.len()..];
            velo.extend(scene_points_to_velo(added, &frame.calib)?);

            let label_path = target.label(id);
            let mut labels = if label_path.exists() { String::from_utf8_lossy(&read_file(&label_path)?).into_owned() } else { String::new() };
            if !labels.is_empty() && !labels.ends_with('\n') {
                labels.push('\n');
            }
            for &i in &report.accepted {
                labels.push_str(&KittiObject::from_box(&samples[i].bbox, &scene.rig).to_line());
                labels.push('\n');
            }

            write_atomic(&out.calib(id), &read_file(&target.calib(id))?)?;
            write_atomic(&out.label(id), labels.as_bytes())?;
            write_atomic(&out.velodyne(id), &write_velodyne(&velo))?;
            write_atomic(&out.left_image(id), &encode_rgb_png(&scene.left_image)?)?;
            write_atomic(&out.right_image(id), &encode_rgb_png(&scene.right_image)?)?;
            Ok(tally)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut total = Tally::default();
    for t in tallies {
        total.applied += t.applied;
        for (c, n) in t.pasted {
            *total.pasted.entry(c).or_default() += n;
        }
        for (c, n) in t.rejected {
            *total.rejected.entry(c).or_default() += n;
        }
    }
    println!("frames: {}, augmented: {}, bank objects: {}", ids.len(), total.applied, bank.len());
    println!("class,pasted,rejected");
    for class in &CLASSES {
        let p = total.pasted.get(class).copied().unwrap_or(0);
        let r = total.rejected.get(class).copied().unwrap_or(0);
        println!("{class},{p},{r}");
    }
    Ok(())
}
