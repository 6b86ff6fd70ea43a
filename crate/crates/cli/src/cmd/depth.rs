use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use sweepvol::analytics::deptherr::default_bin_edges;
use sweepvol::analytics::{foreground_depth_error, DepthBinError, DepthErrorReport};
use sweepvol::kitti_io::dataset::{read_file, read_text};
use sweepvol::kitti_io::{
    decode_depth_png, encode_depth_png, gt_depth, label_boxes, parse_labels, png_dimensions, read_velodyne,
    velodyne::velo_to_scene_points, write_atomic, Calibration, KittiLayout,
};
use sweepvol::{DepthMap, Point3, View};

use super::{box_in_camera, emit, parse_list, usage, DataArgs};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Args)]
pub struct DepthgtArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory for <frame>.png depth maps (meters * 256, 0 = no return).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeptherrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory of predicted <frame>.png depth maps.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth depth PNGs; projected from the LiDAR scans when omitted.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Growth of each box on every side when selecting foreground pixels, meters.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// Comma-separated depth bin edges, meters.
    #[arg(long, value_parser = parse_list::<f64>)]
    pub edges: Option<Vec<f64>>,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Depth of the left view from the frame's LiDAR scan.
fn lidar_depth(layout: &KittiLayout, id: &str, calib: &Calibration) -> CliResult<DepthMap> {
    let (w, h) = png_dimensions(&read_file(&layout.left_image(id))?)?;
    let rig = calib.stereo_rig(w, h)?;
    let pts = velo_to_scene_points(&read_velodyne(&read_file(&layout.velodyne(id))?)?, calib);
    let cam_pts: Vec<Point3> = pts.iter().map(|p| rig.to_camera(View::Left, &p.xyz)).collect();
    Ok(gt_depth(&cam_pts, &rig.left, h, w))
}

fn png_in(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.png"))
}

pub fn run_gt(a: &DepthgtArgs, _ctx: Context) -> CliResult<()> {
    let (layout, ids) = a.data.open()?;
    ids.par_iter().try_for_each(|id| -> CliResult<()> {
        let calib = Calibration::parse(&read_text(&layout.calib(id))?)?;
        let depth = lidar_depth(&layout, id, &calib)?;
        write_atomic(&png_in(&a.out, id), &encode_depth_png(&depth))?;
        Ok(())
    })?;
    println!("frames: {}", ids.len());
    Ok(())
}

pub fn run_err(a: &DeptherrArgs, _ctx: Context) -> CliResult<()> {
    let edges = a.edges.clone().unwrap_or_else(default_bin_edges);
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(usage("--edges must be strictly increasing with at least two entries"));
    }
    if !(a.margin >= 0.0) {
        return Err(usage("--margin must be non-negative"));
    }
    if !a.pred.is_dir() {
        return Err(CliError::Io(format!("prediction directory {} does not exist", a.pred.display())));
    }
    let (layout, ids) = a.data.open()?;
    let reports = ids
        .par_iter()
        .map(|id| -> CliResult<DepthErrorReport> {
            let calib = Calibration::parse(&read_text(&layout.calib(id))?)?;
            let pred = decode_depth_png(&read_file(&png_in(&a.pred, id))?)?;
            let gt = match &a.gt {
                Some(dir) => decode_depth_png(&read_file(&png_in(dir, id))?)?,
                None => lidar_depth(&layout, id, &calib)?,
            };
            let rig = calib.stereo_rig(gt.cols(), gt.rows())?;
            let label_path = layout.label(id);
            let boxes = if label_path.exists() { label_boxes(&parse_labels(&read_text(&label_path)?)?)? } else { Vec::new() };
            let boxes: Vec<_> = boxes.iter().map(|b| box_in_camera(b, &rig, View::Left)).collect();
            Ok(foreground_depth_error(&pred, &gt, &boxes, &rig.left, &edges, a.margin)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    emit(a.out.as_deref(), &merge(&edges, &reports).to_csv())
}

/// Pools per-frame reports by pixel count.
fn merge(edges: &[f64], reports: &[DepthErrorReport]) -> DepthErrorReport {
    let nb = edges.len() - 1;
    let mut sums = vec![0.0f64; nb];
    let mut counts = vec![0usize; nb];
    for r in reports {
        for (i, b) in r.bins.iter().enumerate() {
            if let Some(m) = b.mae {
                sums[i] += m * b.pixels as f64;
                counts[i] += b.pixels;
            }
        }
    }
    let bins = (0..nb)
        .map(|i| DepthBinError {
            lo: edges[i],
            hi: edges[i + 1],
            pixels: counts[i],
            mae: (counts[i] > 0).then(|| sums[i] / counts[i] as f64),
        })
        .collect();
    let pixels = counts.iter().sum();
    let overall = (pixels > 0).then(|| sums.iter().sum::<f64>() / pixels as f64);
    DepthErrorReport { bins, overall, pixels }
}
