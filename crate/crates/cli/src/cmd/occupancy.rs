use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use sweepvol::analytics::occupancy::{aggregate_profile, frustum_occupancy, profile_csv, voxel_occupancy, DEFAULT_BIN_WIDTH};
use sweepvol::analytics::OccupancyRecord;
use sweepvol::kitti_io::dataset::{read_file, read_text};
use sweepvol::kitti_io::{label_boxes, parse_labels, png_dimensions, Calibration};
use sweepvol::{FrustumSpec, SweepConfig, View, VoxelGridSpec};

use super::{box_in_camera, emit, usage, DataArgs};
use crate::{CliResult, Context};

#[derive(Debug, Args)]
pub struct OccupancyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Per-box CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-class depth-bin means, written as CSV.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 4)]
    pub stride: usize,
    #[arg(long, default_value_t = SweepConfig::DEFAULT_PLANES)]
    pub planes: usize,
    #[arg(long, default_value_t = 2.0)]
    pub zmin: f64,
    #[arg(long, default_value_t = 59.4)]
    pub zmax: f64,
}

pub fn run(a: &OccupancyArgs, _ctx: Context) -> CliResult<()> {
    if a.stride == 0 || a.planes == 0 || !(a.bin_width > 0.0) {
        return Err(usage("--stride, --planes and --bin-width must be positive"));
    }
    if !(a.zmin > 0.0 && a.zmax > a.zmin) {
        return Err(usage("depth range needs 0 < zmin < zmax"));
    }
    let (layout, ids) = a.data.open()?;
    let planes = FrustumSpec::uniform_depth(a.zmin, a.zmax, a.planes)?;
    let vspec = VoxelGridSpec::kitti_default();
    let per_frame = ids
        .par_iter()
        .map(|id| -> CliResult<Vec<OccupancyRecord>> {
            let label_path = layout.label(id);
            if !label_path.exists() {
                return Ok(Vec::new());
            }
            let boxes = label_boxes(&parse_labels(&read_text(&label_path)?)?)?;
            let calib = Calibration::parse(&read_text(&layout.calib(id))?)?;
            let (w, h) = png_dimensions(&read_file(&layout.left_image(id))?)?;
            let rig = calib.stereo_rig(w, h)?;
            let fspec = FrustumSpec::new(h / a.stride, w / a.stride, a.stride as f64, planes.clone())?;
            Ok(boxes
                .iter()
                .map(|b| OccupancyRecord {
                    class: b.class.clone(),
                    depth: b.center.z,
                    psv_count: frustum_occupancy(&box_in_camera(b, &rig, View::Left), &fspec, &rig.left),
                    tdgv_count: voxel_occupancy(b, &vspec),
                })
                .collect())
        })
        .collect::<CliResult<Vec<_>>>()?;
    let records: Vec<OccupancyRecord> = per_frame.into_iter().flatten().collect();
    emit(a.out.as_deref(), &profile_csv(&records))?;
    if let Some(path) = &a.profile {
        let mut csv = String::from("class,bin_lo,bin_hi,boxes,mean_psv,mean_tdgv\n");
        for b in aggregate_profile(&records, a.bin_width) {
            let _ = writeln!(csv, "{},{},{},{},{:.3},{:.3}", b.class, b.bin_lo, b.bin_hi, b.boxes, b.mean_psv, b.mean_tdgv);
        }
        emit(Some(path), &csv)?;
    }
    if a.out.is_some() {
        println!("boxes: {}", records.len());
    }
    Ok(())
}
