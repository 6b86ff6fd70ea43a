use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use sweepvol::analytics::{ap_r40_frames, iou_3d, iou_bev, iou_threshold, Detection, Difficulty, Frame};
use sweepvol::kitti_io::dataset::read_text;
use sweepvol::kitti_io::{parse_labels, KittiObject};
use sweepvol::{Box3D, ObjectClass};

use super::{emit, parse_list, DataArgs};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DifficultyArg {
    Easy,
    Moderate,
    Hard,
}

impl From<DifficultyArg> for Difficulty {
    fn from(d: DifficultyArg) -> Self {
        match d {
            DifficultyArg::Easy => Difficulty::Easy,
            DifficultyArg::Moderate => Difficulty::Moderate,
            DifficultyArg::Hard => Difficulty::Hard,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory of <frame>.txt detections in KITTI label format with a score column.
    /// A missing score counts as 1; a missing file as no detections.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_parser = parse_list::<String>, default_value = "Car,Pedestrian,Cyclist")]
    pub classes: ::std::vec::Vec<String>,
    /// Keep only ground truth admitted by this regime.
    #[arg(long, value_enum)]
    pub difficulty: Option<DifficultyArg>,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct FrameLabels {
    gt: Vec<KittiObject>,
    pred: Vec<KittiObject>,
}

fn detections(objs: &[KittiObject], class: &ObjectClass) -> CliResult<Vec<Detection>> {
    objs.iter()
        .filter(|o| o.kind == class.as_str())
        .map(|o| Ok(Detection::new(o.box3d()?, o.score.unwrap_or(1.0))?))
        .collect()
}

fn ground_truth(objs: &[KittiObject], class: &ObjectClass, difficulty: Option<Difficulty>) -> CliResult<Vec<Box3D>> {
    objs.iter()
        .filter(|o| o.kind == class.as_str())
        .filter(|o| difficulty.is_none_or(|d| d.admits(o.bbox[3] - o.bbox[1], o.occluded, o.truncated)))
        .map(|o| Ok(o.box3d()?))
        .collect()
}

pub fn run(a: &EvalapArgs, _ctx: Context) -> CliResult<()> {
    if !a.pred.is_dir() {
        return Err(CliError::Io(format!("prediction directory {} does not exist", a.pred.display())));
    }
    let (layout, ids) = a.data.open()?;
    let frames = ids
        .par_iter()
        .map(|id| -> CliResult<FrameLabels> {
            let label_path = layout.label(id);
            let gt = if label_path.exists() { parse_labels(&read_text(&label_path)?)? } else { Vec::new() };
            let pred_path = a.pred.join(format!("{id}.txt"));
            let pred = if pred_path.exists() { parse_labels(&read_text(&pred_path)?)? } else { Vec::new() };
            Ok(FrameLabels { gt, pred })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let difficulty = a.difficulty.map(Difficulty::from);
    let mut csv = String::from("class,metric,iou_threshold,num_gt,num_det,ap\n");
    for name in &a.classes {
        let class: ObjectClass = name.parse().unwrap();
        let per_class = frames
            .iter()
            .map(|f| {
                Ok(Frame { detections: detections(&f.pred, &class)?, ground_truth: ground_truth(&f.gt, &class, difficulty)? })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let n_gt: usize = per_class.iter().map(|f| f.ground_truth.len()).sum();
        let n_det: usize = per_class.iter().map(|f| f.detections.len()).sum();
        let thr = iou_threshold(&class);
        for (metric, ap) in [
            ("3d", (n_gt > 0).then(|| ap_r40_frames(&per_class, iou_3d, thr)).transpose()?),
            ("bev", (n_gt > 0).then(|| ap_r40_frames(&per_class, iou_bev, thr)).transpose()?),
        ] {
            let ap = ap.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(csv, "{class},{metric},{thr},{n_gt},{n_det},{ap}");
        }
    }
    emit(a.out.as_deref(), &csv)
}
