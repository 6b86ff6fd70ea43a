//! Evaluation and analysis metrics: box overlap, AP over 40 recall
//! positions, volume occupancy profiles and foreground depth error.

pub mod ap;
pub mod deptherr;
pub mod iou;
pub mod occupancy;

pub use ap::{ap_r40, ap_r40_frames, Detection, Frame};
pub use deptherr::{foreground_depth_error, DepthBinError, DepthErrorReport};
pub use iou::{iou_3d, iou_bev};
pub use occupancy::{frustum_occupancy, occupancy_records, voxel_occupancy, OccupancyRecord};

use crate::geom::ObjectClass;

/// KITTI evaluation regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
}

impl Difficulty {
    /// Minimum 2D box height (px), maximum occlusion level and maximum
    /// truncation of the regime.
    fn limits(self) -> (f64, i32, f64) {
        match self {
            Difficulty::Easy => (40.0, 0, 0.15),
            Difficulty::Moderate => (25.0, 1, 0.30),
            Difficulty::Hard => (25.0, 2, 0.50),
        }
    }

    /// Whether an object with these label fields is evaluated in this regime.
    pub fn admits(self, bbox_height: f64, occluded: i32, truncated: f64) -> bool {
        let (h, occ, trunc) = self.limits();
        bbox_height >= h && occluded <= occ && truncated <= trunc
    }
}

/// IoU threshold for 3D and BEV AP of a class: 0.7 for cars, 0.5 otherwise.
pub fn iou_threshold(class: &ObjectClass) -> f64 {
    match class {
        ObjectClass::Car => 0.7,
        _ => 0.5,
    }
}
