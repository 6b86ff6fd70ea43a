//! Geometric core of stereo 3D detection: plane-sweep and depth-wise
//! plane-sweep volumes, frustum/voxel resampling, stereo-LiDAR copy-paste
//! augmentation and detection metrics.
//!
//! Coordinates follow the KITTI camera convention (x right, y down,
//! z forward, meters) throughout.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geom;
pub mod grid;
pub mod analytics;
pub mod dualview;
pub mod kitti_io;
pub mod slcp;
pub mod sweep;

pub use dualview::DepthMap;
pub use error::{Error, Result};
pub use geom::{Box3D, CameraModel, ObjectClass, Pixel, Point3, ProjectedBox, Rect2, StereoRig, View};
pub use grid::{FeatureMap2D, FrustumSpec, FrustumVolume, VoxelGridSpec, VoxelVolume};
pub use kitti_io::{Calibration, Dvol, KittiObject};
pub use slcp::{ObjectSample, Scene, ScenePoint};
pub use sweep::{SweepConfig, SweepMode, SweepStats};
