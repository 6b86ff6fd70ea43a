//! KITTI-format ingestion and output, the DVOL volume container and
//! synthetic scenes.

pub mod calib;
pub mod dataset;
pub mod dvol;
pub mod labels;
pub mod png;
pub mod synth;
pub mod velodyne;

pub use calib::Calibration;
pub use dataset::{frame_id, read_frame, write_atomic, write_atomic_with, write_scene, KittiFrame, KittiLayout};
pub use dvol::{read_dvol, write_dvol, write_dvol_to, Dvol};
pub use labels::{label_boxes, labels_to_text, parse_labels, KittiObject};
pub use png::{decode_depth_png, decode_rgb_png, encode_depth_png, encode_rgb_png, png_dimensions};
pub use synth::{random_feature_map, synth_scene, SynthConfig};
pub use velodyne::{gt_depth, read_velodyne, write_velodyne, VeloPoint};
