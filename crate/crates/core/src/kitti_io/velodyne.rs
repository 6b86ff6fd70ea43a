//! Velodyne scans (`velodyne/NNNNNN.bin`) and depth maps projected from them.

use crate::dualview::DepthMap;
use crate::error::{Error, Result};
use crate::geom::{CameraModel, Point3};
use crate::kitti_io::Calibration;
use crate::slcp::ScenePoint;

/// A raw LiDAR return `(x, y, z, intensity)` in the sensor frame.
pub type VeloPoint = [f32; 4];

/// Decodes little-endian `f32` quadruples.
pub fn read_velodyne(bytes: &[u8]) -> Result<Vec<VeloPoint>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Format(format!("velodyne scan of {} bytes is not a multiple of 16", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| std::array::from_fn(|i| f32::from_le_bytes(c[4 * i..4 * i + 4].try_into().unwrap())))
        .collect())
}

pub fn write_velodyne(points: &[VeloPoint]) -> Vec<u8> {
    points.iter().flat_map(|p| p.iter().flat_map(|v| v.to_le_bytes())).collect()
}

/// Sensor points moved into the rectified camera frame.
pub fn velo_to_scene_points(points: &[VeloPoint], calib: &Calibration) -> Vec<ScenePoint> {
    points
        .iter()
        .map(|p| ScenePoint {
            xyz: calib.velo_to_rect(&Point3::new(p[0] as f64, p[1] as f64, p[2] as f64)),
            intensity: p[3],
        })
        .collect()
}

/// Camera-frame points moved back into the sensor frame, rounded to `f32`.
pub fn scene_points_to_velo(points: &[ScenePoint], calib: &Calibration) -> Result<Vec<VeloPoint>> {
    points
        .iter()
        .map(|p| {
            let q = calib.rect_to_velo(&p.xyz)?;
            Ok([q.x as f32, q.y as f32, q.z as f32, p.intensity])
        })
        .collect()
}

/// Sparse depth from camera-frame points: each point in front of the
/// camera writes its depth to the nearest pixel, and the closest point wins.
pub fn gt_depth(points: &[Point3], cam: &CameraModel, rows: usize, cols: usize) -> DepthMap {
    let mut map = DepthMap::invalid(rows, cols);
    for p in points {
        if !(p.z > 0.0) {
            continue;
        }
        let Ok(px) = cam.project(p) else { continue };
        let (u, v) = (px.u.round(), px.v.round());
        if !(u >= 0.0 && v >= 0.0 && u < cols as f64 && v < rows as f64) {
            continue;
        }
        let (r, c) = (v as usize, u as usize);
        let z = p.z as f32;
        if z > 0.0 && map.get(r, c).is_none_or(|d| z < d) {
            map.set(r, c, z);
        }
    }
    map
}
