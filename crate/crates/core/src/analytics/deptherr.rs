//! Foreground depth error: depth accuracy measured only on pixels whose
//! ground-truth point falls inside an object box, binned by depth.

use std::fmt::Write as _;

use crate::dualview::DepthMap;
use crate::error::{domain, Result};
use crate::geom::{Box3D, CameraModel};

#[derive(Debug, Clone, PartialEq)]
pub struct DepthBinError {
    pub lo: f64,
    pub hi: f64,
    pub pixels: usize,
    /// Mean absolute error in meters, `None` when the bin has no pixels.
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthErrorReport {
    pub bins: Vec<DepthBinError>,
    pub overall: Option<f64>,
    pub pixels: usize,
}

impl DepthErrorReport {
    /// `bin_lo,bin_hi,mae_m,pixels`; an empty bin leaves `mae_m` blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,mae_m,pixels\n");
        for b in &self.bins {
            let mae = b.mae.map(|m| format!("{m:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", b.lo, b.hi, mae, b.pixels);
        }
        out
    }
}

/// `[0, 10), [10, 20), ... [60, 70)`.
pub fn default_bin_edges() -> Vec<f64> {
    (0..=7).map(|k| k as f64 * 10.0).collect()
}

/// Bins pixels by ground-truth depth using consecutive `edges`. A pixel
/// counts as foreground when its ground-truth point, unprojected through
/// `cam` at the integer pixel center, lies inside some box grown by
/// `margin` meters on every side.
pub fn foreground_depth_error(
    pred: &DepthMap,
    gt: &DepthMap,
    boxes: &[Box3D],
    cam: &CameraModel,
    edges: &[f64],
    margin: f64,
) -> Result<DepthErrorReport> {
    if (pred.rows(), pred.cols()) != (gt.rows(), gt.cols()) {
        return Err(domain("prediction and ground truth differ in shape"));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("bin edges must be strictly increasing with at least two entries"));
    }
    let nb = edges.len() - 1;
    let mut sums = vec![0.0f64; nb];
    let mut counts = vec![0usize; nb];
    if !boxes.is_empty() {
        for r in 0..gt.rows() {
            for c in 0..gt.cols() {
                let Some(g) = gt.get(r, c) else { continue };
                let g = g as f64;
                let Some(bin) = edges.windows(2).position(|w| g >= w[0] && g < w[1]) else { continue };
                let p = cam.unproject(c as f64, r as f64, g)?;
                if boxes.iter().any(|b| b.contains_with_slack(&p, margin)) {
                    let pv = pred.values()[r * pred.cols() + c] as f64;
                    sums[bin] += (pv - g).abs();
                    counts[bin] += 1;
                }
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
    let pixels: usize = counts.iter().sum();
    let overall = (pixels > 0).then(|| sums.iter().sum::<f64>() / pixels as f64);
    Ok(DepthErrorReport { bins, overall, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{ObjectClass, Point3};

    fn setup() -> (CameraModel, DepthMap, Vec<Box3D>) {
        let cam = CameraModel::new(20.0, 20.0, 10.0, 5.0, 20, 10).unwrap();
        // A wall at 12 m with a car-sized box around the central columns.
        let gt = DepthMap::new(10, 20, vec![12.0; 200]).unwrap();
        let b = Box3D::new(Point3::new(0.0, 0.0, 12.0), [3.0, 1.0, 3.0], 0.0, ObjectClass::Car).unwrap();
        (cam, gt, vec![b])
    }

    #[test]
    fn constant_offset_inside_boxes() {
        let (cam, gt, boxes) = setup();
        let pred = DepthMap::new(10, 20, vec![12.5; 200]).unwrap();
        let rep = foreground_depth_error(&pred, &gt, &boxes, &cam, &default_bin_edges(), 0.0).unwrap();
        assert!(rep.pixels > 0);
        assert_eq!(rep.overall, Some(0.5));
        for b in &rep.bins {
            assert!(b.mae.is_none() || b.mae == Some(0.5));
        }
        assert_eq!(rep.bins[1].mae, Some(0.5));
        assert_eq!(rep.bins[0].mae, None);
    }

    #[test]
    fn no_boxes_means_no_bins() {
        let (cam, gt, _) = setup();
        let rep = foreground_depth_error(&gt, &gt, &[], &cam, &default_bin_edges(), 0.0).unwrap();
        assert!(rep.bins.iter().all(|b| b.mae.is_none() && b.pixels == 0));
        assert_eq!(rep.overall, None);
        assert!(rep.to_csv().contains("10,20,,0"));
    }
}
