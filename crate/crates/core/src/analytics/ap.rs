//! Average precision over 40 recall positions.

use std::cmp::Ordering;

use crate::error::{domain, Result};
use crate::geom::Box3D;

/// Number of evenly spaced recall positions, `1/40 ..= 40/40`.
pub const RECALL_POSITIONS: usize = 40;

/// A scored detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: Box3D,
    pub score: f64,
}

impl Detection {
    pub fn new(bbox: Box3D, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(domain(format!("score {score} outside [0, 1]")));
        }
        Ok(Self { bbox, score })
    }
}

/// Detections and ground truth of one frame.
#[derive(Debug, Clone, Default)]
pub struct Frame {
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<Box3D>,
}

/// A point on the precision-recall curve, with raw counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub true_positives: usize,
    pub detections: usize,
}

impl OperatingPoint {
    pub fn precision(&self) -> f64 {
        self.true_positives as f64 / self.detections as f64
    }
}

/// Greedy matching in descending score order: each detection claims the
/// unmatched ground-truth box of its frame with the highest IoU, provided
/// it reaches `threshold`. Returns one operating point per distinct score.
pub fn operating_points(
    frames: &[Frame],
    iou: impl Fn(&Box3D, &Box3D) -> f64,
    threshold: f64,
) -> Vec<OperatingPoint> {
    let mut order: Vec<(usize, usize)> = frames
        .iter()
        .enumerate()
        .flat_map(|(f, fr)| (0..fr.detections.len()).map(move |d| (f, d)))
        .collect();
    let score = |&(f, d): &(usize, usize)| frames[f].detections[d].score;
    // Stable sort keeps (frame, index) order among equal scores.
    order.sort_by(|a, b| score(b).partial_cmp(&score(a)).unwrap_or(Ordering::Equal));

    let mut matched: Vec<Vec<bool>> = frames.iter().map(|f| vec![false; f.ground_truth.len()]).collect();
    let mut points = Vec::new();
    let mut tp = 0;
    for (rank, &(f, d)) in order.iter().enumerate() {
        let det = &frames[f].detections[d].bbox;
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in frames[f].ground_truth.iter().enumerate() {
            if matched[f][g] {
                continue;
            }
            let o = iou(det, gt);
            if o >= threshold && best.is_none_or(|(_, b)| o > b) {
                best = Some((g, o));
            }
        }
        if let Some((g, _)) = best {
            matched[f][g] = true;
            tp += 1;
        }
        let group_ends = order.get(rank + 1).is_none_or(|next| score(next) != score(&(f, d)));
        if group_ends {
            points.push(OperatingPoint { true_positives: tp, detections: rank + 1 });
        }
    }
    points
}

/// AP over [`RECALL_POSITIONS`] recall samples with right-interpolated
/// precision `max{p(r') : r' >= r}`, pooled across frames.
pub fn ap_r40_frames(frames: &[Frame], iou: impl Fn(&Box3D, &Box3D) -> f64, threshold: f64) -> Result<f64> {
    let n_gt: usize = frames.iter().map(|f| f.ground_truth.len()).sum();
    if n_gt == 0 {
        return Err(domain("average precision is undefined without ground truth"));
    }
    let points = operating_points(frames, iou, threshold);
    Ok(interpolated_ap(&points, n_gt))
}

/// Single-frame [`ap_r40_frames`].
pub fn ap_r40(
    detections: &[Detection],
    ground_truth: &[Box3D],
    iou: impl Fn(&Box3D, &Box3D) -> f64,
    threshold: f64,
) -> Result<f64> {
    let frame = Frame { detections: detections.to_vec(), ground_truth: ground_truth.to_vec() };
    ap_r40_frames(std::slice::from_ref(&frame), iou, threshold)
}

fn interpolated_ap(points: &[OperatingPoint], n_gt: usize) -> f64 {
    // Suffix maxima of precision, so each recall position is a binary search away.
    let mut best_after = vec![0.0f64; points.len() + 1];
    for i in (0..points.len()).rev() {
        best_after[i] = best_after[i + 1].max(points[i].precision());
    }
    let mut sum = 0.0;
    for k in 1..=RECALL_POSITIONS {
        // recall >= k / 40, compared exactly in integers; tp is non-decreasing.
        let first = points.partition_point(|p| p.true_positives * RECALL_POSITIONS < k * n_gt);
        sum += best_after[first];
    }
    sum / RECALL_POSITIONS as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::iou::iou_3d;
    use crate::geom::{ObjectClass, Point3};

    fn car(x: f64) -> Box3D {
        Box3D::new(Point3::new(x, 1.0, 20.0), [3.9, 1.6, 1.5], 0.0, ObjectClass::Car).unwrap()
    }

    #[test]
    fn perfect_detection_scores_one() {
        let d = [Detection::new(car(0.0), 0.9).unwrap()];
        assert_eq!(ap_r40(&d, &[car(0.0)], iou_3d, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn missed_detection_scores_zero() {
        let d = [Detection::new(car(10.0), 0.9).unwrap()];
        assert_eq!(ap_r40(&d, &[car(0.0)], iou_3d, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn false_positive_ranked_first_halves_precision() {
        let d = [Detection::new(car(10.0), 0.9).unwrap(), Detection::new(car(0.0), 0.5).unwrap()];
        assert_eq!(ap_r40(&d, &[car(0.0)], iou_3d, 0.7).unwrap(), 0.5);
    }

    #[test]
    fn no_ground_truth_is_an_error() {
        assert!(ap_r40(&[], &[], iou_3d, 0.7).is_err());
    }

    #[test]
    fn tied_scores_form_one_operating_point() {
        let d = [Detection::new(car(10.0), 0.5).unwrap(), Detection::new(car(0.0), 0.5).unwrap()];
        let frame = Frame { detections: d.to_vec(), ground_truth: vec![car(0.0)] };
        let pts = operating_points(&[frame], iou_3d, 0.7);
        assert_eq!(pts, vec![OperatingPoint { true_positives: 1, detections: 2 }]);
    }

    #[test]
    fn matching_is_per_frame() {
        let frames = [
            Frame { detections: vec![Detection::new(car(0.0), 0.8).unwrap()], ground_truth: vec![] },
            Frame { detections: vec![], ground_truth: vec![car(0.0)] },
        ];
        assert_eq!(ap_r40_frames(&frames, iou_3d, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn score_range_is_enforced() {
        assert!(Detection::new(car(0.0), 1.5).is_err());
    }
}
