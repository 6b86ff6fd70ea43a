//! Rotated-box overlap in bird's-eye view and in 3D.

use crate::geom::Box3D;

type Pt = [f64; 2];

fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn polygon_area(poly: &[Pt]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    twice.abs() / 2.0
}

/// Sutherland-Hodgman clipping of `subject` by the convex counter-clockwise
/// polygon `clip`.
fn clip_convex(subject: &[Pt], clip: &[Pt]) -> Vec<Pt> {
    let mut out: Vec<Pt> = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = cross(a, b, cur) >= 0.0;
            let prev_in = cross(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    out.push(segment_intersection(prev, cur, a, b));
                }
                out.push(cur);
            } else if prev_in {
                out.push(segment_intersection(prev, cur, a, b));
            }
        }
    }
    out
}

fn segment_intersection(p: Pt, q: Pt, a: Pt, b: Pt) -> Pt {
    let dp = cross(a, b, p);
    let dq = cross(a, b, q);
    let t = dp / (dp - dq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Area of the intersection of two boxes' footprints in the x-z plane.
pub fn bev_intersection(a: &Box3D, b: &Box3D) -> f64 {
    // Cheap reject on bounding circles.
    let (ra, rb) = (a.length().hypot(a.width()) / 2.0, b.length().hypot(b.width()) / 2.0);
    let (dx, dz) = (a.center.x - b.center.x, a.center.z - b.center.z);
    if dx.hypot(dz) > ra + rb {
        return 0.0;
    }
    polygon_area(&clip_convex(&a.bev_corners(), &b.bev_corners()))
}

/// Intersection over union of the two yaw-rotated footprints.
pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.length() * a.width() + b.length() * b.width() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Vertical (y) overlap length of two boxes.
pub fn vertical_overlap(a: &Box3D, b: &Box3D) -> f64 {
    let (a0, a1) = a.y_range();
    let (b0, b1) = b.y_range();
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Volumetric intersection over union.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let h = vertical_overlap(a, b);
    if h <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection(a, b) * h;
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.volume() + b.volume() - inter)).clamp(0.0, 1.0)
}
