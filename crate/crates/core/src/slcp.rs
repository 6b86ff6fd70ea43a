//! Stereo-LiDAR copy-paste augmentation.
//!
//! Objects are cut from source scenes together with their LiDAR points and
//! pasted into a target scene at their original 3D location. Each image
//! patch is warped from its source 2D box to the box obtained by projecting
//! the same 3D box with the target cameras, so the pasted object keeps the
//! exact disparity of its depth in both views. Background points that now
//! fall behind a pasted patch are removed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::iou::bev_intersection;
use crate::dualview::DepthMap;
use crate::error::{domain, Result};
use crate::geom::{normalize_angle, Box3D, ObjectClass, Point3, Rect2, StereoRig, View};
use crate::grid::FeatureMap2D;
use crate::kitti_io::gt_depth;

/// A LiDAR return in the scene's reference camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub xyz: Point3,
    pub intensity: f32,
}

/// One multi-modal training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// RGB in `[0, 1]`, shape (rows, cols, 3).
    pub left_image: FeatureMap2D,
    pub right_image: FeatureMap2D,
    pub points: Vec<ScenePoint>,
    pub rig: StereoRig,
    pub boxes: Vec<Box3D>,
}

impl Scene {
    pub fn new(
        left_image: FeatureMap2D,
        right_image: FeatureMap2D,
        points: Vec<ScenePoint>,
        rig: StereoRig,
        boxes: Vec<Box3D>,
    ) -> Result<Self> {
        if left_image.shape() != right_image.shape() {
            return Err(domain("stereo images differ in shape"));
        }
        if (left_image.cols(), left_image.rows()) != (rig.left.width, rig.left.height) {
            return Err(domain(format!(
                "images are {}x{} but the rig expects {}x{}",
                left_image.cols(),
                left_image.rows(),
                rig.left.width,
                rig.left.height
            )));
        }
        Ok(Self { left_image, right_image, points, rig, boxes })
    }

    pub fn image(&self, view: View) -> &FeatureMap2D {
        match view {
            View::Left => &self.left_image,
            View::Right => &self.right_image,
        }
    }

    pub fn image_mut(&mut self, view: View) -> &mut FeatureMap2D {
        match view {
            View::Left => &mut self.left_image,
            View::Right => &mut self.right_image,
        }
    }

    /// Ground-truth depth of one view from the scene's points.
    pub fn depth_map(&self, view: View) -> DepthMap {
        let cam = self.rig.camera(view);
        let pts: Vec<Point3> = self.points.iter().map(|p| self.rig.to_camera(view, &p.xyz)).collect();
        gt_depth(&pts, cam, cam.height, cam.width)
    }
}

/// An object cut out of a source scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSample {
    pub bbox: Box3D,
    /// Image crops per view (left, right) covering the source 2D boxes.
    pub patches: [FeatureMap2D; 2],
    /// Image position (row, col) of each patch's top-left pixel.
    pub patch_origins: [(usize, usize); 2],
    /// Source 2D boxes per view.
    pub patch_boxes: [Rect2; 2],
    pub object_points: Vec<ScenePoint>,
    pub source_rig: StereoRig,
}

fn view_index(view: View) -> usize {
    match view {
        View::Left => 0,
        View::Right => 1,
    }
}

fn crop(image: &FeatureMap2D, rect: &Rect2) -> (FeatureMap2D, (usize, usize)) {
    let c0 = rect.u0.floor().max(0.0) as usize;
    let r0 = rect.v0.floor().max(0.0) as usize;
    let c1 = (rect.u1.ceil() as usize).min(image.cols() - 1);
    let r1 = (rect.v1.ceil() as usize).min(image.rows() - 1);
    let ch = image.channels();
    let patch = FeatureMap2D::from_fn(r1 - r0 + 1, c1 - c0 + 1, ch, |r, c, k| image.pixel(r0 + r, c0 + c)[k]);
    (patch, (r0, c0))
}

/// Objects available for pasting, keyed by class.
#[derive(Debug, Clone, Default)]
pub struct ObjectBank {
    pub by_class: BTreeMap<ObjectClass, Vec<ObjectSample>>,
    /// Boxes not fully visible in both source views.
    pub skipped: usize,
}

impl ObjectBank {
    pub fn len(&self) -> usize {
        self.by_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ObjectBank {
    /// Adds every labeled box of `scene` whose 8 corners project inside
    /// both images; the scene itself is not retained.
    pub fn add_scene(&mut self, scene: &Scene) {
        for b in &scene.boxes {
            match cut_object(scene, b) {
                Some(sample) => self.by_class.entry(b.class.clone()).or_default().push(sample),
                None => self.skipped += 1,
            }
        }
    }
}

/// Collects every labeled box whose 8 corners project inside both images.
pub fn build_bank(scenes: &[Scene]) -> ObjectBank {
    let mut bank = ObjectBank::default();
    for scene in scenes {
        bank.add_scene(scene);
    }
    bank
}

fn cut_object(scene: &Scene, b: &Box3D) -> Option<ObjectSample> {
    let mut patch_boxes = [Rect2::new(0.0, 0.0, 0.0, 0.0); 2];
    for view in View::BOTH {
        let pb = scene.rig.project_box(view, b).ok()?;
        if !scene.rig.camera(view).bounds().contains_rect(&pb.hull) {
            return None;
        }
        patch_boxes[view_index(view)] = pb.hull;
    }
    let (lp, lo) = crop(&scene.left_image, &patch_boxes[0]);
    let (rp, ro) = crop(&scene.right_image, &patch_boxes[1]);
    let object_points = scene.points.iter().filter(|p| b.contains(&p.xyz)).copied().collect();
    Some(ObjectSample {
        bbox: b.clone(),
        patches: [lp, rp],
        patch_origins: [lo, ro],
        patch_boxes,
        object_points,
        source_rig: scene.rig,
    })
}

/// Default per-class sample counts: 5 each of Car, Pedestrian and Cyclist.
pub fn default_counts() -> BTreeMap<ObjectClass, usize> {
    ObjectClass::MAIN.iter().map(|c| (c.clone(), 5)).collect()
}

/// Default probability of augmenting a scene.
pub const DEFAULT_APPLY_PROB: f64 = 0.6;

/// Draws up to `counts[class]` distinct samples per class (fewer when the
/// bank runs short), deterministically from `seed`.
pub fn sample_objects(bank: &ObjectBank, counts: &BTreeMap<ObjectClass, usize>, seed: u64) -> Vec<ObjectSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (class, &want) in counts {
        let Some(pool) = bank.by_class.get(class) else { continue };
        let n = want.min(pool.len());
        for i in index::sample(&mut rng, pool.len(), n) {
            out.push(pool[i].clone());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Bird's-eye footprint intersects an existing or already accepted box.
    Overlap,
    /// The box cannot be projected into, or misses, a target view.
    OutOfView,
}

/// What `paste` did to a scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PasteReport {
    pub applied: bool,
    /// Indices into the sample list, in acceptance order.
    pub accepted: Vec<usize>,
    pub rejected: Vec<(usize, RejectReason)>,
    /// Indices of retained target points; these lead the output point list.
    pub kept_points: Vec<usize>,
    /// `(sample index, point count)` runs following the retained points.
    pub added_points: Vec<(usize, usize)>,
    /// Far-to-near paste order (sample indices).
    pub paste_order: Vec<usize>,
    /// Clipped target 2D boxes per accepted sample (left, right), keyed like `accepted`.
    pub target_boxes: Vec<[Rect2; 2]>,
}

/// Pastes `samples` into `target` with probability `apply_prob`.
pub fn paste(target: &Scene, samples: &[ObjectSample], seed: u64, apply_prob: f64) -> (Scene, PasteReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PasteReport::default();
    if !(rng.random::<f64>() < apply_prob) {
        report.kept_points = (0..target.points.len()).collect();
        return (target.clone(), report);
    }
    report.applied = true;

    let rig = &target.rig;
    let mut placed: Vec<&Box3D> = target.boxes.iter().collect();
    let mut footprints: Vec<([Rect2; 2], [Rect2; 2])> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if placed.iter().any(|b| bev_intersection(b, &s.bbox) > 0.0) {
            report.rejected.push((i, RejectReason::Overlap));
            continue;
        }
        let projected: Option<Vec<_>> = View::BOTH
            .iter()
            .map(|&v| rig.project_box(v, &s.bbox).ok().filter(|pb| !pb.clipped.is_empty()))
            .collect();
        let Some(projected) = projected else {
            report.rejected.push((i, RejectReason::OutOfView));
            continue;
        };
        placed.push(&s.bbox);
        report.accepted.push(i);
        footprints.push(([projected[0].hull, projected[1].hull], [projected[0].clipped, projected[1].clipped]));
    }
    report.target_boxes = footprints.iter().map(|f| f.1).collect();

    // Far to near, so nearer patches overpaint farther ones.
    let mut order: Vec<usize> = (0..report.accepted.len()).collect();
    order.sort_by(|&a, &b| {
        let za = samples[report.accepted[a]].bbox.center.z;
        let zb = samples[report.accepted[b]].bbox.center.z;
        zb.total_cmp(&za).then(a.cmp(&b))
    });
    report.paste_order = order.iter().map(|&k| report.accepted[k]).collect();

    let mut out = target.clone();
    for &k in &order {
        let s = &samples[report.accepted[k]];
        let (hulls, clipped) = &footprints[k];
        for view in View::BOTH {
            let vi = view_index(view);
            warp_patch(s, vi, &hulls[vi], &clipped[vi], out.image_mut(view));
        }
    }

    // A point is hidden when the pixel it lands on under the depth-map
    // rounding rule is one a footprint touches. Rounding is monotone, so
    // this also hides every point inside the continuous footprint, and a
    // pixel never receives points from two sources.
    let covered = |p: &Point3, boxes: &[[Rect2; 2]]| {
        boxes.iter().any(|fp| {
            View::BOTH.iter().any(|&v| {
                rig.project(v, p).is_ok_and(|px| {
                    let r = &fp[view_index(v)];
                    let (u, v) = (px.u.round(), px.v.round());
                    u >= r.u0.round() && u <= r.u1.round() && v >= r.v0.round() && v <= r.v1.round()
                })
            })
        })
    };

    let mut points = Vec::with_capacity(target.points.len());
    for (i, p) in target.points.iter().enumerate() {
        if !covered(&p.xyz, &report.target_boxes) {
            report.kept_points.push(i);
            points.push(*p);
        }
    }
    for (rank, &k) in order.iter().enumerate() {
        let idx = report.accepted[k];
        let nearer: Vec<[Rect2; 2]> = order[rank + 1..].iter().map(|&j| report.target_boxes[j]).collect();
        let before = points.len();
        for p in &samples[idx].object_points {
            if !covered(&p.xyz, &nearer) {
                points.push(*p);
            }
        }
        report.added_points.push((idx, points.len() - before));
    }
    out.points = points;
    out.boxes.extend(report.accepted.iter().map(|&i| samples[i].bbox.clone()));
    (out, report)
}

/// Warps a sample's patch from its source box onto the target box with an
/// axis-aligned affine map and bilinear resampling.
fn warp_patch(s: &ObjectSample, vi: usize, target: &Rect2, clipped: &Rect2, image: &mut FeatureMap2D) {
    let src = &s.patch_boxes[vi];
    let patch = &s.patches[vi];
    let (pr0, pc0) = s.patch_origins[vi];
    let sx = if target.width() > 0.0 { src.width() / target.width() } else { 0.0 };
    let sy = if target.height() > 0.0 { src.height() / target.height() } else { 0.0 };
    let ch = image.channels();
    let (c0, c1) = (clipped.u0.ceil() as usize, clipped.u1.floor() as usize);
    let (r0, r1) = (clipped.v0.ceil() as usize, clipped.v1.floor() as usize);
    let mut buf = vec![0.0f32; ch];
    for r in r0..=r1 {
        let ys = src.v0 + (r as f64 - target.v0) * sy - pr0 as f64;
        for c in c0..=c1 {
            let xs = src.u0 + (c as f64 - target.u0) * sx - pc0 as f64;
            patch.bilinear_sample_into(xs, ys, 0..ch, &mut buf);
            image.pixel_mut(r, c).copy_from_slice(&buf);
        }
    }
}

/// Mirror of a heading about the vertical image axis, `pi - yaw` kept in
/// `(-pi, pi]`. Exact, and an involution, for normalized angles.
pub fn mirror_yaw(yaw: f64) -> f64 {
    let yaw = normalize_angle(yaw);
    if yaw >= 0.0 {
        PI - yaw
    } else {
        -PI - yaw
    }
}

/// Horizontal flip that keeps the pair rectified: each image is mirrored
/// and the two swap roles, so the new left camera is the mirrored old
/// right camera. Geometry flips `x -> -x`.
pub fn hflip(scene: &Scene) -> Scene {
    let rig = &scene.rig;
    let mirror_cam = |cam: &crate::geom::CameraModel| {
        let mut m = *cam;
        m.cu = (cam.width - 1) as f64 - cam.cu;
        m
    };
    let mut offset = rig.left_offset;
    offset.x = rig.baseline - rig.left_offset.x;
    let new_rig = StereoRig {
        left: mirror_cam(&rig.right),
        right: mirror_cam(&rig.left),
        baseline: rig.baseline,
        left_offset: offset,
    };
    let flip = |p: &Point3| Point3::new(-p.x, p.y, p.z);
    Scene {
        left_image: scene.right_image.mirrored(),
        right_image: scene.left_image.mirrored(),
        points: scene.points.iter().map(|p| ScenePoint { xyz: flip(&p.xyz), intensity: p.intensity }).collect(),
        rig: new_rig,
        boxes: scene
            .boxes
            .iter()
            .map(|b| Box3D { center: flip(&b.center), yaw: mirror_yaw(b.yaw), ..b.clone() })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::CameraModel;

    fn rig() -> StereoRig {
        StereoRig::symmetric(CameraModel::new(100.0, 100.0, 40.0, 20.0, 80, 40).unwrap(), 0.5).unwrap()
    }

    fn scene(boxes: Vec<Box3D>, points: Vec<ScenePoint>) -> Scene {
        let img = |shift: f32| FeatureMap2D::from_fn(40, 80, 3, move |r, c, k| (r + c + k) as f32 / 200.0 + shift);
        Scene::new(img(0.0), img(0.1), points, rig(), boxes).unwrap()
    }

    fn car(x: f64, z: f64) -> Box3D {
        Box3D::new(Point3::new(x, 0.5, z), [1.5, 1.0, 1.0], 0.0, ObjectClass::Car).unwrap()
    }

    fn pt(x: f64, y: f64, z: f64) -> ScenePoint {
        ScenePoint { xyz: Point3::new(x, y, z), intensity: 0.5 }
    }

    #[test]
    fn bank_keeps_fully_visible_boxes() {
        let s = scene(vec![car(0.0, 10.0), car(-1.0, 12.0), car(9.0, 10.0)], vec![pt(0.1, 0.6, 10.2), pt(5.0, 0.0, 10.0)]);
        let bank = build_bank(&[s]);
        assert_eq!(bank.by_class[&ObjectClass::Car].len(), 2);
        assert_eq!(bank.skipped, 1);
        assert_eq!(bank.by_class[&ObjectClass::Car][0].object_points.len(), 1);
        assert!(build_bank(&[]).is_empty());
    }

    #[test]
    fn bank_keys_by_class() {
        let ped = Box3D { class: ObjectClass::Pedestrian, center: Point3::new(-1.5, 0.5, 12.0), ..car(0.0, 0.0) };
        let cyc = Box3D { class: ObjectClass::Cyclist, center: Point3::new(1.5, 0.5, 12.0), ..car(0.0, 0.0) };
        let bank = build_bank(&[scene(vec![car(0.0, 10.0), ped, cyc], vec![])]);
        assert_eq!(bank.by_class.len(), 3);
    }

    #[test]
    fn sampling_is_capped_and_deterministic() {
        let s = scene((0..3).map(|i| car(-1.0 + i as f64, 10.0 + 3.0 * i as f64)).collect(), vec![]);
        let bank = build_bank(&[s]);
        let counts = BTreeMap::from([(ObjectClass::Car, 5)]);
        let a = sample_objects(&bank, &counts, 7);
        assert_eq!(a.len(), 3);
        assert_eq!(a, sample_objects(&bank, &counts, 7));
    }

    #[test]
    fn identical_rig_pastes_in_place() {
        let src = scene(vec![car(0.0, 10.0)], vec![pt(0.0, 0.5, 10.0)]);
        let bank = build_bank(std::slice::from_ref(&src));
        let samples = sample_objects(&bank, &default_counts(), 1);
        let mut tgt = scene(vec![], vec![pt(0.05, 0.4, 30.0), pt(-8.0, 0.0, 10.0)]);
        for v in tgt.left_image.data_mut() {
            *v = 0.0;
        }
        let (out, rep) = paste(&tgt, &samples, 3, 1.0);
        assert!(rep.applied);
        assert_eq!(rep.accepted, vec![0]);
        let fp = rep.target_boxes[0][0];
        assert_eq!(fp, samples[0].patch_boxes[0]);
        for r in fp.v0.ceil() as usize..=fp.v1.floor() as usize {
            for c in fp.u0.ceil() as usize..=fp.u1.floor() as usize {
                for (a, b) in out.left_image.pixel(r, c).iter().zip(src.left_image.pixel(r, c)) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
        // The far point behind the patch is gone, the one off to the side stays.
        assert_eq!(rep.kept_points, vec![1]);
        assert_eq!(out.points.len(), 2);
        assert_eq!(out.boxes.len(), 1);
    }

    #[test]
    fn overlapping_samples_are_rejected() {
        let src = scene(vec![car(0.0, 10.0)], vec![]);
        let bank = build_bank(&[src]);
        let samples = sample_objects(&bank, &default_counts(), 1);
        let tgt = scene(vec![car(0.5, 10.5)], vec![]);
        let (out, rep) = paste(&tgt, &samples, 3, 1.0);
        assert_eq!(rep.rejected, vec![(0, RejectReason::Overlap)]);
        assert_eq!(out, tgt);
    }

    #[test]
    fn zero_probability_is_identity() {
        let src = scene(vec![car(0.0, 10.0)], vec![]);
        let samples = sample_objects(&build_bank(&[src]), &default_counts(), 1);
        let tgt = scene(vec![], vec![pt(0.0, 0.0, 20.0)]);
        let (out, rep) = paste(&tgt, &samples, 9, 0.0);
        assert!(!rep.applied);
        assert_eq!(out, tgt);
    }

    #[test]
    fn hflip_moves_boxes_and_swaps_views() {
        let b = Box3D::new(Point3::new(2.0, 0.5, 10.0), [1.5, 1.0, 1.0], 0.3, ObjectClass::Car).unwrap();
        let s = scene(vec![b], vec![pt(1.0, 0.0, 9.0)]);
        let f = hflip(&s);
        assert_eq!(f.boxes[0].center.x, -2.0);
        assert!((f.boxes[0].yaw - (PI - 0.3)).abs() < 1e-15);
        assert_eq!(hflip(&f), s);
        assert_eq!(f.points[0].xyz.x, -1.0);
        assert_eq!(f.left_image, s.right_image.mirrored());
        assert_eq!(f.rig.left.cu, 39.0);
        let p = Point3::new(-1.0, 0.2, 8.0);
        let (l, r) = (f.rig.project(View::Left, &p).unwrap(), f.rig.project(View::Right, &p).unwrap());
        assert!((l.u - r.u - 50.0 / 8.0).abs() < 1e-9);
        assert_eq!(hflip(&f).points, s.points);
    }

    #[test]
    fn mirror_yaw_examples() {
        assert_eq!(mirror_yaw(0.0), PI);
        assert_eq!(mirror_yaw(PI), 0.0);
        assert_eq!(mirror_yaw(-PI / 2.0), -PI / 2.0);
        assert_eq!(mirror_yaw(PI / 2.0), PI / 2.0);
        for k in 0..1000 {
            let y = normalize_angle(-3.2 + k as f64 * 0.0064);
            assert_eq!(mirror_yaw(mirror_yaw(y)), y);
        }
    }
}
