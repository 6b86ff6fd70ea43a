//! Deterministic synthetic stereo scenes for dataset-free testing.
//!
//! Objects stand on a flat ground plane and are placed so that every box
//! is fully visible in both views and no two boxes touch in bird's-eye
//! view. Images are smooth gradients (identical in both views, as if at
//! infinity) overpainted far-to-near with one flat color per object at its
//! projected 2D box. All coordinates and colors are pre-rounded to what the
//! KITTI file formats store, so a scene survives a write/read cycle intact.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::iou::bev_intersection;
use crate::error::Result;
use crate::geom::{Box3D, CameraModel, ObjectClass, Point3, Rect2, StereoRig, View};
use crate::grid::FeatureMap2D;
use crate::kitti_io::png::{dequantize_u8, quantize_u8};
use crate::slcp::{Scene, ScenePoint};

/// Camera height above the ground, meters.
pub const GROUND_Y: f64 = 1.65;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub counts: BTreeMap<ObjectClass, usize>,
    /// Range of box-center depths, meters.
    pub depth_range: (f64, f64),
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub baseline: f64,
    /// Spacing of the ground point grid, meters.
    pub ground_spacing: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            counts: BTreeMap::from([(ObjectClass::Car, 3), (ObjectClass::Pedestrian, 2), (ObjectClass::Cyclist, 2)]),
            depth_range: (8.0, 50.0),
            width: 1242,
            height: 375,
            focal: 720.0,
            baseline: 0.5,
            ground_spacing: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn rig(&self) -> Result<StereoRig> {
        let cu = ((self.width as f64 - 1.0) / 2.0).floor();
        let cv = ((self.height as f64 - 1.0) / 2.0).floor();
        let cam = CameraModel::new(self.focal, self.focal, cu, cv, self.width, self.height)?;
        StereoRig::symmetric(cam, self.baseline)
    }
}

/// Typical `(length, width, height)` of a class, meters.
pub fn class_size(class: &ObjectClass) -> [f64; 3] {
    match class {
        ObjectClass::Car => [3.9, 1.6, 1.5],
        ObjectClass::Pedestrian => [0.8, 0.6, 1.75],
        ObjectClass::Cyclist => [1.76, 0.6, 1.73],
        ObjectClass::Other(_) => [1.0, 1.0, 1.0],
    }
}

fn surface_points(class: &ObjectClass) -> usize {
    match class {
        ObjectClass::Car => 400,
        ObjectClass::Pedestrian => 120,
        ObjectClass::Cyclist => 160,
        ObjectClass::Other(_) => 100,
    }
}

/// Rounds to what a velodyne scan stores.
fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

/// Rounds box parameters to a 1/1024 grid, so converting between the
/// geometric center and the KITTI bottom center is exact.
fn dyadic(v: f64) -> f64 {
    (v * 1024.0).round() / 1024.0
}

const ATTEMPTS: usize = 200;
/// Clearance kept between boxes in bird's-eye view, meters.
const CLEARANCE: f64 = 0.5;

fn place(rng: &mut ChaCha8Rng, cfg: &SynthConfig, rig: &StereoRig, class: &ObjectClass, placed: &[Box3D]) -> Option<Box3D> {
    let base = class_size(class);
    let (z0, z1) = cfg.depth_range;
    for _ in 0..ATTEMPTS {
        let scale = rng.random_range(0.9..1.1);
        let size = base.map(|s| dyadic(s * scale));
        let z = dyadic(rng.random_range(z0..=z1));
        let half_fov = (rig.left.cu / rig.left.fu) * z;
        let x = dyadic(rng.random_range(-half_fov..=half_fov));
        let yaw = dyadic(rng.random_range(-PI..PI));
        let center = Point3::new(x, dyadic(GROUND_Y) - size[2] / 2.0, z);
        let Ok(b) = Box3D::new(center, size, yaw, class.clone()) else { continue };
        let visible = View::BOTH.iter().all(|&v| {
            rig.project_box(v, &b).is_ok_and(|pb| rig.camera(v).bounds().contains_rect(&pb.hull))
        });
        if !visible {
            continue;
        }
        let mut grown = b.clone();
        grown.size = [size[0] + 2.0 * CLEARANCE, size[1] + 2.0 * CLEARANCE, size[2]];
        if placed.iter().all(|o| bev_intersection(&grown, o) == 0.0) {
            return Some(b);
        }
    }
    None
}

fn box_surface_point(rng: &mut ChaCha8Rng, b: &Box3D) -> Point3 {
    // Slightly inside the faces so f32 rounding cannot push a point out.
    let half = [b.length() / 2.0 * 0.98, b.height() / 2.0 * 0.98, b.width() / 2.0 * 0.98];
    let areas = [half[1] * half[2], half[0] * half[2], half[0] * half[1]];
    let pick = rng.random_range(0.0..areas.iter().sum::<f64>());
    let axis = if pick < areas[0] {
        0
    } else if pick < areas[0] + areas[1] {
        1
    } else {
        2
    };
    let mut local = [0.0; 3];
    for (k, h) in half.iter().enumerate() {
        local[k] = if k == axis {
            if rng.random_bool(0.5) { *h } else { -*h }
        } else {
            rng.random_range(-*h..=*h)
        };
    }
    let (s, c) = b.yaw.sin_cos();
    let (lx, ly, lz) = (local[0], local[1], local[2]);
    let p = Point3::new(b.center.x + c * lx + s * lz, b.center.y + ly, b.center.z - s * lx + c * lz);
    p.map(f32_exact)
}

fn paint(img: &mut FeatureMap2D, rect: &Rect2, color: [f32; 3]) {
    let (c0, c1) = (rect.u0.ceil() as usize, rect.u1.floor() as usize);
    let (r0, r1) = (rect.v0.ceil() as usize, rect.v1.floor() as usize);
    for r in r0..=r1 {
        for c in c0..=c1 {
            img.pixel_mut(r, c).copy_from_slice(&color);
        }
    }
}

/// Builds one scene. The same configuration always yields the same scene,
/// bit for bit. A class may come up short only if its boxes cannot be
/// placed after many attempts.
pub fn synth_scene(cfg: &SynthConfig) -> Result<Scene> {
    let rig = cfg.rig()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut boxes: Vec<Box3D> = Vec::new();
    for (class, &n) in &cfg.counts {
        for _ in 0..n {
            if let Some(b) = place(&mut rng, cfg, &rig, class, &boxes) {
                boxes.push(b);
            }
        }
    }

    let mut points = Vec::new();
    let step = cfg.ground_spacing;
    let (nx, nz) = ((40.0 / step) as i64, ((cfg.depth_range.1 + 10.0) / step) as i64);
    for iz in 1..=nz {
        for ix in -nx / 2..=nx / 2 {
            let p = Point3::new(f32_exact(ix as f64 * step), f32_exact(GROUND_Y), f32_exact(iz as f64 * step));
            if !boxes.iter().any(|b| b.contains_with_slack(&p, 0.05)) {
                points.push(ScenePoint { xyz: p, intensity: 0.2 });
            }
        }
    }
    for b in &boxes {
        for _ in 0..surface_points(&b.class) {
            let xyz = box_surface_point(&mut rng, b);
            points.push(ScenePoint { xyz, intensity: rng.random_range(0.0..1.0f32) });
        }
    }

    let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI));
    let background = FeatureMap2D::from_fn(cfg.height, cfg.width, 3, |r, c, k| {
        let t = phase[k] + c as f64 * (0.011 + 0.004 * k as f64) + r as f64 * (0.017 - 0.003 * k as f64);
        dequantize_u8(quantize_u8((0.5 + 0.35 * t.sin()) as f32))
    });
    let colors: Vec<[f32; 3]> =
        boxes.iter().map(|_| std::array::from_fn(|_| dequantize_u8(rng.random_range(0..=255u8)))).collect();
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[b].center.z.total_cmp(&boxes[a].center.z).then(a.cmp(&b)));
    let mut images = [background.clone(), background];
    for (vi, view) in View::BOTH.into_iter().enumerate() {
        for &i in &order {
            let rect = rig.project_box(view, &boxes[i])?.hull;
            paint(&mut images[vi], &rect, colors[i]);
        }
    }
    let [left, right] = images;
    Scene::new(left, right, points, rig, boxes)
}

/// A feature map of independent uniform values in `[-1, 1)`.
pub fn random_feature_map(rows: usize, cols: usize, channels: usize, seed: u64) -> FeatureMap2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols * channels).map(|_| rng.random_range(-1.0..1.0f32)).collect();
    FeatureMap2D::new(rows, cols, channels, data).expect("values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { width: 414, height: 125, focal: 240.0, ground_spacing: 1.0, ..SynthConfig::default() }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_scene(&small()).unwrap();
        assert_eq!(a, synth_scene(&small()).unwrap());
        let b = synth_scene(&SynthConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.boxes, b.boxes);
    }

    #[test]
    fn requested_boxes_do_not_touch() {
        let cfg = SynthConfig { counts: BTreeMap::from([(ObjectClass::Car, 3)]), ..small() };
        for seed in 0..10 {
            let s = synth_scene(&SynthConfig { seed, ..cfg.clone() }).unwrap();
            assert_eq!(s.boxes.len(), 3);
            for i in 0..3 {
                for j in 0..i {
                    assert_eq!(crate::analytics::iou_bev(&s.boxes[i], &s.boxes[j]), 0.0);
                }
            }
        }
    }

    #[test]
    fn object_points_project_inside_their_boxes() {
        let s = synth_scene(&small()).unwrap();
        let mut inside = 0;
        for b in &s.boxes {
            let hulls: Vec<Rect2> = View::BOTH.iter().map(|&v| s.rig.project_box(v, b).unwrap().hull).collect();
            for p in s.points.iter().filter(|p| b.contains(&p.xyz)) {
                inside += 1;
                for (k, &v) in View::BOTH.iter().enumerate() {
                    let px = s.rig.project(v, &p.xyz).unwrap();
                    assert!(hulls[k].contains(px.u, px.v));
                }
            }
        }
        assert_eq!(inside, s.boxes.iter().map(|b| surface_points(&b.class)).sum::<usize>());
    }
}
