//! Property tests for the library's invariants.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use sweepvol::analytics::ap::{ap_r40, Detection};
use sweepvol::analytics::{iou_3d, iou_bev};
use sweepvol::dualview::{cost_to_depth, integrate};
use sweepvol::geom::normalize_angle;
use sweepvol::kitti_io::{
    labels_to_text, parse_labels, random_feature_map, read_dvol, synth_scene, write_dvol, Calibration, Dvol,
    KittiObject, SynthConfig,
};
use sweepvol::slcp::{build_bank, default_counts, hflip, paste, sample_objects};
use sweepvol::sweep::{cyclic_slice, shift_of_depth};
use sweepvol::{
    Box3D, CameraModel, FrustumSpec, FrustumVolume, ObjectClass, Point3, StereoRig, SweepConfig,
    View, VoxelGridSpec, VoxelVolume,
};

fn kitti_rig(baseline: f64) -> StereoRig {
    StereoRig::symmetric(CameraModel::new(721.5, 721.5, 609.6, 172.9, 1242, 375).unwrap(), baseline).unwrap()
}

fn arb_box() -> impl Strategy<Value = Box3D> {
    (-10.0..10.0f64, 0.0..2.0f64, 5.0..40.0f64, 0.5..4.5f64, 0.5..2.0f64, 0.5..2.0f64, -PI..PI).prop_map(
        |(x, y, z, l, w, h, yaw)| Box3D::new(Point3::new(x, y, z), [l, w, h], yaw, ObjectClass::Car).unwrap(),
    )
}

fn small_scene(seed: u64) -> SynthConfig {
    SynthConfig { seed, width: 414, height: 125, focal: 240.0, ground_spacing: 1.0, ..SynthConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // geom

    #[test]
    fn rectified_rows_and_epipolar_offset(x in -50.0..50.0f64, y in -5.0..5.0f64, z in 1.0..100.0f64, b in 0.05..2.0f64) {
        let rig = kitti_rig(b);
        let p = Point3::new(x, y, z);
        let l = rig.project(View::Left, &p).unwrap();
        let r = rig.project(View::Right, &p).unwrap();
        prop_assert_eq!(l.v, r.v);
        let want = rig.left.fu * b / z;
        prop_assert!(((l.u - r.u) - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn disparity_strictly_decreases(z in 0.1..200.0f64, dz in 1e-3..50.0f64) {
        let rig = kitti_rig(0.54);
        prop_assert!(rig.disparity(z + dz).unwrap() < rig.disparity(z).unwrap());
    }

    #[test]
    fn yaw_lands_in_half_open_range(a in -100.0..100.0f64) {
        let y = normalize_angle(a);
        prop_assert!(y > -PI && y <= PI);
        prop_assert!(((a - y) / (2.0 * PI)).fract().abs() < 1e-9 || (1.0 - ((a - y) / (2.0 * PI)).fract().abs()) < 1e-9);
        prop_assert_eq!(normalize_angle(y), y);
    }

    // grid

    #[test]
    fn bilinear_is_continuous(seed in any::<u64>(), u in -1.5..9.5f64, v in -1.5..6.5f64, eps in -1e-6..1e-6f64) {
        let map = random_feature_map(6, 9, 2, seed);
        let a = map.bilinear_sample(u, v, 0..2);
        let b = map.bilinear_sample(u + eps, v - eps, 0..2);
        // Values lie in [-1, 1), so neighboring corner differences are below 2.
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() as f64 <= 4.0 * eps.abs() + 1e-6);
        }
    }

    #[test]
    fn voxel_centers_are_affine_and_distinct(i in 0..10usize, j in 0..5usize, k in 0..8usize, di in 1..3usize) {
        let spec = VoxelGridSpec::new(Point3::new(-1.0, 0.5, 2.0), [0.2, 0.25, 0.5], [12, 5, 8]).unwrap();
        let c = spec.voxel_center([i, j, k]).unwrap();
        let fi = spec.fractional_index(&c);
        prop_assert!((fi[0] - i as f64).abs() < 1e-9 && (fi[1] - j as f64).abs() < 1e-9 && (fi[2] - k as f64).abs() < 1e-9);
        if i + di < 12 {
            let d = spec.voxel_center([i + di, j, k]).unwrap() - c;
            prop_assert!((d.x - 0.2 * di as f64).abs() < 1e-9 && d.y == 0.0 && d.z == 0.0);
        }
    }

    // sweep

    #[test]
    fn cyclic_slice_law_holds(cin in 1..200usize, cv_seed in any::<usize>(), shift_seed in any::<usize>()) {
        let cv = 1 + cv_seed % cin;
        let shift = shift_seed % (cin - cv + 1);
        let idx = cyclic_slice(shift, cin, cv).unwrap();
        prop_assert_eq!(idx.len(), cv);
        for (j, &c) in idx.iter().enumerate() {
            prop_assert_eq!(c % cv, j);
        }
        let mut sorted = idx;
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (shift..shift + cv).collect::<Vec<_>>());
        prop_assert!(cyclic_slice(cin - cv + 1, cin, cv).is_err());
    }

    #[test]
    fn shift_is_monotone_in_depth(z in 0.5..80.0f64, dz in 0.0..40.0f64, alpha in 0.0..2.0f64, s in 0.01..3.0f64) {
        let rig = kitti_rig(0.54);
        let cfg = SweepConfig::depthwise(32, alpha).with_shift_ratio(s);
        let near = shift_of_depth(&rig, z, &cfg, 96, 288).unwrap();
        let far = shift_of_depth(&rig, z + dz, &cfg, 96, 288).unwrap();
        prop_assert!(far <= near);
        prop_assert!(near <= 64);
    }

    // dualview

    #[test]
    fn soft_argmin_depth_stays_in_range_and_ignores_offsets(seed in any::<u64>(), offset in -50.0..50.0f32) {
        let spec = FrustumSpec::new(3, 4, 2.0, FrustumSpec::uniform_disparity(2.0, 60.0, 7).unwrap()).unwrap();
        let logits = random_feature_map(3, 4 * 7, 1, seed).into_data().iter().map(|v| v * 20.0).collect::<Vec<_>>();
        let shifted: Vec<f32> = logits.iter().map(|v| v + offset).collect();
        let a = cost_to_depth(&FrustumVolume::new(spec.clone(), 1, logits).unwrap(), 6, 8).unwrap();
        let b = cost_to_depth(&FrustumVolume::new(spec, 1, shifted).unwrap(), 6, 8).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((2.0..=60.0).contains(x));
            prop_assert!((x - y).abs() <= 1e-3 * x);
        }
    }

    #[test]
    fn integrate_adds_channels(ca in 1..5usize, cb in 1..5usize) {
        let spec = VoxelGridSpec::new(Point3::zeros(), [1.0; 3], [2, 3, 2]).unwrap();
        let v = integrate(&VoxelVolume::zeros(spec.clone(), ca), &VoxelVolume::zeros(spec, cb)).unwrap();
        prop_assert_eq!(v.dims(), [2, 3, 2, ca + cb]);
    }

    // analytics

    #[test]
    fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
        for f in [iou_bev, iou_3d] {
            let (x, y) = (f(&a, &b), f(&b, &a));
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&x));
        }
        prop_assert!((iou_bev(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ap_ignores_monotone_score_maps(gt in prop::collection::vec(arb_box(), 1..6), noise in prop::collection::vec((arb_box(), 0.0..1.0f64, any::<bool>()), 0..8)) {
        let dets: Vec<Detection> = noise
            .iter()
            .enumerate()
            .map(|(i, (b, s, copy))| {
                let bbox = if *copy { gt[i % gt.len()].clone() } else { b.clone() };
                Detection::new(bbox, *s).unwrap()
            })
            .collect();
        let squashed: Vec<Detection> = dets.iter().map(|d| Detection::new(d.bbox.clone(), d.score * d.score).unwrap()).collect();
        let a = ap_r40(&dets, &gt, iou_3d, 0.7).unwrap();
        let b = ap_r40(&squashed, &gt, iou_3d, 0.7).unwrap();
        prop_assert_eq!(a, b);
    }

    // kitti_io

    #[test]
    fn labels_roundtrip(boxes in prop::collection::vec(arb_box(), 0..6)) {
        let rig = kitti_rig(0.54);
        let objs: Vec<KittiObject> = boxes.iter().map(|b| KittiObject::from_box(b, &rig)).collect();
        let back = parse_labels(&labels_to_text(&objs)).unwrap();
        prop_assert_eq!(back, objs);
    }

    #[test]
    fn dvol_roundtrip(rows in 1..4usize, cols in 1..5usize, ch in 1..4usize, seed in any::<u64>()) {
        let map = random_feature_map(rows, cols, ch, seed);
        let vol = Dvol::Map2D(map);
        prop_assert_eq!(read_dvol(&write_dvol(&vol)).unwrap(), vol);
        let spec = FrustumSpec::new(rows, cols, 4.0, FrustumSpec::uniform_depth(2.0, 10.0, 3).unwrap()).unwrap();
        let data = random_feature_map(rows, cols * 3, ch, seed ^ 1).into_data();
        let vol = Dvol::Frustum(FrustumVolume::new(spec, ch, data).unwrap());
        prop_assert_eq!(read_dvol(&write_dvol(&vol)).unwrap(), vol);
    }

    #[test]
    fn synthetic_calibration_keeps_the_baseline(f in 100.0..1500.0f64, b in 0.05..2.0f64) {
        let rig = StereoRig::symmetric(CameraModel::new(f, f, 600.0, 180.0, 1242, 375).unwrap(), b).unwrap();
        let calib = Calibration::from_rig(&rig);
        prop_assert!((calib.baseline() - b).abs() < 1e-9);
        let text = calib.to_text();
        prop_assert_eq!(Calibration::parse(&text).unwrap(), calib);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hflip_mirrors_depth_with_swapped_views(seed in 0..1000u64) {
        let s = synth_scene(&small_scene(seed)).unwrap();
        let f = hflip(&s);
        prop_assert_eq!(&hflip(&f), &s);
        // Exact up to the rounding rule: a projection landing on a .5 tie
        // rounds away from zero on both sides of the mirror, so pixels
        // touched by a tie are exempt.
        for (flipped_view, view) in [(View::Left, View::Right), (View::Right, View::Left)] {
            let got = f.depth_map(flipped_view);
            let want = s.depth_map(view).mirrored();
            let mut exempt = std::collections::BTreeSet::new();
            for p in &f.points {
                let Ok(px) = f.rig.project(flipped_view, &p.xyz) else { continue };
                let tie = |x: f64| (x - x.floor() - 0.5).abs() < 1e-9;
                if tie(px.u) || tie(px.v) {
                    for r in [px.v.floor(), px.v.ceil()] {
                        for c in [px.u.floor(), px.u.ceil()] {
                            exempt.insert((r as i64, c as i64));
                        }
                    }
                }
            }
            for r in 0..got.rows() {
                for c in 0..got.cols() {
                    if !exempt.contains(&(r as i64, c as i64)) {
                        prop_assert_eq!(got.get(r, c), want.get(r, c), "pixel ({}, {})", r, c);
                    }
                }
            }
        }
    }

    #[test]
    fn paste_invariants(target_seed in 0..1000u64, seed in any::<u64>()) {
        let bank = build_bank(&[synth_scene(&small_scene(5000)).unwrap(), synth_scene(&small_scene(5001)).unwrap()]);
        let target = synth_scene(&small_scene(target_seed)).unwrap();
        let samples = sample_objects(&bank, &default_counts(), seed);
        let (out, rep) = paste(&target, &samples, seed, 1.0);
        let (again, rep2) = paste(&target, &samples, seed, 1.0);
        prop_assert_eq!(&out, &again);
        prop_assert_eq!(&rep, &rep2);

        prop_assert_eq!(out.boxes.len(), target.boxes.len() + rep.accepted.len());
        for (i, a) in out.boxes.iter().enumerate() {
            for b in &out.boxes[..i] {
                prop_assert_eq!(iou_bev(a, b), 0.0);
            }
        }

        // Uni-peak depth: a pixel inside a pasted footprint only sees points
        // of a single source, so background and farther objects never leak
        // through. Sources: background, then each pasted run in order.
        let mut source = vec![usize::MAX; rep.kept_points.len()];
        for &(idx, n) in &rep.added_points {
            source.extend(std::iter::repeat_n(idx, n));
        }
        prop_assert_eq!(source.len(), out.points.len());
        for (vi, view) in View::BOTH.into_iter().enumerate() {
            let mut owner: BTreeMap<(i64, i64), usize> = BTreeMap::new();
            for (p, &src) in out.points.iter().zip(&source) {
                let Ok(px) = out.rig.project(view, &p.xyz) else { continue };
                if !rep.target_boxes.iter().any(|tb| tb[vi].contains(px.u, px.v)) {
                    continue;
                }
                let key = (px.u.round() as i64, px.v.round() as i64);
                let first = *owner.entry(key).or_insert(src);
                prop_assert_eq!(first, src, "pixel {:?} in view {:?} mixes sources", key, view);
            }
        }
    }
}

#[test]
fn identity_paste_keeps_maps() {
    let s = synth_scene(&small_scene(1)).unwrap();
    let (out, rep) = paste(&s, &[], 0, 1.0);
    assert!(rep.applied);
    assert_eq!(out, s);
}
