//! Fixtures shared by the criterion benches.

use sweepvol::kitti_io::random_feature_map;
use sweepvol::{CameraModel, FeatureMap2D, FrustumSpec, FrustumVolume, Result, StereoRig};

/// A stereo feature pair with a matching rig and frustum buffer.
pub struct SweepFixture {
    pub left: FeatureMap2D,
    pub right: FeatureMap2D,
    pub rig: StereoRig,
    pub volume: FrustumVolume,
}

/// Features at stride 4 of a `4 * cols` by `4 * rows` image.
pub fn sweep_fixture(rows: usize, cols: usize, planes: usize, cin: usize, cv: usize, seed: u64) -> Result<SweepFixture> {
    let (w, h) = (cols * 4, rows * 4);
    let cam = CameraModel::new(720.0, 720.0, (w / 2) as f64, (h / 2) as f64, w, h)?;
    let rig = StereoRig::symmetric(cam, 0.5)?;
    let spec = FrustumSpec::new(rows, cols, 4.0, FrustumSpec::uniform_depth(2.0, 59.4, planes)?)?;
    Ok(SweepFixture {
        left: random_feature_map(rows, cols, cin, seed),
        right: random_feature_map(rows, cols, cin, seed.wrapping_add(1)),
        rig,
        volume: FrustumVolume::zeros(spec, 2 * cv),
    })
}
