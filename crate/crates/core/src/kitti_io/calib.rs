//! KITTI object calibration files (`calib/NNNNNN.txt`).

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix3x4, Vector3};

use crate::error::{domain, Error, Result};
use crate::geom::{CameraModel, Point3, StereoRig};

/// Projection matrices of the two color cameras plus the LiDAR extrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Left color camera (`P2`).
    pub p_left: Matrix3x4<f64>,
    /// Right color camera (`P3`).
    pub p_right: Matrix3x4<f64>,
    pub r0_rect: Matrix3<f64>,
    pub tr_velo_to_cam: Matrix3x4<f64>,
}

fn values(fields: &HashMap<&str, &str>, key: &str, count: usize) -> Result<Vec<f64>> {
    let raw = fields.get(key).ok_or_else(|| Error::Parse(format!("missing key {key}")))?;
    let vals = raw
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: bad number {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != count {
        return Err(Error::Parse(format!("{key}: expected {count} values, found {}", vals.len())));
    }
    Ok(vals)
}

/// `K^-1 p` for the upper-triangular intrinsic block `K` of `P`.
fn camera_translation(p: &Matrix3x4<f64>) -> Point3 {
    let tz = p[(2, 3)] / p[(2, 2)];
    let ty = (p[(1, 3)] - p[(1, 2)] * tz) / p[(1, 1)];
    let tx = (p[(0, 3)] - p[(0, 1)] * ty - p[(0, 2)] * tz) / p[(0, 0)];
    Point3::new(tx, ty, tz)
}

fn fmt_row(out: &mut String, key: &str, vals: impl IntoIterator<Item = f64>) {
    out.push_str(key);
    out.push(':');
    for v in vals {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

impl Calibration {
    /// Parses `KEY: v1 v2 ...` lines. `P2`, `P3`, `R0_rect` and
    /// `Tr_velo_to_cam` are required; other keys are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let fields: HashMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once(':'))
            .map(|(k, v)| (k.trim(), v))
            .collect();
        let p_left = Matrix3x4::from_row_slice(&values(&fields, "P2", 12)?);
        let p_right = Matrix3x4::from_row_slice(&values(&fields, "P3", 12)?);
        let r0_rect = Matrix3::from_row_slice(&values(&fields, "R0_rect", 9)?);
        let tr_velo_to_cam = Matrix3x4::from_row_slice(&values(&fields, "Tr_velo_to_cam", 12)?);
        for (key, p) in [("P2", &p_left), ("P3", &p_right)] {
            if !(p[(0, 0)] > 0.0 && p[(1, 1)] > 0.0) {
                return Err(Error::Parse(format!("{key}: focal lengths must be positive")));
            }
        }
        Ok(Self { p_left, p_right, r0_rect, tr_velo_to_cam })
    }

    /// Writes the four matrices in KITTI layout; parsing the result gives
    /// back identical values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let rows34 = |m: &Matrix3x4<f64>| (0..3).flat_map(move |r| (0..4).map(move |c| m[(r, c)])).collect::<Vec<_>>();
        fmt_row(&mut out, "P2", rows34(&self.p_left));
        fmt_row(&mut out, "P3", rows34(&self.p_right));
        fmt_row(&mut out, "R0_rect", (0..3).flat_map(|r| (0..3).map(move |c| self.r0_rect[(r, c)])));
        fmt_row(&mut out, "Tr_velo_to_cam", rows34(&self.tr_velo_to_cam));
        out
    }

    pub fn left_camera(&self, width: usize, height: usize) -> Result<CameraModel> {
        camera(&self.p_left, width, height)
    }

    /// `t_left.x - t_right.x` where `t = K^-1 P[:, 3]` for each camera.
    pub fn baseline(&self) -> f64 {
        camera_translation(&self.p_left).x - camera_translation(&self.p_right).x
    }

    /// The stereo rig for images of the given size, in the rectified
    /// reference frame of the calibration.
    pub fn stereo_rig(&self, width: usize, height: usize) -> Result<StereoRig> {
        let left = camera(&self.p_left, width, height)?;
        let right = camera(&self.p_right, width, height)?;
        StereoRig::with_offset(left, right, self.baseline(), camera_translation(&self.p_left))
    }

    /// Synthetic calibration reproducing `rig`: rectification is the
    /// identity and the LiDAR axes (x forward, y left, z up) are a pure
    /// permutation of the camera axes.
    pub fn from_rig(rig: &StereoRig) -> Self {
        let p = |cam: &CameraModel, t: Point3| {
            let k = Matrix3::new(cam.fu, 0.0, cam.cu, 0.0, cam.fv, cam.cv, 0.0, 0.0, 1.0);
            let mut m = Matrix3x4::zeros();
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&k);
            m.set_column(3, &(k * t));
            m
        };
        let t_left = rig.left_offset;
        let t_right = rig.left_offset - Point3::new(rig.baseline, 0.0, 0.0);
        #[rustfmt::skip]
        let tr = Matrix3x4::new(
            0.0, -1.0, 0.0, 0.0,
            0.0, 0.0, -1.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
        );
        Self { p_left: p(&rig.left, t_left), p_right: p(&rig.right, t_right), r0_rect: Matrix3::identity(), tr_velo_to_cam: tr }
    }

    /// LiDAR point to the rectified camera frame: `R0_rect * Tr_velo_to_cam * p`.
    pub fn velo_to_rect(&self, p: &Point3) -> Point3 {
        let r = self.tr_velo_to_cam.fixed_view::<3, 3>(0, 0);
        let t: Vector3<f64> = self.tr_velo_to_cam.column(3).into();
        self.r0_rect * (r * p + t)
    }

    /// Inverse of [`Calibration::velo_to_rect`].
    pub fn rect_to_velo(&self, p: &Point3) -> Result<Point3> {
        let r0_inv = self.r0_rect.try_inverse().ok_or_else(|| domain("R0_rect is singular"))?;
        let r = self.tr_velo_to_cam.fixed_view::<3, 3>(0, 0).into_owned();
        let r_inv = r.try_inverse().ok_or_else(|| domain("Tr_velo_to_cam rotation is singular"))?;
        let t: Vector3<f64> = self.tr_velo_to_cam.column(3).into();
        Ok(r_inv * (r0_inv * p - t))
    }
}

fn camera(p: &Matrix3x4<f64>, width: usize, height: usize) -> Result<CameraModel> {
    CameraModel::new(p[(0, 0)], p[(1, 1)], p[(0, 2)], p[(1, 2)], width, height)
}
