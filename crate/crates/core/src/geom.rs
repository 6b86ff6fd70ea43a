//! Rectified pinhole cameras, stereo rigs and 3D boxes.
//!
//! All 3D quantities use the KITTI camera convention: x to the right, y
//! down, z forward, meters. Depth always means z-depth, never ray length.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{domain, Result};

pub type Point3 = Vector3<f64>;

/// A projected image location together with the z-depth of the source point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Rectified pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fu: f64,
    pub fv: f64,
    pub cu: f64,
    pub cv: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraModel {
    pub fn new(fu: f64, fv: f64, cu: f64, cv: f64, width: usize, height: usize) -> Result<Self> {
        if !(fu > 0.0 && fv > 0.0) {
            return Err(domain(format!("focal lengths must be positive, got ({fu}, {fv})")));
        }
        if !(0.0..width as f64).contains(&cu) || !(0.0..height as f64).contains(&cv) {
            return Err(domain(format!(
                "principal point ({cu}, {cv}) outside {width}x{height} image"
            )));
        }
        Ok(Self { fu, fv, cu, cv, width, height })
    }

    pub fn project(&self, p: &Point3) -> Result<Pixel> {
        if !(p.z > 0.0) {
            return Err(domain(format!("cannot project point at depth {}", p.z)));
        }
        Ok(Pixel {
            u: self.fu * p.x / p.z + self.cu,
            v: self.fv * p.y / p.z + self.cv,
            depth: p.z,
        })
    }

    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Result<Point3> {
        if !(depth > 0.0) {
            return Err(domain(format!("cannot unproject at depth {depth}")));
        }
        Ok(Point3::new(
            (u - self.cu) * depth / self.fu,
            (v - self.cv) * depth / self.fv,
            depth,
        ))
    }

    /// Whether a continuous pixel coordinate lies on the image lattice
    /// `[0, width-1] x [0, height-1]`.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }

    /// Projects the 8 corners of `bbox` and returns them with their tight
    /// axis-aligned hull, clipped to the image.
    pub fn project_box(&self, bbox: &Box3D) -> Result<ProjectedBox> {
        let mut corners = [[0.0; 2]; 8];
        for (dst, c) in corners.iter_mut().zip(bbox.corners()) {
            let px = self.project(&c).map_err(|_| {
                domain(format!("box corner ({:.3}, {:.3}, {:.3}) is behind the camera", c.x, c.y, c.z))
            })?;
            *dst = [px.u, px.v];
        }
        let hull = Rect2::hull(corners.iter().copied());
        let clipped = hull.intersect(&self.bounds());
        Ok(ProjectedBox { corners, hull, clipped })
    }

    pub fn bounds(&self) -> Rect2 {
        Rect2::new(0.0, 0.0, (self.width - 1) as f64, (self.height - 1) as f64)
    }
}

/// Axis-aligned 2D rectangle in continuous pixel coordinates, inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub u0: f64,
    pub v0: f64,
    pub u1: f64,
    pub v1: f64,
}

impl Rect2 {
    pub fn new(u0: f64, v0: f64, u1: f64, v1: f64) -> Self {
        Self { u0, v0, u1, v1 }
    }

    pub fn hull(points: impl IntoIterator<Item = [f64; 2]>) -> Self {
        let mut r = Self::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for [u, v] in points {
            r.u0 = r.u0.min(u);
            r.v0 = r.v0.min(v);
            r.u1 = r.u1.max(u);
            r.v1 = r.v1.max(v);
        }
        r
    }

    /// Intersection; may be empty (see [`Rect2::is_empty`]).
    pub fn intersect(&self, other: &Rect2) -> Rect2 {
        Rect2::new(
            self.u0.max(other.u0),
            self.v0.max(other.v0),
            self.u1.min(other.u1),
            self.v1.min(other.v1),
        )
    }

    pub fn is_empty(&self) -> bool {
        !(self.u1 >= self.u0 && self.v1 >= self.v0)
    }

    pub fn width(&self) -> f64 {
        self.u1 - self.u0
    }

    pub fn height(&self) -> f64 {
        self.v1 - self.v0
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u0 && u <= self.u1 && v >= self.v0 && v <= self.v1
    }

    pub fn contains_rect(&self, other: &Rect2) -> bool {
        other.u0 >= self.u0 && other.u1 <= self.u1 && other.v0 >= self.v0 && other.v1 <= self.v1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedBox {
    pub corners: [[f64; 2]; 8],
    /// Tight hull of the projected corners, unclipped.
    pub hull: Rect2,
    /// `hull` clipped to the image lattice.
    pub clipped: Rect2,
}

/// Which camera of a stereo rig.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    Left,
    Right,
}

impl View {
    pub const BOTH: [View; 2] = [View::Left, View::Right];
}

/// Rectified stereo pair. The right camera sits `baseline` meters along +x
/// of the left camera. Points are expressed in a reference frame that is
/// offset from the left camera by the translation `left_offset`
/// (`p_left = p_ref + left_offset`); it is zero unless a dataset's
/// projection matrices say otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub left: CameraModel,
    pub right: CameraModel,
    pub baseline: f64,
    pub left_offset: Point3,
}

impl StereoRig {
    pub fn new(left: CameraModel, right: CameraModel, baseline: f64) -> Result<Self> {
        Self::with_offset(left, right, baseline, Point3::zeros())
    }

    pub fn with_offset(
        left: CameraModel,
        right: CameraModel,
        baseline: f64,
        left_offset: Point3,
    ) -> Result<Self> {
        if !(baseline > 0.0) {
            return Err(domain(format!("baseline must be positive, got {baseline}")));
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        if !(close(left.fu, right.fu) && close(left.fv, right.fv) && close(left.cv, right.cv)) {
            return Err(domain("stereo cameras must share fu, fv and cv"));
        }
        if left.width != right.width || left.height != right.height {
            return Err(domain("stereo cameras must share the image size"));
        }
        Ok(Self { left, right, baseline, left_offset })
    }

    /// A symmetric rig: both cameras share every intrinsic.
    pub fn symmetric(cam: CameraModel, baseline: f64) -> Result<Self> {
        Self::new(cam, cam, baseline)
    }

    pub fn camera(&self, view: View) -> &CameraModel {
        match view {
            View::Left => &self.left,
            View::Right => &self.right,
        }
    }

    /// Translation taking reference-frame points into the given camera frame.
    pub fn offset(&self, view: View) -> Point3 {
        match view {
            View::Left => self.left_offset,
            View::Right => self.left_offset - Point3::new(self.baseline, 0.0, 0.0),
        }
    }

    pub fn to_camera(&self, view: View, p: &Point3) -> Point3 {
        p + self.offset(view)
    }

    pub fn project(&self, view: View, p: &Point3) -> Result<Pixel> {
        self.camera(view).project(&self.to_camera(view, p))
    }

    /// Projects a reference-frame box into one view.
    pub fn project_box(&self, view: View, bbox: &Box3D) -> Result<ProjectedBox> {
        let mut shifted = bbox.clone();
        shifted.center += self.offset(view);
        self.camera(view).project_box(&shifted)
    }

    /// `f_u * baseline`, the disparity of a point at unit depth.
    pub fn focal_baseline(&self) -> f64 {
        self.left.fu * self.baseline
    }

    pub fn disparity(&self, depth: f64) -> Result<f64> {
        if !(depth > 0.0) {
            return Err(domain(format!("disparity undefined at depth {depth}")));
        }
        Ok(self.focal_baseline() / depth)
    }

    pub fn depth_of_disparity(&self, disparity: f64) -> Result<f64> {
        if !(disparity > 0.0) {
            return Err(domain(format!("depth undefined at disparity {disparity}")));
        }
        Ok(self.focal_baseline() / disparity)
    }
}

/// Object category of a labeled box.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectClass {
    Car,
    Pedestrian,
    Cyclist,
    Other(String),
}

impl ObjectClass {
    /// The three classes evaluated and augmented by default.
    pub const MAIN: [ObjectClass; 3] = [ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist];

    pub fn as_str(&self) -> &str {
        match self {
            ObjectClass::Car => "Car",
            ObjectClass::Pedestrian => "Pedestrian",
            ObjectClass::Cyclist => "Cyclist",
            ObjectClass::Other(s) => s,
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "Car" => ObjectClass::Car,
            "Pedestrian" => ObjectClass::Pedestrian,
            "Cyclist" => ObjectClass::Cyclist,
            other => ObjectClass::Other(other.to_string()),
        })
    }
}

/// Spacing of the yaw grid: the unit in the last place of `pi`.
const ANGLE_QUANTUM: f64 = 1.0 / (1u64 << 51) as f64;

/// Wraps an angle into `(-pi, pi]` and snaps it to multiples of 2^-51 rad.
///
/// On that grid `pi - a` is exact, so mirroring a heading twice gives back
/// the same bits. The snap moves an angle by at most 2^-52 rad.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r = (r / ANGLE_QUANTUM).round() * ANGLE_QUANTUM;
    if r <= -PI {
        r = PI;
    }
    r
}

/// An oriented 3D box in the camera frame.
///
/// `center` is the geometric center (not the KITTI bottom center).
/// `size` is (length, width, height): length runs along the heading
/// (local x), width along local z, height along y. `yaw` rotates about the
/// vertical y axis with the KITTI `rotation_y` sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Box3D {
    pub center: Point3,
    pub size: [f64; 3],
    pub yaw: f64,
    pub class: ObjectClass,
    pub score: Option<f64>,
}

impl Box3D {
    pub fn new(center: Point3, size: [f64; 3], yaw: f64, class: ObjectClass) -> Result<Self> {
        if size.iter().any(|&s| !(s > 0.0)) {
            return Err(domain(format!("box size must be positive, got {size:?}")));
        }
        Ok(Self { center, size, yaw: normalize_angle(yaw), class, score: None })
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn length(&self) -> f64 {
        self.size[0]
    }

    pub fn width(&self) -> f64 {
        self.size[1]
    }

    pub fn height(&self) -> f64 {
        self.size[2]
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    fn local_to_frame(&self, lx: f64, ly: f64, lz: f64) -> Point3 {
        let (s, c) = self.yaw.sin_cos();
        Point3::new(
            self.center.x + c * lx + s * lz,
            self.center.y + ly,
            self.center.z - s * lx + c * lz,
        )
    }

    /// Maps a frame point into box-local coordinates (length, height, width axes).
    pub fn to_local(&self, p: &Point3) -> Point3 {
        let (s, c) = self.yaw.sin_cos();
        let d = p - self.center;
        Point3::new(c * d.x - s * d.z, d.y, s * d.x + c * d.z)
    }

    /// Corners in canonical order: the bottom face (larger y) starting at
    /// local (+l/2, +w/2) and walking (+,+), (-,+), (-,-), (+,-) in local
    /// (x, z), then the top face in the same order.
    pub fn corners(&self) -> [Point3; 8] {
        let [l, w, h] = self.size.map(|s| s / 2.0);
        let ring = [(l, w), (-l, w), (-l, -w), (l, -w)];
        let mut out = [Point3::zeros(); 8];
        for (face, ly) in [h, -h].into_iter().enumerate() {
            for (k, &(lx, lz)) in ring.iter().enumerate() {
                out[face * 4 + k] = self.local_to_frame(lx, ly, lz);
            }
        }
        out
    }

    /// Footprint corners in the x-z plane, counter-clockwise in (x, z).
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let c = self.corners();
        let mut ring = [[c[0].x, c[0].z], [c[1].x, c[1].z], [c[2].x, c[2].z], [c[3].x, c[3].z]];
        let area2: f64 = (0..4)
            .map(|i| {
                let [x0, z0] = ring[i];
                let [x1, z1] = ring[(i + 1) % 4];
                x0 * z1 - x1 * z0
            })
            .sum();
        if area2 < 0.0 {
            ring.reverse();
        }
        ring
    }

    /// Inside test with inclusive boundaries.
    pub fn contains(&self, p: &Point3) -> bool {
        self.contains_with_slack(p, 0.0)
    }

    pub fn contains_with_slack(&self, p: &Point3, eps: f64) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.size[0] / 2.0 + eps
            && l.y.abs() <= self.size[2] / 2.0 + eps
            && l.z.abs() <= self.size[1] / 2.0 + eps
    }

    /// Axis-aligned bounds (min, max) of the box in the frame.
    pub fn aabb(&self) -> (Point3, Point3) {
        let corners = self.corners();
        let mut lo = corners[0];
        let mut hi = corners[0];
        for c in &corners[1..] {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        (lo, hi)
    }

    /// Vertical extent `(y_min, y_max)`.
    pub fn y_range(&self) -> (f64, f64) {
        let h = self.size[2] / 2.0;
        (self.center.y - h, self.center.y + h)
    }
}
