//! KITTI object labels (`label_2/NNNNNN.txt`).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{normalize_angle, Box3D, Point3, StereoRig, View};

/// One label row with every KITTI field kept.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiObject {
    pub kind: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    /// Left-image box `[left, top, right, bottom]`, pixels.
    pub bbox: [f64; 4],
    /// `[height, width, length]`, meters.
    pub dimensions: [f64; 3],
    /// Bottom-center of the box in the rectified camera frame.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiObject {
    /// The geometric box: the center is lifted by half the height.
    pub fn box3d(&self) -> Result<Box3D> {
        let [h, w, l] = self.dimensions;
        let [x, y, z] = self.location;
        let b = Box3D::new(Point3::new(x, y - h / 2.0, z), [l, w, h], self.rotation_y, self.kind.parse().unwrap())?;
        Ok(match self.score {
            Some(s) => b.with_score(s),
            None => b,
        })
    }

    /// A label for `bbox` as seen from the left camera of `rig`; the 2D box
    /// is the clipped projection.
    pub fn from_box(bbox: &Box3D, rig: &StereoRig) -> Self {
        let c = rig.to_camera(View::Left, &bbox.center);
        let rect = rig.project_box(View::Left, bbox).map(|p| p.clipped).ok();
        let rect = rect.map_or([0.0; 4], |r| [r.u0, r.v0, r.u1, r.v1]);
        Self {
            kind: bbox.class.to_string(),
            truncated: 0.0,
            occluded: 0,
            alpha: normalize_angle(bbox.yaw - c.x.atan2(c.z)),
            bbox: rect,
            dimensions: [bbox.height(), bbox.width(), bbox.length()],
            location: [bbox.center.x, bbox.center.y + bbox.height() / 2.0, bbox.center.z],
            rotation_y: bbox.yaw,
            score: bbox.score,
        }
    }

    /// One label row. Numbers print in shortest round-trip form.
    pub fn to_line(&self) -> String {
        let mut s = format!("{} {} {} {}", self.kind, self.truncated, self.occluded, self.alpha);
        for v in self.bbox.iter().chain(&self.dimensions).chain(&self.location) {
            let _ = write!(s, " {v}");
        }
        let _ = write!(s, " {}", self.rotation_y);
        if let Some(score) = self.score {
            let _ = write!(s, " {score}");
        }
        s
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<KittiObject>> {
    let err = |msg: String| Error::Parse(format!("label line {lineno}: {msg}"));
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.is_empty() || f[0] == "DontCare" {
        return Ok(None);
    }
    if f.len() < 15 {
        return Err(err(format!("expected at least 15 fields, found {}", f.len())));
    }
    if f.len() > 16 {
        return Err(err(format!("expected at most 16 fields, found {}", f.len())));
    }
    let num = |i: usize| f[i].parse::<f64>().map_err(|_| err(format!("field {} is not a number: {:?}", i + 1, f[i])));
    let occ = num(2)?;
    if occ.fract() != 0.0 {
        return Err(err(format!("occlusion {occ} is not an integer")));
    }
    let obj = KittiObject {
        kind: f[0].to_string(),
        truncated: num(1)?,
        occluded: occ as i32,
        alpha: num(3)?,
        bbox: [num(4)?, num(5)?, num(6)?, num(7)?],
        dimensions: [num(8)?, num(9)?, num(10)?],
        location: [num(11)?, num(12)?, num(13)?],
        rotation_y: num(14)?,
        score: if f.len() == 16 { Some(num(15)?) } else { None },
    };
    if obj.dimensions.iter().any(|d| !(*d > 0.0)) {
        return Err(err(format!("dimensions must be positive, found {:?}", obj.dimensions)));
    }
    Ok(Some(obj))
}

/// Parses a label file; `DontCare` rows and blank lines are skipped.
pub fn parse_labels(text: &str) -> Result<Vec<KittiObject>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(obj) = parse_line(line, i + 1)? {
            out.push(obj);
        }
    }
    Ok(out)
}

pub fn labels_to_text(objects: &[KittiObject]) -> String {
    objects.iter().map(|o| o.to_line() + "\n").collect()
}

/// Geometric boxes of parsed labels.
pub fn label_boxes(objects: &[KittiObject]) -> Result<Vec<Box3D>> {
    objects.iter().map(KittiObject::box3d).collect()
}
