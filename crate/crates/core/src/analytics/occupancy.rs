//! How many cells of a frustum volume and of a voxel volume fall inside an
//! object's box. Frustum occupancy shrinks with the square of depth while
//! voxel occupancy stays constant, which is what makes distant objects
//! sparse in plane-sweep volumes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::geom::{Box3D, CameraModel, ObjectClass};
use crate::grid::{FrustumSpec, VoxelGridSpec};

/// Profile values are capped here for display of distant regions.
pub const PROFILE_CAP: u64 = 600;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyRecord {
    pub class: ObjectClass,
    /// Box-center z, meters.
    pub depth: f64,
    pub psv_count: u64,
    pub tdgv_count: u64,
}

impl OccupancyRecord {
    pub fn capped(&self) -> (u64, u64) {
        (self.psv_count.min(PROFILE_CAP), self.tdgv_count.min(PROFILE_CAP))
    }
}

fn index_range(lo: f64, hi: f64, n: usize) -> std::ops::Range<usize> {
    // One cell of margin on both sides; the containment test decides.
    let a = (lo.floor() - 1.0).max(0.0);
    let b = (hi.ceil() + 2.0).min(n as f64);
    if !(a < b) {
        return 0..0;
    }
    a as usize..b as usize
}

/// Frustum cells whose center, unprojected at its plane depth, lies inside
/// `bbox` (expressed in `cam`'s frame). Cell `(v, u, k)` has its center at
/// image pixel `((u + 0.5) * stride, (v + 0.5) * stride)`.
pub fn frustum_occupancy(bbox: &Box3D, fspec: &FrustumSpec, cam: &CameraModel) -> u64 {
    let (lo, hi) = bbox.aabb();
    let s = fspec.stride;
    let mut count = 0;
    for &d in &fspec.depth_planes {
        if d < lo.z - 1e-9 || d > hi.z + 1e-9 {
            continue;
        }
        // At fixed depth, image u is increasing in x and v in y.
        let (u0, u1) = (cam.fu * lo.x / d + cam.cu, cam.fu * hi.x / d + cam.cu);
        let (v0, v1) = (cam.fv * lo.y / d + cam.cv, cam.fv * hi.y / d + cam.cv);
        for row in index_range(v0 / s - 0.5, v1 / s - 0.5, fspec.rows) {
            for col in index_range(u0 / s - 0.5, u1 / s - 0.5, fspec.cols) {
                let (u, v) = ((col as f64 + 0.5) * s, (row as f64 + 0.5) * s);
                if let Ok(p) = cam.unproject(u, v, d) {
                    count += bbox.contains(&p) as u64;
                }
            }
        }
    }
    count
}

/// Voxel centers inside `bbox`.
pub fn voxel_occupancy(bbox: &Box3D, vspec: &VoxelGridSpec) -> u64 {
    let (lo, hi) = bbox.aabb();
    let a = vspec.fractional_index(&lo);
    let b = vspec.fractional_index(&hi);
    let mut count = 0;
    for i in index_range(a[0], b[0], vspec.dims[0]) {
        for j in index_range(a[1], b[1], vspec.dims[1]) {
            for k in index_range(a[2], b[2], vspec.dims[2]) {
                count += bbox.contains(&vspec.center_unchecked([i, j, k])) as u64;
            }
        }
    }
    count
}

/// One record per box.
pub fn occupancy_records(
    boxes: &[Box3D],
    cam: &CameraModel,
    fspec: &FrustumSpec,
    vspec: &VoxelGridSpec,
) -> Vec<OccupancyRecord> {
    boxes
        .iter()
        .map(|b| OccupancyRecord {
            class: b.class.clone(),
            depth: b.center.z,
            psv_count: frustum_occupancy(b, fspec, cam),
            tdgv_count: voxel_occupancy(b, vspec),
        })
        .collect()
}

/// Per-class means of capped counts within one depth bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBin {
    pub class: ObjectClass,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub boxes: usize,
    pub mean_psv: f64,
    pub mean_tdgv: f64,
}

pub const DEFAULT_BIN_WIDTH: f64 = 5.0;

/// Groups records into `[k * width, (k + 1) * width)` depth bins per class.
pub fn aggregate_profile(records: &[OccupancyRecord], bin_width: f64) -> Vec<ProfileBin> {
    let mut acc: BTreeMap<(ObjectClass, i64), (usize, u64, u64)> = BTreeMap::new();
    for r in records {
        let bin = (r.depth / bin_width).floor() as i64;
        let (p, t) = r.capped();
        let e = acc.entry((r.class.clone(), bin)).or_default();
        e.0 += 1;
        e.1 += p;
        e.2 += t;
    }
    acc.into_iter()
        .map(|((class, bin), (n, p, t))| ProfileBin {
            class,
            bin_lo: bin as f64 * bin_width,
            bin_hi: (bin + 1) as f64 * bin_width,
            boxes: n,
            mean_psv: p as f64 / n as f64,
            mean_tdgv: t as f64 / n as f64,
        })
        .collect()
}

/// `class,depth_m,psv_count,tdgv_count` with capped counts.
pub fn profile_csv(records: &[OccupancyRecord]) -> String {
    let mut out = String::from("class,depth_m,psv_count,tdgv_count\n");
    for r in records {
        let (p, t) = r.capped();
        let _ = writeln!(out, "{},{:.3},{},{}", r.class, r.depth, p, t);
    }
    out
}
