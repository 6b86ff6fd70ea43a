//! Dense `f32` grids: 2D feature maps, camera-frustum volumes and metric
//! voxel volumes, with zero-filled bilinear and trilinear sampling.
//!
//! Channels are always the innermost (fastest-varying) index, so a
//! per-location channel window is a contiguous slice.

use std::ops::Range;

use crate::error::{domain, Result};
use crate::geom::Point3;

fn check_data(len: usize, expect: usize, data: &[f32]) -> Result<()> {
    if len != expect {
        return Err(domain(format!("data length {len} does not match shape product {expect}")));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(domain(format!("non-finite value at flat index {i}")));
    }
    Ok(())
}

/// Interpolation stencil over a channel-innermost buffer. Corners that fall
/// outside the grid read as zero.
pub(crate) trait Stencil {
    fn is_empty(&self) -> bool;
    /// Writes the interpolated channels `src` into `out` (`out.len() == src.len()`).
    fn gather(&self, data: &[f32], src: Range<usize>, out: &mut [f32]);
}

const MISSING: usize = usize::MAX;

/// Bilinear stencil evaluated as nested linear interpolation
/// `a + t * (b - a)`, which reproduces constant fields exactly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bilinear {
    /// Corner offsets in order (r0,c0), (r0,c1), (r1,c0), (r1,c1).
    offsets: [usize; 4],
    tc: f32,
    tr: f32,
    complete: bool,
    empty: bool,
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + t * (b - a)
}

#[inline]
fn corner(data: &[f32], off: usize, ch: usize) -> f32 {
    if off == MISSING {
        0.0
    } else {
        data[off + ch]
    }
}

impl Stencil for Bilinear {
    fn is_empty(&self) -> bool {
        self.empty
    }

    #[inline]
    fn gather(&self, data: &[f32], src: Range<usize>, out: &mut [f32]) {
        debug_assert_eq!(src.len(), out.len());
        if self.empty {
            out.fill(0.0);
            return;
        }
        let (tc, tr) = (self.tc, self.tr);
        if self.complete {
            let [o00, o01, o10, o11] = self.offsets.map(|o| &data[o + src.start..o + src.end]);
            for (i, dst) in out.iter_mut().enumerate() {
                let top = lerp(o00[i], o01[i], tc);
                let bot = lerp(o10[i], o11[i], tc);
                *dst = lerp(top, bot, tr);
            }
        } else {
            let [o00, o01, o10, o11] = self.offsets;
            for (dst, ch) in out.iter_mut().zip(src) {
                let top = lerp(corner(data, o00, ch), corner(data, o01, ch), tc);
                let bot = lerp(corner(data, o10, ch), corner(data, o11, ch), tc);
                *dst = lerp(top, bot, tr);
            }
        }
    }
}

/// Trilinear stencil, nested-lerp form.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trilinear {
    /// Corner offsets indexed by bits (axis0, axis1, axis2), axis2 fastest.
    offsets: [usize; 8],
    t: [f32; 3],
    empty: bool,
}

impl Stencil for Trilinear {
    fn is_empty(&self) -> bool {
        self.empty
    }

    fn gather(&self, data: &[f32], src: Range<usize>, out: &mut [f32]) {
        debug_assert_eq!(src.len(), out.len());
        if self.empty {
            out.fill(0.0);
            return;
        }
        let [t0, t1, t2] = self.t;
        for (dst, ch) in out.iter_mut().zip(src) {
            let c = self.offsets.map(|o| corner(data, o, ch));
            let c00 = lerp(c[0], c[1], t2);
            let c01 = lerp(c[2], c[3], t2);
            let c10 = lerp(c[4], c[5], t2);
            let c11 = lerp(c[6], c[7], t2);
            let c0 = lerp(c00, c01, t1);
            let c1 = lerp(c10, c11, t1);
            *dst = lerp(c0, c1, t0);
        }
    }
}

/// Lower lattice index and fraction along one axis; the two neighbor
/// indices are `None` when outside `[0, n)`.
#[inline]
fn axis_stencil(x: f64, n: usize) -> ([Option<usize>; 2], f32) {
    let x0 = x.floor();
    let t = (x - x0) as f32;
    let at = |p: f64| (p >= 0.0 && p < n as f64).then_some(p as usize);
    ([at(x0), at(x0 + 1.0)], t)
}

pub(crate) fn bilinear_taps(rows: usize, cols: usize, channels: usize, u: f64, v: f64) -> Bilinear {
    let mut st = Bilinear { offsets: [MISSING; 4], tc: 0.0, tr: 0.0, complete: false, empty: true };
    if !(u > -1.0 && v > -1.0 && u < cols as f64 && v < rows as f64) {
        return st;
    }
    let (cs, tc) = axis_stencil(u, cols);
    let (rs, tr) = axis_stencil(v, rows);
    st.tc = tc;
    st.tr = tr;
    let mut complete = true;
    for (i, r) in rs.iter().enumerate() {
        for (j, c) in cs.iter().enumerate() {
            match (r, c) {
                (Some(r), Some(c)) => st.offsets[i * 2 + j] = (r * cols + c) * channels,
                _ => complete = false,
            }
        }
    }
    st.complete = complete;
    st.empty = false;
    st
}

pub(crate) fn trilinear_taps(dims: [usize; 3], channels: usize, x: [f64; 3]) -> Trilinear {
    let mut st = Trilinear { offsets: [MISSING; 8], t: [0.0; 3], empty: true };
    if (0..3).any(|a| !(x[a] > -1.0 && x[a] < dims[a] as f64)) {
        return st;
    }
    let (s0, t0) = axis_stencil(x[0], dims[0]);
    let (s1, t1) = axis_stencil(x[1], dims[1]);
    let (s2, t2) = axis_stencil(x[2], dims[2]);
    st.t = [t0, t1, t2];
    for (a, i) in s0.iter().enumerate() {
        for (b, j) in s1.iter().enumerate() {
            for (c, k) in s2.iter().enumerate() {
                if let (Some(i), Some(j), Some(k)) = (i, j, k) {
                    st.offsets[a * 4 + b * 2 + c] = ((i * dims[1] + j) * dims[2] + k) * channels;
                }
            }
        }
    }
    st.empty = false;
    st
}

/// A 2D feature map of shape (rows, cols, channels).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap2D {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureMap2D {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_data(data.len(), rows * cols * channels, &data)?;
        Ok(Self { rows, cols, channels, data })
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self { rows, cols, channels, data: vec![0.0; rows * cols * channels] }
    }

    pub fn from_fn(rows: usize, cols: usize, channels: usize, f: impl Fn(usize, usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(rows * cols * channels);
        for r in 0..rows {
            for c in 0..cols {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self { rows, cols, channels, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }

    #[inline]
    pub fn offset(&self, row: usize, col: usize) -> usize {
        (row * self.cols + col) * self.channels
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let o = self.offset(row, col);
        &self.data[o..o + self.channels]
    }

    pub fn pixel_mut(&mut self, row: usize, col: usize) -> &mut [f32] {
        let o = self.offset(row, col);
        &mut self.data[o..o + self.channels]
    }

    /// Bilinear sample at continuous column `u`, row `v` (lattice points at
    /// integer coordinates). Neighbors outside the map contribute zero.
    pub fn bilinear_sample_into(&self, u: f64, v: f64, channels: Range<usize>, out: &mut [f32]) {
        bilinear_taps(self.rows, self.cols, self.channels, u, v).gather(&self.data, channels, out);
    }

    pub fn bilinear_sample(&self, u: f64, v: f64, channels: Range<usize>) -> Vec<f32> {
        let mut out = vec![0.0; channels.len()];
        self.bilinear_sample_into(u, v, channels, &mut out);
        out
    }

    /// Mirrors the map left-to-right.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let src = self.offset(r, self.cols - 1 - c);
                let dst = out.offset(r, c);
                out.data[dst..dst + self.channels].copy_from_slice(&self.data[src..src + self.channels]);
            }
        }
        out
    }
}

/// Geometry of a camera-frustum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrustumSpec {
    pub rows: usize,
    pub cols: usize,
    /// Image pixels per feature pixel.
    pub stride: f64,
    /// Strictly increasing plane depths, meters.
    pub depth_planes: Vec<f64>,
}

impl FrustumSpec {
    pub fn new(rows: usize, cols: usize, stride: f64, depth_planes: Vec<f64>) -> Result<Self> {
        if !(stride >= 1.0) {
            return Err(domain(format!("stride must be >= 1, got {stride}")));
        }
        if depth_planes.is_empty() {
            return Err(domain("at least one depth plane is required"));
        }
        if !(depth_planes[0] > 0.0) || depth_planes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("depth planes must be positive and strictly increasing"));
        }
        Ok(Self { rows, cols, stride, depth_planes })
    }

    /// `count` planes evenly spaced in depth over `[z_min, z_max]`.
    pub fn uniform_depth(z_min: f64, z_max: f64, count: usize) -> Result<Vec<f64>> {
        if !(z_min > 0.0 && z_max > z_min) || count < 2 {
            return Err(domain("uniform depth planes need 0 < z_min < z_max and count >= 2"));
        }
        let step = (z_max - z_min) / (count - 1) as f64;
        Ok((0..count).map(|k| z_min + step * k as f64).collect())
    }

    /// `count` planes evenly spaced in disparity between the disparities of
    /// `z_max` and `z_min`, returned in increasing depth.
    pub fn uniform_disparity(z_min: f64, z_max: f64, count: usize) -> Result<Vec<f64>> {
        if !(z_min > 0.0 && z_max > z_min) || count < 2 {
            return Err(domain("uniform disparity planes need 0 < z_min < z_max and count >= 2"));
        }
        let (i_near, i_far) = (1.0 / z_min, 1.0 / z_max);
        let step = (i_near - i_far) / (count - 1) as f64;
        let mut planes: Vec<f64> = (0..count).map(|k| 1.0 / (i_far + step * k as f64)).collect();
        planes.reverse();
        planes[0] = z_min;
        planes[count - 1] = z_max;
        Ok(planes)
    }

    pub fn num_planes(&self) -> usize {
        self.depth_planes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols * self.num_planes()
    }

    /// Fractional plane index of depth `z`: binary search plus linear
    /// interpolation inside the plane list, linear extrapolation with the
    /// end spacing outside it.
    pub fn plane_index(&self, z: f64) -> f64 {
        let p = &self.depth_planes;
        let n = p.len();
        if n == 1 {
            return if z == p[0] { 0.0 } else if z < p[0] { -1.0 } else { 1.0 };
        }
        let k = match p.partition_point(|&d| d <= z) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        k as f64 + (z - p[k]) / (p[k + 1] - p[k])
    }
}

/// A volume over (row, col, depth plane, channel) in camera-frustum space.
#[derive(Debug, Clone, PartialEq)]
pub struct FrustumVolume {
    spec: FrustumSpec,
    channels: usize,
    data: Vec<f32>,
}

impl FrustumVolume {
    pub fn new(spec: FrustumSpec, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_data(data.len(), spec.cell_count() * channels, &data)?;
        Ok(Self { spec, channels, data })
    }

    pub fn zeros(spec: FrustumSpec, channels: usize) -> Self {
        let n = spec.cell_count() * channels;
        Self { spec, channels, data: vec![0.0; n] }
    }

    pub fn spec(&self) -> &FrustumSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.spec.rows, self.spec.cols, self.spec.num_planes(), self.channels]
    }

    #[inline]
    pub fn offset(&self, row: usize, col: usize, plane: usize) -> usize {
        ((row * self.spec.cols + col) * self.spec.num_planes() + plane) * self.channels
    }

    pub fn cell(&self, row: usize, col: usize, plane: usize) -> &[f32] {
        let o = self.offset(row, col, plane);
        &self.data[o..o + self.channels]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize, plane: usize) -> &mut [f32] {
        let o = self.offset(row, col, plane);
        &mut self.data[o..o + self.channels]
    }

    /// Trilinear sample at fractional (row, col, plane) indices, zero-filled.
    pub fn trilinear_sample_into(&self, row: f64, col: f64, plane: f64, out: &mut [f32]) {
        let dims = [self.spec.rows, self.spec.cols, self.spec.num_planes()];
        trilinear_taps(dims, self.channels, [row, col, plane]).gather(&self.data, 0..self.channels, out);
    }

    pub fn trilinear_sample(&self, row: f64, col: f64, plane: f64) -> Vec<f32> {
        let mut out = vec![0.0; self.channels];
        self.trilinear_sample_into(row, col, plane, &mut out);
        out
    }
}

/// A metric voxel lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGridSpec {
    /// Minimum corner of voxel (0, 0, 0), meters.
    pub origin: Point3,
    pub voxel_size: [f64; 3],
    pub dims: [usize; 3],
}

impl VoxelGridSpec {
    pub fn new(origin: Point3, voxel_size: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        if voxel_size.iter().any(|&s| !(s > 0.0)) {
            return Err(domain(format!("voxel size must be positive, got {voxel_size:?}")));
        }
        if dims.contains(&0) {
            return Err(domain(format!("voxel dims must be >= 1, got {dims:?}")));
        }
        Ok(Self { origin, voxel_size, dims })
    }

    /// The KITTI detection area: 300 x 20 x 288 voxels of 0.2 m covering
    /// x in [-30, 30], y in [-1, 3], z in [2, 59.6].
    pub fn kitti_default() -> Self {
        Self {
            origin: Point3::new(-30.0, -1.0, 2.0),
            voxel_size: [0.2; 3],
            dims: [300, 20, 288],
        }
    }

    pub fn count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn voxel_center(&self, idx: [usize; 3]) -> Result<Point3> {
        if (0..3).any(|a| idx[a] >= self.dims[a]) {
            return Err(domain(format!("voxel index {idx:?} outside dims {:?}", self.dims)));
        }
        Ok(self.center_unchecked(idx))
    }

    #[inline]
    pub(crate) fn center_unchecked(&self, idx: [usize; 3]) -> Point3 {
        Point3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.voxel_size[0],
            self.origin.y + (idx[1] as f64 + 0.5) * self.voxel_size[1],
            self.origin.z + (idx[2] as f64 + 0.5) * self.voxel_size[2],
        )
    }

    /// Continuous voxel index whose integer points are voxel centers.
    pub fn fractional_index(&self, p: &Point3) -> [f64; 3] {
        [
            (p.x - self.origin.x) / self.voxel_size[0] - 0.5,
            (p.y - self.origin.y) / self.voxel_size[1] - 0.5,
            (p.z - self.origin.z) / self.voxel_size[2] - 0.5,
        ]
    }

    /// Inclusive-exclusive metric bounds of the lattice.
    pub fn bounds(&self) -> (Point3, Point3) {
        let hi = Point3::new(
            self.origin.x + self.dims[0] as f64 * self.voxel_size[0],
            self.origin.y + self.dims[1] as f64 * self.voxel_size[1],
            self.origin.z + self.dims[2] as f64 * self.voxel_size[2],
        );
        (self.origin, hi)
    }
}

/// A volume over (x, y, z, channel) voxel indices.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    spec: VoxelGridSpec,
    channels: usize,
    data: Vec<f32>,
}

impl VoxelVolume {
    pub fn new(spec: VoxelGridSpec, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_data(data.len(), spec.count() * channels, &data)?;
        Ok(Self { spec, channels, data })
    }

    pub fn zeros(spec: VoxelGridSpec, channels: usize) -> Self {
        let n = spec.count() * channels;
        Self { spec, channels, data: vec![0.0; n] }
    }

    pub fn spec(&self) -> &VoxelGridSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn dims(&self) -> [usize; 4] {
        let [x, y, z] = self.spec.dims;
        [x, y, z, self.channels]
    }

    #[inline]
    pub fn offset(&self, idx: [usize; 3]) -> usize {
        let [_, ny, nz] = self.spec.dims;
        ((idx[0] * ny + idx[1]) * nz + idx[2]) * self.channels
    }

    pub fn cell(&self, idx: [usize; 3]) -> &[f32] {
        let o = self.offset(idx);
        &self.data[o..o + self.channels]
    }

    pub fn cell_mut(&mut self, idx: [usize; 3]) -> &mut [f32] {
        let o = self.offset(idx);
        &mut self.data[o..o + self.channels]
    }

    /// Trilinear sample at a fractional voxel index, zero-filled.
    pub fn trilinear_sample_into(&self, idx: [f64; 3], out: &mut [f32]) {
        trilinear_taps(self.spec.dims, self.channels, idx).gather(&self.data, 0..self.channels, out);
    }

    pub fn trilinear_sample(&self, idx: [f64; 3]) -> Vec<f32> {
        let mut out = vec![0.0; self.channels];
        self.trilinear_sample_into(idx, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_examples() {
        let m = FeatureMap2D::new(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.bilinear_sample(0.5, 0.5, 0..1), vec![1.5]);
        assert_eq!(m.bilinear_sample(0.0, 0.0, 0..1), vec![0.0]);
        assert_eq!(m.bilinear_sample(1.0, 1.0, 0..1), vec![3.0]);
        assert_eq!(m.bilinear_sample(-5.0, -5.0, 0..1), vec![0.0]);
    }

    #[test]
    fn bilinear_partial_overlap_treats_outside_as_zero() {
        let m = FeatureMap2D::new(1, 1, 1, vec![4.0]).unwrap();
        assert_eq!(m.bilinear_sample(-0.5, 0.0, 0..1), vec![2.0]);
        assert_eq!(m.bilinear_sample(0.25, 0.0, 0..1), vec![3.0]);
        assert_eq!(m.bilinear_sample(-1.0, 0.0, 0..1), vec![0.0]);
    }

    #[test]
    fn trilinear_examples() {
        let spec = FrustumSpec::new(3, 3, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let constant = FrustumVolume::new(spec.clone(), 1, vec![7.0; 36]).unwrap();
        assert_eq!(constant.trilinear_sample(1.3, 0.2, 1.7), vec![7.0]);
        assert_eq!(constant.trilinear_sample(-3.0, 0.0, 0.0), vec![0.0]);

        let mut ramp = FrustumVolume::zeros(spec, 1);
        for r in 0..3 {
            for c in 0..3 {
                for k in 0..4 {
                    ramp.cell_mut(r, c, k)[0] = k as f32;
                }
            }
        }
        assert_eq!(ramp.trilinear_sample(1.0, 1.0, 2.25), vec![2.25]);
    }

    #[test]
    fn voxel_center_examples() {
        let s = VoxelGridSpec::new(Point3::zeros(), [0.2; 3], [4, 4, 4]).unwrap();
        let c = s.voxel_center([0, 0, 0]).unwrap();
        assert!((c - Point3::new(0.1, 0.1, 0.1)).norm() < 1e-15);
        assert!(s.voxel_center([4, 0, 0]).is_err());

        let s = VoxelGridSpec::new(Point3::new(-30.4, -1.0, 2.0), [0.2; 3], [304, 20, 288]).unwrap();
        let c = s.voxel_center([152, 0, 0]).unwrap();
        assert!((c - Point3::new(0.1, -0.9, 2.1)).norm() < 1e-12);
        let f = s.fractional_index(&c);
        assert!((f[0] - 152.0).abs() < 1e-9 && f[1].abs() < 1e-9 && f[2].abs() < 1e-9);
    }

    #[test]
    fn plane_index_interpolates_and_extrapolates() {
        let s = FrustumSpec::new(1, 1, 1.0, vec![2.0, 4.0, 8.0]).unwrap();
        assert_eq!(s.plane_index(2.0), 0.0);
        assert_eq!(s.plane_index(3.0), 0.5);
        assert_eq!(s.plane_index(6.0), 1.5);
        assert_eq!(s.plane_index(8.0), 2.0);
        assert_eq!(s.plane_index(12.0), 3.0);
        assert_eq!(s.plane_index(1.0), -0.5);
    }

    #[test]
    fn spec_validation() {
        assert!(FrustumSpec::new(1, 1, 0.5, vec![1.0]).is_err());
        assert!(FrustumSpec::new(1, 1, 1.0, vec![2.0, 2.0]).is_err());
        assert!(FrustumSpec::new(1, 1, 1.0, vec![0.0, 2.0]).is_err());
        assert!(VoxelGridSpec::new(Point3::zeros(), [0.2, 0.0, 0.2], [1, 1, 1]).is_err());
        assert!(VoxelGridSpec::new(Point3::zeros(), [0.2; 3], [1, 0, 1]).is_err());
        assert!(FeatureMap2D::new(1, 1, 2, vec![0.0]).is_err());
        assert!(FeatureMap2D::new(1, 1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn plane_generators() {
        let d = FrustumSpec::uniform_depth(2.0, 4.0, 3).unwrap();
        assert_eq!(d, vec![2.0, 3.0, 4.0]);
        let d = FrustumSpec::uniform_disparity(2.0, 8.0, 3).unwrap();
        assert_eq!(d[0], 2.0);
        assert_eq!(d[2], 8.0);
        assert!((1.0 / d[1] - 0.3125).abs() < 1e-12);
    }

    #[test]
    fn mirror_is_involution() {
        let m = FeatureMap2D::from_fn(3, 4, 2, |r, c, ch| (r * 10 + c * 2 + ch) as f32);
        assert_eq!(m.mirrored().pixel(1, 0), m.pixel(1, 3));
        assert_eq!(m.mirrored().mirrored(), m);
    }
}
