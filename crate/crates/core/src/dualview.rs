//! Resampling between camera-frustum and metric voxel space, dual-view
//! volume integration and the front-surface depth geometry.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::geom::CameraModel;
use crate::grid::{trilinear_taps, FrustumSpec, FrustumVolume, Stencil, VoxelGridSpec, VoxelVolume};

/// Per-pixel z-depth in meters; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl DepthMap {
    pub const INVALID: f32 = 0.0;

    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(domain(format!("{} values for a {rows}x{cols} depth map", values.len())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(domain("depth values must be finite and non-negative"));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn invalid(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![Self::INVALID; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f32> {
        let v = self.values[row * self.cols + col];
        (v > 0.0).then_some(v)
    }

    pub fn set(&mut self, row: usize, col: usize, depth: f32) {
        self.values[row * self.cols + col] = depth;
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = &mut out.values[r * self.cols..(r + 1) * self.cols];
            row.reverse();
        }
        out
    }
}

/// Resamples a frustum volume onto a voxel lattice expressed in `cam`'s
/// frame. Each voxel center is projected to `(u, v, z)` and the frustum is
/// sampled trilinearly at `(v / stride, u / stride, plane_index(z))`.
pub fn frustum_to_voxel(fv: &FrustumVolume, cam: &CameraModel, vspec: &VoxelGridSpec) -> VoxelVolume {
    let fspec = fv.spec();
    let channels = fv.channels();
    let fdims = [fspec.rows, fspec.cols, fspec.num_planes()];
    let mut out = VoxelVolume::zeros(vspec.clone(), channels);
    let [_, ny, nz] = vspec.dims;
    let slab = ny * nz * channels;
    if slab == 0 {
        return out;
    }
    out.data_mut().par_chunks_mut(slab).enumerate().for_each(|(ix, chunk)| {
        for iy in 0..ny {
            for iz in 0..nz {
                let p = vspec.center_unchecked([ix, iy, iz]);
                let Ok(px) = cam.project(&p) else { continue };
                let idx = [px.v / fspec.stride, px.u / fspec.stride, fspec.plane_index(px.depth)];
                let base = (iy * nz + iz) * channels;
                trilinear_taps(fdims, channels, idx).gather(fv.data(), 0..channels, &mut chunk[base..base + channels]);
            }
        }
    });
    out
}

/// Resamples a voxel volume into frustum shape: cell `(v, u, k)` unprojects
/// image pixel `(u * stride, v * stride)` at plane depth `d_k` and samples
/// the voxel volume trilinearly there.
pub fn voxel_to_frustum(vv: &VoxelVolume, cam: &CameraModel, fspec: &FrustumSpec) -> FrustumVolume {
    let channels = vv.channels();
    let vspec = vv.spec();
    let mut out = FrustumVolume::zeros(fspec.clone(), channels);
    let (cols, planes) = (fspec.cols, fspec.num_planes());
    let row_len = cols * planes * channels;
    if row_len == 0 {
        return out;
    }
    out.data_mut().par_chunks_mut(row_len).enumerate().for_each(|(row, chunk)| {
        for col in 0..cols {
            for (k, &d) in fspec.depth_planes.iter().enumerate() {
                // Plane depths are validated positive, so unprojection cannot fail.
                let Ok(p) = cam.unproject(col as f64 * fspec.stride, row as f64 * fspec.stride, d) else {
                    continue;
                };
                let base = (col * planes + k) * channels;
                trilinear_taps(vspec.dims, channels, vspec.fractional_index(&p))
                    .gather(vv.data(), 0..channels, &mut chunk[base..base + channels]);
            }
        }
    });
    out
}

/// Channel-wise concatenation of two volumes on the same lattice, `a` first.
pub fn integrate(a: &VoxelVolume, b: &VoxelVolume) -> Result<VoxelVolume> {
    if a.spec() != b.spec() {
        return Err(domain("cannot integrate volumes on different voxel lattices"));
    }
    let (ca, cb) = (a.channels(), b.channels());
    let mut data = Vec::with_capacity(a.data().len() + b.data().len());
    for (x, y) in a.data().chunks_exact(ca.max(1)).zip(b.data().chunks_exact(cb.max(1))) {
        data.extend_from_slice(&x[..ca]);
        data.extend_from_slice(&y[..cb]);
    }
    VoxelVolume::new(a.spec().clone(), ca + cb, data)
}

/// Arithmetic mean of a cell's channels.
pub fn mean_reducer(cell: &[f32]) -> f32 {
    (cell.iter().map(|&v| v as f64).sum::<f64>() / cell.len() as f64) as f32
}

/// Squeezes every cell to one channel with `reducer`.
pub fn reduce_channels(fv: &FrustumVolume, reducer: impl Fn(&[f32]) -> f32 + Sync + Send) -> FrustumVolume {
    let data: Vec<f32> = fv.data().par_chunks(fv.channels()).map(reducer).collect();
    FrustumVolume::new(fv.spec().clone(), 1, data).expect("reduced volume matches its spec")
}

/// Soft-argmin depth per feature pixel, bilinearly upsampled (edge-clamped)
/// to an image of `rows x cols` pixels.
pub fn cost_to_depth(logits: &FrustumVolume, rows: usize, cols: usize) -> Result<DepthMap> {
    if logits.channels() != 1 {
        return Err(domain(format!("expected single-channel logits, got {}", logits.channels())));
    }
    let spec = logits.spec();
    let planes = &spec.depth_planes;
    let (lo, hi) = (planes[0], planes[planes.len() - 1]);
    let feat: Vec<f64> = logits
        .data()
        .chunks_exact(planes.len())
        .map(|cell| soft_argmin(cell, planes).clamp(lo, hi))
        .collect();

    let (fr, fc) = (spec.rows, spec.cols);
    if fr == 0 || fc == 0 {
        return Err(domain("cannot upsample an empty frustum"));
    }
    let at = |r: usize, c: usize| feat[r * fc + c];
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let y = (r as f64 / spec.stride).clamp(0.0, (fr - 1) as f64);
        let (r0, ty) = (y.floor() as usize, y - y.floor());
        let r1 = (r0 + 1).min(fr - 1);
        for c in 0..cols {
            let x = (c as f64 / spec.stride).clamp(0.0, (fc - 1) as f64);
            let (c0, tx) = (x.floor() as usize, x - x.floor());
            let c1 = (c0 + 1).min(fc - 1);
            let top = at(r0, c0) + tx * (at(r0, c1) - at(r0, c0));
            let bot = at(r1, c0) + tx * (at(r1, c1) - at(r1, c0));
            values.push((top + ty * (bot - top)).clamp(lo, hi) as f32);
        }
    }
    DepthMap::new(rows, cols, values)
}

fn soft_argmin(logits: &[f32], planes: &[f64]) -> f64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l as f64));
    let mut norm = 0.0;
    let mut acc = 0.0;
    for (&l, &d) in logits.iter().zip(planes) {
        let w = (l as f64 - max).exp();
        norm += w;
        acc += w * d;
    }
    acc / norm
}

/// Mean absolute depth error over pixels with valid ground truth and a set
/// mask bit (all pixels when `mask` is `None`).
pub fn depth_l1(pred: &DepthMap, gt: &DepthMap, mask: Option<&[bool]>) -> Result<f64> {
    if (pred.rows, pred.cols) != (gt.rows, gt.cols) {
        return Err(domain("prediction and ground truth differ in shape"));
    }
    if let Some(m) = mask {
        if m.len() != gt.values.len() {
            return Err(domain("mask size does not match depth map"));
        }
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, (&p, &g)) in pred.values.iter().zip(&gt.values).enumerate() {
        if g > 0.0 && mask.is_none_or(|m| m[i]) {
            sum += (p as f64 - g as f64).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(domain("no valid ground-truth pixels"));
    }
    Ok(sum / n as f64)
}
