//! Stereo volume construction from 2D feature maps.
//!
//! Three channel-selection modes share one sweep kernel:
//!
//! * **classic** plane sweeping feeds channels `[0, C_V)` to every depth plane;
//! * **depth-wise** plane sweeping slides a `C_V`-wide channel window over
//!   the `C_I` input channels as a function of the plane's disparity, and
//!   reorders it with cyclic slicing so that a source channel `c` always
//!   lands in output slot `c mod C_V`;
//! * **grouped** sweeping splits the channels into fixed groups and assigns
//!   contiguous runs of depth planes to each group.
//!
//! Whatever the mode, each output cell reads one left sample and one
//! bilinear right sample of `C_V` channels, so the work per cell is the same.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::geom::{StereoRig, View};
use crate::grid::{bilinear_taps, FeatureMap2D, FrustumSpec, FrustumVolume, Stencil, VoxelGridSpec, VoxelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Classic,
    Depthwise,
    Grouped,
}

/// Channel-selection parameters for volume construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub mode: SweepMode,
    /// `C_V`: channels taken from each view. In grouped mode this is the group size.
    pub out_channels: usize,
    /// Exponent smoothing the growth of the channel shift with disparity.
    pub alpha: f64,
    /// Channel shift per unit of (exponentiated) disparity; `None` uses
    /// `C_I / number of depth planes`.
    pub shift_ratio: Option<f64>,
}

impl SweepConfig {
    pub const DEFAULT_IN_CHANNELS: usize = 96;
    pub const DEFAULT_OUT_CHANNELS: usize = 32;
    pub const DEFAULT_PLANES: usize = 288;
    pub const DEFAULT_FRUSTUM_ALPHA: f64 = 0.1;
    pub const DEFAULT_VOXEL_ALPHA: f64 = 0.5;

    pub fn classic(out_channels: usize) -> Self {
        Self { mode: SweepMode::Classic, out_channels, alpha: 1.0, shift_ratio: None }
    }

    pub fn depthwise(out_channels: usize, alpha: f64) -> Self {
        Self { mode: SweepMode::Depthwise, out_channels, alpha, shift_ratio: None }
    }

    pub fn grouped(group_size: usize) -> Self {
        Self { mode: SweepMode::Grouped, out_channels: group_size, alpha: 1.0, shift_ratio: None }
    }

    pub fn with_shift_ratio(mut self, s: f64) -> Self {
        self.shift_ratio = Some(s);
        self
    }

    pub fn validate(&self, in_channels: usize) -> Result<()> {
        if self.out_channels == 0 || self.out_channels > in_channels {
            return Err(domain(format!(
                "output channels {} must be in [1, {in_channels}]",
                self.out_channels
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(domain(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if let Some(s) = self.shift_ratio {
            if !(s > 0.0) {
                return Err(domain(format!("shift ratio must be > 0, got {s}")));
            }
        }
        if self.mode == SweepMode::Grouped && !in_channels.is_multiple_of(self.out_channels) {
            return Err(domain(format!(
                "{in_channels} input channels are not divisible into groups of {}",
                self.out_channels
            )));
        }
        Ok(())
    }

    pub fn shift_ratio_for(&self, in_channels: usize, num_planes: usize) -> f64 {
        self.shift_ratio.unwrap_or(in_channels as f64 / num_planes as f64)
    }
}

/// Channel shift of the depth-wise window for a plane at `depth`:
/// `clamp(floor(floor(disparity)^alpha * s), 0, C_I - C_V)` with the
/// disparity taken at full image resolution.
pub fn shift_of_depth(
    rig: &StereoRig,
    depth: f64,
    cfg: &SweepConfig,
    in_channels: usize,
    num_planes: usize,
) -> Result<usize> {
    let disparity = rig.disparity(depth)?;
    let s = cfg.shift_ratio_for(in_channels, num_planes);
    let raw = (disparity.floor().powf(cfg.alpha) * s).floor();
    let max = in_channels.saturating_sub(cfg.out_channels) as f64;
    Ok(raw.clamp(0.0, max) as usize)
}

/// The source-channel window feeding one depth plane, as two contiguous
/// runs written back to back into the output slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelWindow {
    pub head: Range<usize>,
    pub tail: Range<usize>,
}

impl ChannelWindow {
    pub fn contiguous(range: Range<usize>) -> Self {
        let end = range.end;
        Self { head: range, tail: end..end }
    }

    /// Cyclic slice of width `out` starting at `shift`:
    /// `[ceil(shift/out)*out, shift+out)` followed by `[shift, ceil(shift/out)*out)`.
    pub fn cyclic(shift: usize, out: usize) -> Self {
        let pivot = shift.div_ceil(out) * out;
        Self { head: pivot..shift + out, tail: shift..pivot }
    }

    pub fn len(&self) -> usize {
        self.head.len() + self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Vec<usize> {
        self.head.clone().chain(self.tail.clone()).collect()
    }

    #[inline]
    fn copy(&self, src: &[f32], out: &mut [f32]) {
        let h = self.head.len();
        out[..h].copy_from_slice(&src[self.head.clone()]);
        out[h..].copy_from_slice(&src[self.tail.clone()]);
    }

    #[inline]
    fn gather(&self, taps: &impl Stencil, data: &[f32], out: &mut [f32]) {
        let h = self.head.len();
        let (a, b) = out.split_at_mut(h);
        taps.gather(data, self.head.clone(), a);
        taps.gather(data, self.tail.clone(), b);
    }
}

/// Ordered source-channel indices of the cyclic slice at `shift`.
pub fn cyclic_slice(shift: usize, in_channels: usize, out_channels: usize) -> Result<Vec<usize>> {
    if out_channels == 0 || out_channels > in_channels {
        return Err(domain(format!("output channels {out_channels} must be in [1, {in_channels}]")));
    }
    if shift > in_channels - out_channels {
        return Err(domain(format!(
            "shift {shift} outside [0, {}]",
            in_channels - out_channels
        )));
    }
    Ok(ChannelWindow::cyclic(shift, out_channels).indices())
}

/// Per-plane channel windows for a sequence of depths.
pub fn plane_windows(
    rig: &StereoRig,
    depths: &[f64],
    cfg: &SweepConfig,
    in_channels: usize,
) -> Result<Vec<ChannelWindow>> {
    cfg.validate(in_channels)?;
    let cv = cfg.out_channels;
    let n = depths.len();
    match cfg.mode {
        SweepMode::Classic => Ok(vec![ChannelWindow::contiguous(0..cv); n]),
        SweepMode::Depthwise => depths
            .iter()
            .map(|&d| Ok(ChannelWindow::cyclic(shift_of_depth(rig, d, cfg, in_channels, n)?, cv)))
            .collect(),
        SweepMode::Grouped => {
            let groups = in_channels / cv;
            Ok((0..n)
                .map(|k| {
                    let g = k * groups / n;
                    ChannelWindow::contiguous(g * cv..(g + 1) * cv)
                })
                .collect())
        }
    }
}

/// Counters collected while sweeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// Output cells written.
    pub cells: u64,
    /// 2D feature-map samples taken (one per view per cell).
    pub map_samples: u64,
    /// Channel values written.
    pub channel_values: u64,
}

impl SweepStats {
    fn merge(self, o: Self) -> Self {
        Self {
            cells: self.cells + o.cells,
            map_samples: self.map_samples + o.map_samples,
            channel_values: self.channel_values + o.channel_values,
        }
    }

    pub fn samples_per_cell(&self) -> f64 {
        self.map_samples as f64 / self.cells as f64
    }
}

fn check_stereo_inputs(left: &FeatureMap2D, right: &FeatureMap2D, spec: &FrustumSpec) -> Result<()> {
    if left.shape() != right.shape() {
        return Err(domain(format!(
            "left {:?} and right {:?} feature maps differ in shape",
            left.shape(),
            right.shape()
        )));
    }
    if (left.rows(), left.cols()) != (spec.rows, spec.cols) {
        return Err(domain(format!(
            "feature map {}x{} does not match frustum {}x{}",
            left.rows(),
            left.cols(),
            spec.rows,
            spec.cols
        )));
    }
    Ok(())
}

/// Builds a plane-sweep volume with `2 * C_V` channels (left then right).
///
/// Cell `(v, u, k)` holds the left features at feature pixel `(u, v)` and
/// the right features bilinearly sampled at `u - disparity(d_k) / stride`
/// on the same row.
pub fn build_psv(
    left: &FeatureMap2D,
    right: &FeatureMap2D,
    rig: &StereoRig,
    spec: &FrustumSpec,
    cfg: &SweepConfig,
) -> Result<FrustumVolume> {
    build_psv_instrumented(left, right, rig, spec, cfg).map(|(v, _)| v)
}

pub fn build_psv_instrumented(
    left: &FeatureMap2D,
    right: &FeatureMap2D,
    rig: &StereoRig,
    spec: &FrustumSpec,
    cfg: &SweepConfig,
) -> Result<(FrustumVolume, SweepStats)> {
    let mut out = FrustumVolume::zeros(spec.clone(), 2 * cfg.out_channels);
    let stats = build_psv_into(left, right, rig, cfg, &mut out)?;
    Ok((out, stats))
}

/// Sweeps into an existing volume whose spec and channel count define the
/// output; every cell is overwritten.
pub fn build_psv_into(
    left: &FeatureMap2D,
    right: &FeatureMap2D,
    rig: &StereoRig,
    cfg: &SweepConfig,
    out: &mut FrustumVolume,
) -> Result<SweepStats> {
    let spec = out.spec().clone();
    check_stereo_inputs(left, right, &spec)?;
    let cv = cfg.out_channels;
    if out.channels() != 2 * cv {
        return Err(domain(format!("output volume has {} channels, expected {}", out.channels(), 2 * cv)));
    }
    let c_in = left.channels();
    let windows = plane_windows(rig, &spec.depth_planes, cfg, c_in)?;
    let principal_shift = rig.left.cu - rig.right.cu;
    let offsets: Vec<f64> = spec
        .depth_planes
        .iter()
        .map(|&d| Ok((rig.disparity(d)? + principal_shift) / spec.stride))
        .collect::<Result<_>>()?;

    let (rows, cols) = (spec.rows, spec.cols);
    let planes = spec.num_planes();
    let row_len = cols * planes * 2 * cv;
    if row_len == 0 {
        return Ok(SweepStats::default());
    }
    let stats = out
        .data_mut()
        .par_chunks_mut(row_len)
        .enumerate()
        .map(|(row, chunk)| {
            let mut stats = SweepStats::default();
            for col in 0..cols {
                let lpx = left.pixel(row, col);
                for (k, (window, offset)) in windows.iter().zip(&offsets).enumerate() {
                    let base = (col * planes + k) * 2 * cv;
                    let cell = &mut chunk[base..base + 2 * cv];
                    let (lhalf, rhalf) = cell.split_at_mut(cv);
                    window.copy(lpx, lhalf);
                    let taps = bilinear_taps(rows, cols, c_in, col as f64 - offset, row as f64);
                    window.gather(&taps, right.data(), rhalf);
                    stats.map_samples += 2;
                }
            }
            stats.cells = (cols * planes) as u64;
            stats.channel_values = stats.cells * 2 * cv as u64;
            stats
        })
        .reduce(SweepStats::default, SweepStats::merge);
    Ok(stats)
}

/// Group-PS baseline: input channels split into `C_I / group_size` groups,
/// depth planes split evenly into as many contiguous runs, run `g` fed by
/// group `g` without reordering.
pub fn build_group_ps(
    left: &FeatureMap2D,
    right: &FeatureMap2D,
    rig: &StereoRig,
    spec: &FrustumSpec,
    group_size: usize,
) -> Result<FrustumVolume> {
    build_psv(left, right, rig, spec, &SweepConfig::grouped(group_size))
}

/// One image feeding a 3D-geometry volume.
#[derive(Debug, Clone, Copy)]
pub struct GeometryView<'a> {
    pub map: &'a FeatureMap2D,
    pub view: View,
    /// Image pixels per feature pixel.
    pub stride: f64,
}

/// Builds a 3D-geometry volume by projecting every voxel center into each
/// view and bilinearly sampling the view's feature map. Views are
/// concatenated in the given order, `C_V` channels each. Voxels projecting
/// outside an image, or lying behind its camera, get zeros for that view.
/// In depth-wise mode the channel window follows the voxel's z-depth.
pub fn build_3dgv(
    views: &[GeometryView<'_>],
    rig: &StereoRig,
    vspec: &VoxelGridSpec,
    cfg: &SweepConfig,
) -> Result<VoxelVolume> {
    build_3dgv_instrumented(views, rig, vspec, cfg).map(|(v, _)| v)
}

pub fn build_3dgv_instrumented(
    views: &[GeometryView<'_>],
    rig: &StereoRig,
    vspec: &VoxelGridSpec,
    cfg: &SweepConfig,
) -> Result<(VoxelVolume, SweepStats)> {
    let first = views.first().ok_or_else(|| domain("at least one view is required"))?;
    let c_in = first.map.channels();
    if views.iter().any(|v| v.map.channels() != c_in) {
        return Err(domain("all views must have the same channel count"));
    }
    let cv = cfg.out_channels;
    let [nx, ny, nz] = vspec.dims;
    // Depth planes of the lattice: voxel-center z of each z slice.
    let depths: Vec<f64> = (0..nz).map(|k| vspec.center_unchecked([0, 0, k]).z).collect();
    let windows: Vec<ChannelWindow> = if cfg.mode == SweepMode::Depthwise {
        cfg.validate(c_in)?;
        depths
            .iter()
            .map(|&z| {
                let z = z + rig.left_offset.z;
                if z > 0.0 {
                    Ok(ChannelWindow::cyclic(shift_of_depth(rig, z, cfg, c_in, nz)?, cv))
                } else {
                    Ok(ChannelWindow::contiguous(0..cv))
                }
            })
            .collect::<Result<_>>()?
    } else {
        plane_windows(rig, &depths, cfg, c_in)?
    };

    let channels = views.len() * cv;
    let mut out = VoxelVolume::zeros(vspec.clone(), channels);
    let slab = ny * nz * channels;
    let stats = out
        .data_mut()
        .par_chunks_mut(slab)
        .enumerate()
        .map(|(ix, chunk)| {
            let mut stats = SweepStats::default();
            for iy in 0..ny {
                for (iz, window) in windows.iter().enumerate() {
                    let p = vspec.center_unchecked([ix, iy, iz]);
                    let base = (iy * nz + iz) * channels;
                    for (vi, gv) in views.iter().enumerate() {
                        let cell = &mut chunk[base + vi * cv..base + (vi + 1) * cv];
                        stats.map_samples += 1;
                        let Ok(px) = rig.project(gv.view, &p) else {
                            cell.fill(0.0);
                            continue;
                        };
                        let m = gv.map;
                        let taps = bilinear_taps(m.rows(), m.cols(), c_in, px.u / gv.stride, px.v / gv.stride);
                        if taps.is_empty() {
                            cell.fill(0.0);
                        } else {
                            window.gather(&taps, m.data(), cell);
                        }
                    }
                }
            }
            stats.cells = (ny * nz) as u64;
            stats.channel_values = stats.cells * channels as u64;
            stats
        })
        .reduce(SweepStats::default, SweepStats::merge);
    debug_assert_eq!(stats.cells, (nx * ny * nz) as u64);
    Ok((out, stats))
}
