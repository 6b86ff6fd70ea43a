use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sweepvol::kitti_io::dataset::{read_file, read_text};
use sweepvol::kitti_io::{decode_rgb_png, read_dvol, write_atomic_with, write_dvol_to, Calibration, Dvol};
use sweepvol::sweep::{build_3dgv, build_psv, GeometryView};
use sweepvol::{FeatureMap2D, FrustumSpec, SweepConfig, View, VoxelGridSpec};

use super::{usage, DataArgs, HashingWriter};
use crate::features::image_features;
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VolumeMode {
    /// Classic plane-sweep volume.
    #[value(name = "ps", alias = "psv")]
    Ps,
    /// Depth-wise plane-sweep volume.
    #[value(name = "d-ps", alias = "d-psv")]
    DPs,
    /// Plane sweep with evenly spaced channel groups.
    #[value(name = "group-ps")]
    GroupPs,
    /// 3D-geometry volume.
    #[value(name = "3dgv")]
    Gv,
    /// Depth-wise 3D-geometry volume.
    #[value(name = "d-3dgv")]
    DGv,
}

impl VolumeMode {
    fn is_voxel(self) -> bool {
        matches!(self, VolumeMode::Gv | VolumeMode::DGv)
    }

    fn label(self) -> &'static str {
        match self {
            VolumeMode::Ps => "ps",
            VolumeMode::DPs => "d-ps",
            VolumeMode::GroupPs => "group-ps",
            VolumeMode::Gv => "3dgv",
            VolumeMode::DGv => "d-3dgv",
        }
    }
}

#[derive(Debug, Args)]
pub struct VolgenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Frame id; defaults to the first frame of the split.
    #[arg(long)]
    pub frame: Option<String>,
    #[arg(long, value_enum, default_value = "d-ps")]
    pub mode: VolumeMode,
    /// Input feature channels `C_I`.
    #[arg(long, default_value_t = SweepConfig::DEFAULT_IN_CHANNELS)]
    pub cin: usize,
    /// Channels taken per view `C_V` (group size for group-ps).
    #[arg(long, default_value_t = SweepConfig::DEFAULT_OUT_CHANNELS)]
    pub cv: usize,
    /// Shift smoothness exponent; defaults to 0.1 for frustum and 0.5 for voxel volumes.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Channel shift ratio; defaults to cin / planes.
    #[arg(long)]
    pub shift_ratio: Option<f64>,
    /// Depth planes (frustum) or z slices (voxel grid).
    #[arg(long, default_value_t = SweepConfig::DEFAULT_PLANES)]
    pub planes: usize,
    /// Image pixels per feature pixel.
    #[arg(long, default_value_t = 4)]
    pub stride: usize,
    #[arg(long, default_value_t = 2.0)]
    pub zmin: f64,
    #[arg(long, default_value_t = 59.4)]
    pub zmax: f64,
    /// Precomputed left and right feature maps (DVOL 2D maps) instead of image features.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"])]
    pub features: Option<Vec<PathBuf>>,
    /// Output file; defaults to <data>/volumes/<frame>_<mode>.dvol.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl VolgenArgs {
    fn sweep_config(&self) -> SweepConfig {
        let alpha = self.alpha.unwrap_or(if self.mode.is_voxel() {
            SweepConfig::DEFAULT_VOXEL_ALPHA
        } else {
            SweepConfig::DEFAULT_FRUSTUM_ALPHA
        });
        let cfg = match self.mode {
            VolumeMode::Ps | VolumeMode::Gv => SweepConfig::classic(self.cv),
            VolumeMode::DPs | VolumeMode::DGv => SweepConfig::depthwise(self.cv, alpha),
            VolumeMode::GroupPs => SweepConfig::grouped(self.cv),
        };
        match self.shift_ratio {
            Some(s) => cfg.with_shift_ratio(s),
            None => cfg,
        }
    }

    fn validate(&self) -> CliResult<SweepConfig> {
        let cfg = self.sweep_config();
        cfg.validate(self.cin).map_err(CliError::flags)?;
        if self.planes == 0 || self.stride == 0 {
            return Err(usage("--planes and --stride must be positive"));
        }
        if !(self.zmin > 0.0 && self.zmax > self.zmin) {
            return Err(usage("depth range needs 0 < zmin < zmax"));
        }
        Ok(cfg)
    }
}

fn load_map(path: &std::path::Path) -> CliResult<FeatureMap2D> {
    match read_dvol(&read_file(path)?)? {
        Dvol::Map2D(m) => Ok(m),
        _ => Err(CliError::Io(format!("{} does not hold a 2D feature map", path.display()))),
    }
}

pub fn run(a: &VolgenArgs, _ctx: Context) -> CliResult<()> {
    let cfg = a.validate()?;
    let (layout, ids) = a.data.open()?;
    let id = match &a.frame {
        Some(id) => id.clone(),
        None => ids.first().cloned().ok_or_else(|| CliError::Io("the split has no frames".into()))?,
    };
    let calib = Calibration::parse(&read_text(&layout.calib(&id))?)?;
    let (left, right) = match &a.features {
        Some(paths) => (load_map(&paths[0])?, load_map(&paths[1])?),
        None => {
            let l = decode_rgb_png(&read_file(&layout.left_image(&id))?)?;
            let r = decode_rgb_png(&read_file(&layout.right_image(&id))?)?;
            (image_features(&l, a.stride, a.cin), image_features(&r, a.stride, a.cin))
        }
    };
    if left.channels() != a.cin {
        return Err(CliError::Domain(format!("feature maps have {} channels but --cin is {}", left.channels(), a.cin)));
    }
    let rig = calib.stereo_rig(left.cols() * a.stride, left.rows() * a.stride)?;
    let stride = a.stride as f64;

    let vol = if a.mode.is_voxel() {
        let base = VoxelGridSpec::kitti_default();
        let vspec = VoxelGridSpec::new(base.origin, base.voxel_size, [base.dims[0], base.dims[1], a.planes])?;
        let views = [
            GeometryView { map: &left, view: View::Left, stride },
            GeometryView { map: &right, view: View::Right, stride },
        ];
        Dvol::Voxel(build_3dgv(&views, &rig, &vspec, &cfg)?)
    } else {
        let planes = FrustumSpec::uniform_depth(a.zmin, a.zmax, a.planes)?;
        let fspec = FrustumSpec::new(left.rows(), left.cols(), stride, planes)?;
        Dvol::Frustum(build_psv(&left, &right, &rig, &fspec, &cfg)?)
    };
    drop((left, right));

    let out = a.out.clone().unwrap_or_else(|| layout.root.join("volumes").join(format!("{id}_{}.dvol", a.mode.label())));
    let mut digest = String::new();
    write_atomic_with(&out, |w| {
        let mut hw = HashingWriter::new(w);
        write_dvol_to(&vol, &mut hw)?;
        digest = hw.hex_digest();
        Ok(())
    })?;
    let dims: Vec<String> = vol.dims().iter().map(|d| d.to_string()).collect();
    println!("frame: {id}");
    println!("mode: {}", a.mode.label());
    println!("dims: {}", dims.join("x"));
    println!("sha256: {digest}");
    eprintln!("wrote {}", out.display());
    Ok(())
}
