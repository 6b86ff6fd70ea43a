//! Subcommand implementations and the helpers they share.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use sha2::{Digest, Sha256};
use sweepvol::kitti_io::{write_atomic, KittiLayout};
use sweepvol::{Box3D, ObjectClass, StereoRig, View};

use crate::error::{CliError, CliResult};

pub mod bench;
pub mod depth;
pub mod evalap;
pub mod occupancy;
pub mod slcp;
pub mod synth;
pub mod volgen;

/// Root of a KITTI-layout split.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Split root holding calib/, label_2/, velodyne/, image_2/, image_3/.
    #[arg(long, env = "STEREOVOL_DATA")]
    pub data: PathBuf,
}

impl DataArgs {
    /// The layout and its sorted frame ids; the split must exist.
    pub fn open(&self) -> CliResult<(KittiLayout, Vec<String>)> {
        if !self.data.is_dir() {
            return Err(CliError::Io(format!("data root {} is not a directory", self.data.display())));
        }
        let layout = KittiLayout::new(&self.data);
        let ids = layout.frame_ids()?;
        Ok((layout, ids))
    }
}

/// The three evaluated classes, in the order count lists use.
pub const CLASSES: [ObjectClass; 3] = [ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist];

/// Parses `a,b,c` into exactly three counts (Car, Pedestrian, Cyclist).
pub fn parse_counts(s: &str) -> Result<Vec<usize>, String> {
    let v = parse_list::<usize>(s)?;
    if v.len() != 3 {
        return Err(format!("expected three comma-separated counts (Car,Pedestrian,Cyclist), got {}", v.len()));
    }
    Ok(v)
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("invalid list entry {t:?}")))
        .collect()
}

/// Writes `text` atomically to `path`, or to stdout without a path.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// A box moved from the rig's reference frame into one camera's frame.
pub fn box_in_camera(b: &Box3D, rig: &StereoRig, view: View) -> Box3D {
    let mut out = b.clone();
    out.center = rig.to_camera(view, &b.center);
    out
}

/// Passes bytes through while hashing them.
pub struct HashingWriter<W> {
    pub inner: W,
    pub hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, hasher: Sha256::new() }
    }

    pub fn hex_digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
