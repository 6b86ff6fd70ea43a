//! DVOL: a small little-endian container for volumes and feature maps.
//!
//! ```text
//! "DVOL" | u8 version=1 | u32 rank | u32 dims[rank] | u8 space
//! | f64 spec scalars | f32 data
//! ```
//! `space` is 0 for a frustum volume (scalars: stride, plane count, plane
//! depths), 1 for a voxel volume (origin, voxel size, dims) and 2 for a
//! plain 2D feature map (no scalars). Data follows each type's own index
//! order with channels last.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::grid::{FeatureMap2D, FrustumSpec, FrustumVolume, VoxelGridSpec, VoxelVolume};

const MAGIC: &[u8; 4] = b"DVOL";
const VERSION: u8 = 1;

/// Anything a DVOL file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Dvol {
    Frustum(FrustumVolume),
    Voxel(VoxelVolume),
    Map2D(FeatureMap2D),
}

impl Dvol {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Dvol::Frustum(v) => v.dims().to_vec(),
            Dvol::Voxel(v) => v.dims().to_vec(),
            Dvol::Map2D(m) => vec![m.rows(), m.cols(), m.channels()],
        }
    }

    pub fn data(&self) -> &[f32] {
        match self {
            Dvol::Frustum(v) => v.data(),
            Dvol::Voxel(v) => v.data(),
            Dvol::Map2D(m) => m.data(),
        }
    }
}

pub fn write_dvol(vol: &Dvol) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * vol.data().len());
    write_dvol_to(vol, &mut out).expect("writing to memory cannot fail");
    out
}

/// Streams a volume without materializing the encoded bytes.
pub fn write_dvol_to(vol: &Dvol, w: &mut impl Write) -> std::io::Result<()> {
    let dims = vol.dims();
    let mut head = Vec::with_capacity(64);
    head.extend_from_slice(MAGIC);
    head.push(VERSION);
    head.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in &dims {
        head.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    head.push(match vol {
        Dvol::Frustum(_) => 0,
        Dvol::Voxel(_) => 1,
        Dvol::Map2D(_) => 2,
    });
    let mut put = |vals: &[f64]| vals.iter().for_each(|v| head.extend_from_slice(&v.to_le_bytes()));
    match vol {
        Dvol::Frustum(v) => {
            let s = v.spec();
            put(&[s.stride, s.depth_planes.len() as f64]);
            put(&s.depth_planes);
        }
        Dvol::Voxel(v) => {
            let s = v.spec();
            put(s.origin.as_slice());
            put(&s.voxel_size);
            put(&s.dims.map(|d| d as f64));
        }
        Dvol::Map2D(_) => {}
    }
    w.write_all(&head)?;
    let mut buf = Vec::with_capacity(1 << 16);
    for chunk in vol.data().chunks(1 << 14) {
        buf.clear();
        buf.extend(chunk.iter().flat_map(|v| v.to_le_bytes()));
        w.write_all(&buf)?;
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("DVOL truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let v = self.f64()?;
        if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
            return Err(Error::Format(format!("DVOL {what} {v} is not a count")));
        }
        Ok(v as usize)
    }
}

fn format_err(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Format(format!("DVOL spec: {m}")),
        other => other,
    }
}

pub fn read_dvol(bytes: &[u8]) -> Result<Dvol> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Format("not a DVOL file (bad magic)".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported DVOL version {version}")));
    }
    let rank = r.u32()? as usize;
    if rank > 8 {
        return Err(Error::Format(format!("DVOL rank {rank} is not supported")));
    }
    let dims: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_>>()?;
    let tag = r.u8()?;
    let expect_rank = |n: usize| {
        if rank == n {
            Ok(())
        } else {
            Err(Error::Format(format!("DVOL space {tag} needs rank {n}, found {rank}")))
        }
    };
    let total = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
    let total = total.ok_or_else(|| Error::Format("DVOL dims overflow".into()))?;
    let read_data = |r: &mut Reader| -> Result<Vec<f32>> {
        let raw = r.take(total.checked_mul(4).ok_or_else(|| Error::Format("DVOL dims overflow".into()))?)?;
        if r.pos != r.bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes after DVOL data", r.bytes.len() - r.pos)));
        }
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let vol = match tag {
        0 => {
            expect_rank(4)?;
            let stride = r.f64()?;
            let n = r.count("plane count")?;
            let planes = r.f64s(n)?;
            let spec = FrustumSpec::new(dims[0], dims[1], stride, planes).map_err(format_err)?;
            if spec.num_planes() != dims[2] {
                return Err(Error::Format(format!("DVOL lists {n} planes for {} plane cells", dims[2])));
            }
            Dvol::Frustum(FrustumVolume::new(spec, dims[3], read_data(&mut r)?).map_err(format_err)?)
        }
        1 => {
            expect_rank(4)?;
            let o = r.f64s(3)?;
            let size = r.f64s(3)?;
            let vdims = [r.count("voxel dim")?, r.count("voxel dim")?, r.count("voxel dim")?];
            if vdims[..] != dims[..3] {
                return Err(Error::Format(format!("DVOL voxel dims {vdims:?} disagree with header {:?}", &dims[..3])));
            }
            let spec = VoxelGridSpec::new(Point3::new(o[0], o[1], o[2]), [size[0], size[1], size[2]], vdims)
                .map_err(format_err)?;
            Dvol::Voxel(VoxelVolume::new(spec, dims[3], read_data(&mut r)?).map_err(format_err)?)
        }
        2 => {
            expect_rank(3)?;
            Dvol::Map2D(FeatureMap2D::new(dims[0], dims[1], dims[2], read_data(&mut r)?).map_err(format_err)?)
        }
        t => return Err(Error::Format(format!("unknown DVOL space tag {t}"))),
    };
    Ok(vol)
}
