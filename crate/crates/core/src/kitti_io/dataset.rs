//! The KITTI object directory layout:
//! `calib/`, `label_2/`, `velodyne/`, `image_2/` (left), `image_3/` (right),
//! one file per frame named by a 6-digit id.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kitti_io::calib::Calibration;
use crate::kitti_io::labels::{label_boxes, labels_to_text, parse_labels, KittiObject};
use crate::kitti_io::png::{decode_rgb_png, encode_rgb_png};
use crate::kitti_io::velodyne::{read_velodyne, scene_points_to_velo, velo_to_scene_points, write_velodyne};
use crate::slcp::Scene;

/// Zero-padded frame id, e.g. `000042`.
pub fn frame_id(index: usize) -> String {
    format!("{index:06}")
}

/// Paths of one dataset split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KittiLayout {
    pub root: PathBuf,
}

impl KittiLayout {
    pub const SUBDIRS: [&'static str; 5] = ["calib", "label_2", "velodyne", "image_2", "image_3"];

    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn calib(&self, id: &str) -> PathBuf {
        self.root.join("calib").join(format!("{id}.txt"))
    }

    pub fn label(&self, id: &str) -> PathBuf {
        self.root.join("label_2").join(format!("{id}.txt"))
    }

    pub fn velodyne(&self, id: &str) -> PathBuf {
        self.root.join("velodyne").join(format!("{id}.bin"))
    }

    pub fn left_image(&self, id: &str) -> PathBuf {
        self.root.join("image_2").join(format!("{id}.png"))
    }

    pub fn right_image(&self, id: &str) -> PathBuf {
        self.root.join("image_3").join(format!("{id}.png"))
    }

    /// Every file of a frame, in [`KittiLayout::SUBDIRS`] order.
    pub fn frame_files(&self, id: &str) -> [PathBuf; 5] {
        [self.calib(id), self.label(id), self.velodyne(id), self.left_image(id), self.right_image(id)]
    }

    /// Sorted ids of the frames that have a calibration file.
    pub fn frame_ids(&self) -> Result<Vec<String>> {
        let dir = self.root.join("calib");
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| io_context(e, &dir))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_context(e, path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_context(e, path))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| w.write_all(bytes))
}

/// [`write_atomic`] for content produced incrementally.
pub fn write_atomic_with(path: &Path, fill: impl FnOnce(&mut dyn io::Write) -> io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_context(e, dir))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_context(e, dir))?;
    let mut w = io::BufWriter::with_capacity(1 << 20, tmp);
    fill(&mut w).map_err(|e| io_context(e, path))?;
    let tmp = w.into_inner().map_err(|e| io_context(e.into_error(), path))?;
    tmp.persist(path).map_err(|e| io_context(e.error, path))?;
    Ok(())
}

/// A frame as stored on disk, with its label rows kept verbatim.
#[derive(Debug, Clone)]
pub struct KittiFrame {
    pub id: String,
    pub scene: Scene,
    pub calib: Calibration,
    pub labels: Vec<KittiObject>,
}

/// Loads one frame. A missing label file means an unlabeled frame.
pub fn read_frame(layout: &KittiLayout, id: &str) -> Result<KittiFrame> {
    let calib = Calibration::parse(&read_text(&layout.calib(id))?)?;
    let left = decode_rgb_png(&read_file(&layout.left_image(id))?)?;
    let right = decode_rgb_png(&read_file(&layout.right_image(id))?)?;
    let rig = calib.stereo_rig(left.cols(), left.rows())?;
    let points = velo_to_scene_points(&read_velodyne(&read_file(&layout.velodyne(id))?)?, &calib);
    let label_path = layout.label(id);
    let labels = if label_path.exists() { parse_labels(&read_text(&label_path)?)? } else { Vec::new() };
    let boxes = label_boxes(&labels)?;
    let scene = Scene::new(left, right, points, rig, boxes)?;
    Ok(KittiFrame { id: id.to_string(), scene, calib, labels })
}

/// Writes every file of a frame atomically. Labels are regenerated from
/// the scene's boxes.
pub fn write_scene(layout: &KittiLayout, id: &str, scene: &Scene, calib: &Calibration) -> Result<()> {
    let labels: Vec<KittiObject> = scene.boxes.iter().map(|b| KittiObject::from_box(b, &scene.rig)).collect();
    write_atomic(&layout.calib(id), calib.to_text().as_bytes())?;
    write_atomic(&layout.label(id), labels_to_text(&labels).as_bytes())?;
    write_atomic(&layout.velodyne(id), &write_velodyne(&scene_points_to_velo(&scene.points, calib)?))?;
    write_atomic(&layout.left_image(id), &encode_rgb_png(&scene.left_image)?)?;
    write_atomic(&layout.right_image(id), &encode_rgb_png(&scene.right_image)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kitti_io::synth::{synth_scene, SynthConfig};

    #[test]
    fn synthetic_frame_survives_disk() {
        let dir = tempfile::tempdir().unwrap();
        let layout = KittiLayout::new(dir.path());
        let cfg = SynthConfig { width: 310, height: 94, focal: 180.0, ground_spacing: 2.0, ..SynthConfig::default() };
        let scene = synth_scene(&cfg).unwrap();
        let calib = Calibration::from_rig(&scene.rig);
        write_scene(&layout, &frame_id(3), &scene, &calib).unwrap();
        assert_eq!(layout.frame_ids().unwrap(), vec!["000003".to_string()]);
        let back = read_frame(&layout, "000003").unwrap();
        assert_eq!(back.scene, scene);
        assert_eq!(back.calib, calib);
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_frame(&KittiLayout::new(dir.path()), "000000").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        assert!(err.to_string().contains("000000.txt"));
    }
}
