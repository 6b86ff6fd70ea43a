//! PNG codecs for color images and KITTI 16-bit depth maps.

use std::io::Cursor;

use image::{ImageBuffer, ImageFormat, Luma, Rgb};

use crate::dualview::DepthMap;
use crate::error::{domain, Error, Result};
use crate::grid::FeatureMap2D;

/// Depth scale of the 16-bit encoding: stored value = meters * 256.
pub const DEPTH_SCALE: f64 = 256.0;

fn encode<P: image::PixelWithColorType>(img: &ImageBuffer<P, Vec<P::Subpixel>>) -> Vec<u8>
where
    [P::Subpixel]: image::EncodableLayout,
{
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

fn decode(bytes: &[u8]) -> Result<image::DynamicImage> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Format(format!("PNG: {e}")))
}

/// `(width, height)` from a PNG header, without decoding pixels.
pub fn png_dimensions(bytes: &[u8]) -> Result<(usize, usize)> {
    let reader = image::ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let (w, h) = reader.into_dimensions().map_err(|e| Error::Format(format!("PNG: {e}")))?;
    Ok((w as usize, h as usize))
}

/// Quantizes a `[0, 1]` intensity to the 8-bit level it will be stored as.
pub fn quantize_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// The intensity an 8-bit level decodes to.
pub fn dequantize_u8(level: u8) -> f32 {
    level as f32 / 255.0
}

/// Encodes a 3-channel map with values in `[0, 1]` as 8-bit RGB.
pub fn encode_rgb_png(img: &FeatureMap2D) -> Result<Vec<u8>> {
    if img.channels() != 3 {
        return Err(domain(format!("RGB output needs 3 channels, got {}", img.channels())));
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize_u8(v)).collect();
    let buf = ImageBuffer::<Rgb<u8>, _>::from_raw(img.cols() as u32, img.rows() as u32, bytes)
        .expect("buffer length matches the map shape");
    Ok(encode(&buf))
}

/// Decodes an 8- or 16-bit PNG into a 3-channel map with values in `[0, 1]`.
pub fn decode_rgb_png(bytes: &[u8]) -> Result<FeatureMap2D> {
    let img = decode(bytes)?.into_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(dequantize_u8).collect();
    FeatureMap2D::new(h as usize, w as usize, 3, data)
}

/// KITTI depth encoding: `u16(round(depth * 256))`, 0 for invalid pixels.
pub fn encode_depth_png(depth: &DepthMap) -> Vec<u8> {
    let px: Vec<u16> = depth
        .values()
        .iter()
        .map(|&d| if d > 0.0 { (d as f64 * DEPTH_SCALE).round().clamp(1.0, u16::MAX as f64) as u16 } else { 0 })
        .collect();
    let buf = ImageBuffer::<Luma<u16>, _>::from_raw(depth.cols() as u32, depth.rows() as u32, px)
        .expect("buffer length matches the map shape");
    encode(&buf)
}

pub fn decode_depth_png(bytes: &[u8]) -> Result<DepthMap> {
    let img = decode(bytes)?;
    if !matches!(img.color(), image::ColorType::L16 | image::ColorType::L8) {
        return Err(Error::Format(format!("depth PNG must be single-channel, found {:?}", img.color())));
    }
    let img = img.into_luma16();
    let (w, h) = img.dimensions();
    let values = img.into_raw().into_iter().map(|v| (v as f64 / DEPTH_SCALE) as f32).collect();
    DepthMap::new(h as usize, w as usize, values)
}
