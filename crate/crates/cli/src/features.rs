//! Procedural stand-in for a 2D feature extractor: each feature channel is
//! a fixed linear mix of the RGB values at the sampled pixel.

use sweepvol::FeatureMap2D;

fn weight(k: usize, j: usize) -> f32 {
    ((k as f32 + 1.0) * 0.618 * (j as f32 + 1.0) + 0.37 * k as f32).cos()
}

/// Feature pixel `(r, c)` reads image pixel `(r * stride, c * stride)`.
pub fn image_features(img: &FeatureMap2D, stride: usize, channels: usize) -> FeatureMap2D {
    let weights: Vec<[f32; 3]> = (0..channels).map(|k| [weight(k, 0), weight(k, 1), weight(k, 2)]).collect();
    FeatureMap2D::from_fn(img.rows() / stride, img.cols() / stride, channels, |r, c, k| {
        let px = img.pixel(r * stride, c * stride);
        let w = &weights[k];
        w[0] * (px[0] - 0.5) + w[1] * (px[1] - 0.5) + w[2] * (px[2] - 0.5)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_sampling() {
        let img = FeatureMap2D::from_fn(375, 1242, 3, |r, c, k| ((r + 2 * c + k) % 255) as f32 / 255.0);
        let f = image_features(&img, 4, 96);
        assert_eq!(f.shape(), (93, 310, 96));
        let flat = image_features(&FeatureMap2D::from_fn(8, 8, 3, |_, _, _| 0.5), 2, 4);
        assert!(flat.data().iter().all(|&v| v == 0.0));
    }
}
