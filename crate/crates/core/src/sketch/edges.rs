use super::GrayRaster;
use crate::error::{Error, Result};
use crate::geometry::ImagePoint;

/// Interior pixels whose central-difference gradient magnitude exceeds
/// `threshold`, in row-major order.
pub fn extract_edge_points(img: &GrayRaster, threshold: f64) -> Result<Vec<ImagePoint>> {
    if !(threshold > 0.0) {
        return Err(Error::Input(format!(
            "edge threshold must be positive, got {threshold}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::Input(format!("raster {w}×{h} is smaller than 3×3")));
    }
    let px = |u: usize, v: usize| img.get(u, v) as f64;
    let mut out = Vec::new();
    for v in 1..h - 1 {
        for u in 1..w - 1 {
            let gx = (px(u + 1, v) - px(u - 1, v)) / 2.0;
            let gy = (px(u, v + 1) - px(u, v - 1)) / 2.0;
            if gx.hypot(gy) > threshold {
                out.push(ImagePoint::new(u as f64, v as f64));
            }
        }
    }
    Ok(out)
}
