use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoardPoint, ImagePoint};

/// Rectangle of the drawing board reachable by the pen, on the plane
/// `z = z_plane` of the board frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_plane: f64,
}

impl BoardRegion {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, z_plane: f64) -> Result<Self> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
            z_plane,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.x_min, self.x_max, self.y_min, self.y_max, self.z_plane];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("board region has non-finite bounds".into()));
        }
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::Input(format!(
                "board region has zero span: x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }
}

/// Pixel extents of the source image (or point set).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageBounds {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl ImageBounds {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Result<Self> {
        let b = Self {
            u_min,
            u_max,
            v_min,
            v_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_min < self.u_max && self.v_min < self.v_max) {
            return Err(Error::Input(format!(
                "image bounds have zero span: u [{}, {}], v [{}, {}]",
                self.u_min, self.u_max, self.v_min, self.v_max
            )));
        }
        Ok(())
    }

    /// Tight bounds of a point set; `None` if either axis has zero span.
    pub fn enclosing(points: &[ImagePoint]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Self {
            u_min: first.u,
            u_max: first.u,
            v_min: first.v,
            v_max: first.v,
        };
        for p in points {
            b.u_min = b.u_min.min(p.u);
            b.u_max = b.u_max.max(p.u);
            b.v_min = b.v_min.min(p.v);
            b.v_max = b.v_max.max(p.v);
        }
        b.validate().ok().map(|_| b)
    }

    pub fn contains(&self, p: &ImagePoint) -> bool {
        (self.u_min..=self.u_max).contains(&p.u) && (self.v_min..=self.v_max).contains(&p.v)
    }
}

/// Per-axis linear rescaling of pixel coordinates onto the board region.
pub fn image_to_board(points: &[ImagePoint], ib: &ImageBounds, br: &BoardRegion) -> Result<Vec<BoardPoint>> {
    ib.validate()?;
    br.validate()?;
    points
        .iter()
        .map(|p| {
            if !ib.contains(p) {
                return Err(Error::Input(format!("image point ({}, {}) outside bounds", p.u, p.v)));
            }
            let x = br.x_min + (p.u - ib.u_min) / (ib.u_max - ib.u_min) * (br.x_max - br.x_min);
            let y = br.y_min + (p.v - ib.v_min) / (ib.v_max - ib.v_min) * (br.y_max - br.y_min);
            Ok(BoardPoint::new(x, y, br.z_plane))
        })
        .collect()
}
