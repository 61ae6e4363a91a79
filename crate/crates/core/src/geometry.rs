//! Points, 4×4 homogeneous transforms and the per-axis error statistics used
//! to score every calibration method.
//!
//! All lengths are meters.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel coordinates: `u` is the column, `v` the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

macro_rules! point3 {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name {
            pub x: f64,
            pub y: f64,
            pub z: f64,
        }

        impl $name {
            pub fn new(x: f64, y: f64, z: f64) -> Self {
                Self { x, y, z }
            }

            pub fn to_vector(self) -> Vector3<f64> {
                Vector3::new(self.x, self.y, self.z)
            }

            pub fn is_finite(&self) -> bool {
                self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
            }
        }

        impl From<Vector3<f64>> for $name {
            fn from(v: Vector3<f64>) -> Self {
                Self::new(v.x, v.y, v.z)
            }
        }

        impl From<$name> for Vector3<f64> {
            fn from(p: $name) -> Self {
                p.to_vector()
            }
        }
    };
}

point3!(
    /// A point in the drawing-board frame.
    BoardPoint
);
point3!(
    /// A point in the arm base (shoulder/torso) frame.
    ArmPoint
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// Bottom row is exactly `[0, 0, 0, 1]`.
    Rigid,
    /// Unconstrained 4×4 matrix; points are dehomogenized on application.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform {
    m: Matrix4<f64>,
    kind: TransformKind,
}

impl HomogeneousTransform {
    pub fn identity() -> Self {
        Self {
            m: Matrix4::identity(),
            kind: TransformKind::Rigid,
        }
    }

    /// Builds a rigid-row transform. The bottom row is overwritten with
    /// `[0, 0, 0, 1]`.
    pub fn rigid(mut m: Matrix4<f64>) -> Result<Self> {
        m.set_row(3, &nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));
        Self::checked(m, TransformKind::Rigid)
    }

    pub fn general(m: Matrix4<f64>) -> Result<Self> {
        Self::checked(m, TransformKind::General)
    }

    pub fn new(m: Matrix4<f64>, kind: TransformKind) -> Result<Self> {
        if kind == TransformKind::Rigid {
            let bottom = m.row(3);
            if bottom[0] != 0.0 || bottom[1] != 0.0 || bottom[2] != 0.0 || bottom[3] != 1.0 {
                return Err(Error::Input("rigid transform must have bottom row [0, 0, 0, 1]".into()));
            }
        }
        Self::checked(m, kind)
    }

    fn checked(m: Matrix4<f64>, kind: TransformKind) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("transform has non-finite entries".into()));
        }
        Ok(Self { m, kind })
    }

    pub fn from_rotation_translation(r: &Matrix3<f64>, t: &Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
        Self {
            m,
            kind: TransformKind::Rigid,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::from_rotation_translation(&Matrix3::identity(), &t)
    }

    /// Rotation `Rz(θz)·Ry(θy)·Rx(θx)` followed by translation `t`.
    pub fn from_euler_xyz(theta_x: f64, theta_y: f64, theta_z: f64, t: Vector3<f64>) -> Self {
        Self::from_rotation_translation(&rotation_zyx(theta_x, theta_y, theta_z), &t)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.m.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Matrix product `self · other`: applies `other` first.
    pub fn compose(&self, other: &HomogeneousTransform) -> HomogeneousTransform {
        let kind = if self.kind == TransformKind::Rigid && other.kind == TransformKind::Rigid {
            TransformKind::Rigid
        } else {
            TransformKind::General
        };
        let mut m = self.m * other.m;
        if kind == TransformKind::Rigid {
            m.set_row(3, &nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));
        }
        HomogeneousTransform { m, kind }
    }

    /// Inverse of a rigid transform computed as `[Rᵀ, -Rᵀt]`; valid only for
    /// orthonormal rotation blocks.
    pub fn rigid_inverse(&self) -> HomogeneousTransform {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        Self::from_rotation_translation(&rt, &t)
    }

    pub fn to_json(&self) -> TransformJson {
        let mut matrix = [[0.0; 4]; 4];
        for (r, row) in matrix.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.m[(r, c)];
            }
        }
        TransformJson {
            matrix,
            kind: self.kind,
        }
    }

    pub fn from_json(j: &TransformJson) -> Result<Self> {
        let m = Matrix4::from_fn(|r, c| j.matrix[r][c]);
        Self::new(m, j.kind)
    }
}

/// Shared on-disk form: row-major `matrix` plus `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformJson {
    pub matrix: [[f64; 4]; 4],
    pub kind: TransformKind,
}

pub fn rotation_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rotation_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotation_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rz(θz)·Ry(θy)·Rx(θx)`.
pub fn rotation_zyx(theta_x: f64, theta_y: f64, theta_z: f64) -> Matrix3<f64> {
    rotation_z(theta_z) * rotation_y(theta_y) * rotation_x(theta_x)
}

/// Maps `p` through `t` and dehomogenizes.
pub fn apply_transform(t: &HomogeneousTransform, p: &Vector3<f64>) -> Result<Vector3<f64>> {
    let h = t.m * Vector4::new(p.x, p.y, p.z, 1.0);
    match t.kind {
        TransformKind::Rigid => Ok(h.xyz()),
        TransformKind::General => {
            if h.w.abs() <= 1e-12 {
                return Err(Error::DegenerateProjection(h.w));
            }
            Ok(h.xyz() / h.w)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisStats {
    /// Mean of |actual − predicted|.
    pub mean_abs: f64,
    pub std: f64,
    pub variance: f64,
    /// Mean of (actual − predicted)².
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisErrorStats {
    pub x: AxisStats,
    pub y: AxisStats,
    pub z: AxisStats,
}

impl AxisErrorStats {
    pub fn axes(&self) -> [&AxisStats; 3] {
        [&self.x, &self.y, &self.z]
    }

    /// Mean of the three per-axis MSE values.
    pub fn mean_mse(&self) -> f64 {
        (self.x.mse + self.y.mse + self.z.mse) / 3.0
    }
}

/// Per-axis statistics of the absolute error between paired points.
///
/// Variance uses the `n − 1` sample normalization (0 for a single sample);
/// with it, the mean/variance/MSE triples of published calibration tables are
/// mutually consistent (`mse = mean² + var·(n−1)/n`).
pub fn axis_error_stats(actual: &[Vector3<f64>], predicted: &[Vector3<f64>]) -> Result<AxisErrorStats> {
    if actual.len() != predicted.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} actual vs {} predicted points",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Input("no points to compare".into()));
    }
    let n = actual.len() as f64;
    let mut out = [AxisStats::default(); 3];
    for (axis, stats) in out.iter_mut().enumerate() {
        let diffs = actual.iter().zip(predicted).map(|(a, p)| a[axis] - p[axis]);
        let (sum_abs, sum_sq) = diffs.fold((0.0, 0.0), |(sa, sq), d| (sa + d.abs(), sq + d * d));
        let mean_abs = sum_abs / n;
        let variance = if actual.len() > 1 {
            actual
                .iter()
                .zip(predicted)
                .map(|(a, p)| ((a[axis] - p[axis]).abs() - mean_abs).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        *stats = AxisStats {
            mean_abs,
            std: variance.sqrt(),
            variance,
            mse: sum_sq / n,
        };
    }
    let [x, y, z] = out;
    Ok(AxisErrorStats { x, y, z })
}

/// Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {} samples",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    // Centered sums equal Σxy − n·x̄·ȳ etc. but do not cancel catastrophically.
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let scale_x: f64 = x.iter().map(|v| v * v).sum();
    let scale_y: f64 = y.iter().map(|v| v * v).sum();
    if sxx <= 1e-24 * scale_x || sxx == 0.0 {
        return Err(Error::DegenerateStatistics("first series has zero variance".into()));
    }
    if syy <= 1e-24 * scale_y || syy == 0.0 {
        return Err(Error::DegenerateStatistics("second series has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
