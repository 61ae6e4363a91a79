use nalgebra::{DMatrix, Matrix4};

use super::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::HomogeneousTransform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPointOptions {
    /// Drop board coordinates that are constant across the data set (e.g. a
    /// flat board at `z = K`) and fold them into the offset column.
    pub reduce_constant_columns: bool,
}

impl Default for FourPointOptions {
    fn default() -> Self {
        Self {
            reduce_constant_columns: true,
        }
    }
}

/// Fits `arm = T · board` with `T` constrained to a `[0, 0, 0, 1]` bottom row.
pub fn estimate_four_point(cs: &CorrespondenceSet) -> Result<HomogeneousTransform> {
    estimate_four_point_with(cs, &FourPointOptions::default())
}

pub fn estimate_four_point_with(cs: &CorrespondenceSet, opts: &FourPointOptions) -> Result<HomogeneousTransform> {
    let n = cs.len();
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let board = cs.board_vectors();
    let arm = cs.arm_vectors();

    let mut kept: Vec<usize> = (0..3).collect();
    if opts.reduce_constant_columns {
        kept.retain(|&c| !is_constant(board.iter().map(|p| p[c])));
    }
    let k = kept.len() + 1;

    let a = DMatrix::from_fn(n, k, |r, c| if c < kept.len() { board[r][kept[c]] } else { 1.0 });
    let b = DMatrix::from_fn(n, 3, |r, c| arm[r][c]);

    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_max > 0.0) || s_min / s_max < 1e-12 {
        return Err(Error::DegenerateConfiguration(format!(
            "board coefficient matrix is rank deficient (condition {:.3e})",
            if s_min > 0.0 { s_max / s_min } else { f64::INFINITY }
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;

    let mut m = Matrix4::identity();
    for axis in 0..3 {
        for col in 0..3 {
            m[(axis, col)] = 0.0;
        }
        for (i, &col) in kept.iter().enumerate() {
            m[(axis, col)] = x[(i, axis)];
        }
        m[(axis, 3)] = x[(k - 1, axis)];
    }
    HomogeneousTransform::rigid(m)
}

fn is_constant(values: impl Iterator<Item = f64> + Clone) -> bool {
    let scale = values.clone().fold(0.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo <= 1e-9 * scale.max(1.0)
}
