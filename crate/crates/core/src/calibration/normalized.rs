use nalgebra::{DMatrix, Matrix4, Vector3, Vector4};

use super::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::HomogeneousTransform;

const UNKNOWNS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalizedOptions {
    /// Zero the smallest singular value of the normalized estimate before
    /// denormalizing. A full-rank point map loses a dimension when this is
    /// set, so it is off by default.
    pub enforce_rank3: bool,
}

/// Scale-translation normalization: centroid to the origin, mean distance
/// from the origin scaled to `√3`.
fn normalizer(points: &[Vector3<f64>]) -> Result<Matrix4<f64>> {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mean_mag = points.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    if !(mean_mag > 1e-12) {
        return Err(Error::DegenerateConfiguration(format!(
            "point cloud has numerically zero spread ({mean_mag:e})"
        )));
    }
    let s = 3f64.sqrt() / mean_mag;
    let mut t = Matrix4::identity() * s;
    t[(3, 3)] = 1.0;
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-s * centroid));
    Ok(t)
}

/// General 4×4 point map `arm ∝ F · board` from at least 16 pairs.
pub fn estimate_normalized_matrix(cs: &CorrespondenceSet) -> Result<HomogeneousTransform> {
    estimate_normalized_matrix_with(cs, &NormalizedOptions::default())
}

pub fn estimate_normalized_matrix_with(
    cs: &CorrespondenceSet,
    opts: &NormalizedOptions,
) -> Result<HomogeneousTransform> {
    let n = cs.len();
    if n < UNKNOWNS {
        return Err(Error::InsufficientData {
            needed: UNKNOWNS,
            got: n,
        });
    }
    let board = cs.board_vectors();
    let arm = cs.arm_vectors();
    let t_beta = normalizer(&board)?;
    let t_eta = normalizer(&arm)?;

    let nb: Vec<Vector4<f64>> = board.iter().map(|p| t_beta * p.push(1.0)).collect();
    let na: Vec<Vector4<f64>> = arm.iter().map(|p| t_eta * p.push(1.0)).collect();

    // A board coordinate that is constant across the data set is zero after
    // centering; its column of F is unobservable and is pinned to zero.
    let active: Vec<usize> = (0..4)
        .filter(|&c| c == 3 || nb.iter().any(|p| p[c].abs() > 1e-9))
        .collect();
    let cols = active.len();
    let unknowns = 4 * cols;

    let mut a = DMatrix::zeros(3 * n, unknowns);
    for (i, (p, q)) in nb.iter().zip(&na).enumerate() {
        for j in 0..3 {
            let row = 3 * i + j;
            for (k, &c) in active.iter().enumerate() {
                a[(row, j * cols + k)] = p[c];
                a[(row, 3 * cols + k)] = -q[j] * p[c];
            }
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let s_max = svd.singular_values[order[order.len() - 1]];
    let second = svd.singular_values[order[1]];
    if !(s_max > 0.0) || second / s_max < 1e-12 {
        return Err(Error::DegenerateConfiguration(
            "point-map system has a null space of dimension > 1".into(),
        ));
    }
    let null = v_t.row(order[0]);

    let mut f_n = Matrix4::zeros();
    for r in 0..4 {
        for (k, &c) in active.iter().enumerate() {
            f_n[(r, c)] = null[r * cols + k];
        }
    }

    if opts.enforce_rank3 {
        let mut s = f_n.svd(true, true);
        let min = s.singular_values.imin();
        s.singular_values[min] = 0.0;
        f_n = s
            .recompose()
            .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
    }

    let t_eta_inv = t_eta
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("arm normalizer is singular".into()))?;
    let mut f = t_eta_inv * f_n * t_beta;
    let corner = f[(3, 3)];
    if corner.abs() > 1e-9 {
        f /= corner;
    } else {
        f /= f.norm();
    }
    HomogeneousTransform::general(f)
}
