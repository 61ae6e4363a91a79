use nalgebra::DMatrix;

use super::{forward_kinematics, JointVector, KinematicChain};
use crate::error::{Error, Result};

pub const DEFAULT_JACOBIAN_STEP: f64 = 1e-6;

/// Positional Jacobian `∂p/∂q` (3 × DOF) by central differences with step `h`.
pub fn numerical_jacobian(chain: &KinematicChain, q: &JointVector, h: f64) -> Result<DMatrix<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let dof = chain.dof();
    if q.len() != dof {
        return Err(Error::Input(format!("expected {dof} joint values, got {}", q.len())));
    }
    let mut jac = DMatrix::zeros(3, dof);
    let mut probe = q.clone();
    for j in 0..dof {
        probe[j] = q[j] + h;
        let plus = forward_kinematics(chain, &probe)?.position.to_vector();
        probe[j] = q[j] - h;
        let minus = forward_kinematics(chain, &probe)?.position.to_vector();
        probe[j] = q[j];
        jac.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}
