//! Denavit–Hartenberg forward kinematics, a central-difference positional
//! Jacobian, and two inverse-kinematics solvers (Jacobian pseudoinverse
//! iteration and closed-form for the 3-DOF shoulder/elbow arm).

mod chain;
mod ik;
mod jacobian;

pub use chain::{
    forward_kinematics, forward_kinematics_with, link_transform, ChainJson, DhRow, EndPose, JointSpec, KinematicChain,
    LimitPolicy, NAO_FOREARM_3DOF, NAO_RIGHT_3DOF, NAO_RIGHT_5DOF, NAO_UPPER_ARM,
};
pub use ik::{solve_ik_closed_3dof, solve_ik_iterative, IkConfig, IkSolution};
pub use jacobian::{numerical_jacobian, DEFAULT_JACOBIAN_STEP};

use serde::{Deserialize, Serialize};
use std::ops::{Deref, DerefMut};

/// Joint angles in radians, one per variable DH row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub Vec<f64>);

impl JointVector {
    pub fn zeros(dof: usize) -> Self {
        Self(vec![0.0; dof])
    }

    pub fn max_abs_diff(&self, other: &JointVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for JointVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for JointVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for JointVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for JointVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}
