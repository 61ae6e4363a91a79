use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::{forward_kinematics, numerical_jacobian, JointVector, KinematicChain, DEFAULT_JACOBIAN_STEP};
use crate::error::{Error, Result};
use crate::geometry::ArmPoint;

/// Singular values below this fraction of the largest are dropped from the
/// pseudoinverse.
const PINV_RELATIVE_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkConfig {
    /// Converged once the positional error norm drops below this, m.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the pseudoinverse step applied per iteration, in (0, 1].
    pub step_scale: f64,
    /// Damping λ of the pseudoinverse (`σ / (σ² + λ²)`); 0 is the plain
    /// Moore–Penrose inverse.
    pub damping: f64,
    pub clamp: bool,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            step_scale: 1.0,
            damping: 0.0,
            clamp: true,
        }
    }
}

impl IkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Input(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Input("max_iter must be at least 1".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(Error::Input(format!(
                "step_scale must be in (0, 1], got {}",
                self.step_scale
            )));
        }
        if !(self.damping >= 0.0) {
            return Err(Error::Input(format!(
                "damping must be non-negative, got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub joints: JointVector,
    /// Iteration at which the tolerance was met (0 if the seed already did).
    pub iterations: usize,
    pub residual: f64,
    /// Positional error norm before each update, starting with the seed.
    pub trace: Vec<f64>,
}

fn pseudoinverse(j: &DMatrix<f64>, damping: f64) -> DMatrix<f64> {
    let svd = j.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = PINV_RELATIVE_CUTOFF * sigma_max;
    let inv = svd.singular_values.map(|s| {
        if s <= cutoff || s == 0.0 {
            0.0
        } else {
            s / (s * s + damping * damping)
        }
    });
    v_t.transpose() * DMatrix::from_diagonal(&inv) * u.transpose()
}

/// Jacobian-pseudoinverse iteration `q ← q + s·J⁺(target − FK(q))`.
///
/// The seed is evaluated as given; every updated iterate is clamped into the
/// joint limits when `cfg.clamp` is set.
pub fn solve_ik_iterative(
    chain: &KinematicChain,
    target: &ArmPoint,
    seed: &JointVector,
    cfg: &IkConfig,
) -> Result<IkSolution> {
    cfg.validate()?;
    if seed.len() != chain.dof() {
        return Err(Error::Input(format!(
            "seed has {} joints, chain has {}",
            seed.len(),
            chain.dof()
        )));
    }
    if !target.is_finite() {
        return Err(Error::Input("target is not finite".into()));
    }
    let goal = target.to_vector();
    let mut q = seed.clone();
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, q.clone());

    for iter in 0..=cfg.max_iter {
        let err: Vector3<f64> = goal - forward_kinematics(chain, &q)?.position.to_vector();
        let residual = err.norm();
        trace.push(residual);
        if residual < best.0 {
            best = (residual, q.clone());
        }
        if residual < cfg.tol {
            return Ok(IkSolution {
                joints: q,
                iterations: iter,
                residual,
                trace,
            });
        }
        if iter == cfg.max_iter {
            break;
        }
        let jac = numerical_jacobian(chain, &q, DEFAULT_JACOBIAN_STEP)?;
        let step = pseudoinverse(&jac, cfg.damping) * DVector::from_column_slice(err.as_slice());
        for (v, d) in q.iter_mut().zip(step.iter()) {
            *v += cfg.step_scale * d;
        }
        if cfg.clamp {
            chain.clamp(&mut q);
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        best: best.1,
        residual: best.0,
    })
}

/// Closed-form inverse kinematics of the shoulder-pitch / shoulder-roll /
/// elbow-roll arm with link lengths `l1`, `l2`, elbow on the `sin θ₃ ≥ 0`
/// branch. Joint limits are not applied.
pub fn solve_ik_closed_3dof(l1: f64, l2: f64, target: &ArmPoint) -> Result<JointVector> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::Input(format!("link lengths must be positive, got {l1}, {l2}")));
    }
    if !target.is_finite() {
        return Err(Error::Input("target is not finite".into()));
    }
    let ArmPoint { x: px, y: py, z: pz } = *target;
    let r2 = px * px + py * py + pz * pz;
    let c3 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if c3.abs() > 1.0 + 1e-12 {
        return Err(Error::Unreachable(format!(
            "distance {:.6} m outside [{:.6}, {:.6}] m",
            r2.sqrt(),
            (l1 - l2).abs(),
            l1 + l2
        )));
    }
    if px.hypot(py) <= 1e-12 {
        return Err(Error::SingularAzimuth);
    }
    let c3 = c3.clamp(-1.0, 1.0);
    let s3 = (1.0 - c3 * c3).sqrt();
    let theta1 = py.atan2(px);
    let theta3 = s3.atan2(c3);
    let alpha = (l2 * s3).atan2(l1 + l2 * c3);
    // −Pz = r·sin(θ₂ + α) with r = √(k₁² + k₂²) = |p|
    let theta2 = (-pz).atan2((r2 - pz * pz).max(0.0).sqrt()) - alpha;
    Ok(JointVector(vec![theta1, theta2, theta3]))
}
