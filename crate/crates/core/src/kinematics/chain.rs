use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::JointVector;
use crate::error::{Error, Result};
use crate::geometry::{ArmPoint, HomogeneousTransform, TransformJson};

/// Shoulder-to-elbow length of the NAO right arm, m.
pub const NAO_UPPER_ARM: f64 = 0.1050;
/// Elbow-to-pen length of the reduced 3-DOF arm (forearm and hand merged), m.
pub const NAO_FOREARM_3DOF: f64 = 0.1137;
const NAO_ELBOW_OFFSET_5DOF: f64 = 0.05595;
const NAO_HAND_OFFSET_5DOF: f64 = 0.05775;

pub const NAO_RIGHT_5DOF: &str = "nao-right-5dof";
pub const NAO_RIGHT_3DOF: &str = "nao-right-3dof";

const SHOULDER_PITCH: (f64, f64) = (-2.0857, 2.0857);
const SHOULDER_ROLL: (f64, f64) = (-1.3265, 0.3142);
const ELBOW_YAW: (f64, f64) = (-2.0857, 2.0857);
const ELBOW_ROLL: (f64, f64) = (0.0349, 1.5446);
const WRIST_YAW: (f64, f64) = (-1.8238, 1.8238);

/// The joint angle slot of a DH row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointSpec {
    Fixed(f64),
    /// Joint variable `q`; the DH angle is `q + offset`, with `lo ≤ q ≤ hi`.
    Variable {
        offset: f64,
        lo: f64,
        hi: f64,
    },
}

/// One row of a modified (Craig) DH table: `α_{i−1}`, `a_{i−1}`, `d_i`, `θ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub alpha: f64,
    pub a: f64,
    pub d: f64,
    pub theta: JointSpec,
}

impl DhRow {
    pub fn fixed(alpha: f64, a: f64, d: f64, theta: f64) -> Self {
        Self {
            alpha,
            a,
            d,
            theta: JointSpec::Fixed(theta),
        }
    }

    pub fn variable(alpha: f64, a: f64, d: f64, offset: f64, (lo, hi): (f64, f64)) -> Self {
        Self {
            alpha,
            a,
            d,
            theta: JointSpec::Variable { offset, lo, hi },
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self.theta, JointSpec::Variable { .. })
    }

    fn is_finite(&self) -> bool {
        let theta_ok = match self.theta {
            JointSpec::Fixed(t) => t.is_finite(),
            JointSpec::Variable { offset, lo, hi } => offset.is_finite() && lo.is_finite() && hi.is_finite(),
        };
        theta_ok && self.alpha.is_finite() && self.a.is_finite() && self.d.is_finite()
    }
}

/// `Rx(α)·Tx(a)·Tz(d)·Rz(θ)` for one row, where `theta_value` is the full DH
/// angle (any offset already applied).
pub fn link_transform(row: &DhRow, theta_value: f64) -> HomogeneousTransform {
    let (sa, ca) = row.alpha.sin_cos();
    let (st, ct) = theta_value.sin_cos();
    let m = Matrix4::new(
        ct,
        -st,
        0.0,
        row.a,
        st * ca,
        ct * ca,
        -sa,
        -row.d * sa,
        st * sa,
        ct * sa,
        ca,
        row.d * ca,
        0.0,
        0.0,
        0.0,
        1.0,
    );
    HomogeneousTransform::from_rotation_translation(
        &m.fixed_view::<3, 3>(0, 0).into_owned(),
        &m.fixed_view::<3, 1>(0, 3).into_owned(),
    )
}

/// How forward kinematics treats joint values outside their limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LimitPolicy {
    /// Evaluate the angles as given.
    #[default]
    Ignore,
    /// Clamp each joint into `[lo, hi]` before evaluating.
    Clamp,
    /// Fail with [`Error::LimitViolation`].
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    name: String,
    rows: Vec<DhRow>,
    base_offset: HomogeneousTransform,
}

impl KinematicChain {
    pub fn new(name: impl Into<String>, rows: Vec<DhRow>, base_offset: HomogeneousTransform) -> Result<Self> {
        if rows.iter().any(|r| !r.is_finite()) {
            return Err(Error::Input("DH row has non-finite entries".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if let JointSpec::Variable { lo, hi, .. } = r.theta {
                if lo >= hi {
                    return Err(Error::Input(format!(
                        "row {i}: joint limit lo {lo} must be below hi {hi}"
                    )));
                }
            }
        }
        if !rows.iter().any(DhRow::is_variable) {
            return Err(Error::Input("chain has no variable joints".into()));
        }
        Ok(Self {
            name: name.into(),
            rows,
            base_offset,
        })
    }

    /// NAO right arm, five joints: shoulder pitch, shoulder roll, elbow yaw,
    /// elbow roll, wrist yaw.
    pub fn nao_right_5dof() -> Self {
        let rows = vec![
            DhRow::variable(0.0, 0.0, 0.0, 0.0, SHOULDER_PITCH),
            DhRow::variable(-FRAC_PI_2, 0.0, 0.0, -FRAC_PI_2, SHOULDER_ROLL),
            DhRow::variable(-FRAC_PI_2, 0.0, NAO_UPPER_ARM, 0.0, ELBOW_YAW),
            DhRow::variable(FRAC_PI_2, 0.0, 0.0, 0.0, ELBOW_ROLL),
            DhRow::variable(-FRAC_PI_2, 0.0, NAO_ELBOW_OFFSET_5DOF, 0.0, WRIST_YAW),
            DhRow::fixed(FRAC_PI_2, 0.0, NAO_HAND_OFFSET_5DOF, 0.0),
        ];
        Self::new(NAO_RIGHT_5DOF, rows, HomogeneousTransform::identity()).expect("valid table")
    }

    /// Reduced NAO right arm with elbow yaw and wrist yaw frozen: shoulder
    /// pitch, shoulder roll, elbow roll.
    pub fn nao_right_3dof() -> Self {
        Self::shoulder_elbow("nao-right-3dof", NAO_UPPER_ARM, NAO_FOREARM_3DOF)
    }

    /// A 3-DOF arm with the same joint layout and limits as the reduced NAO
    /// arm but arbitrary link lengths.
    pub fn shoulder_elbow(name: &str, l1: f64, l2: f64) -> Self {
        let rows = vec![
            DhRow::variable(0.0, 0.0, 0.0, 0.0, SHOULDER_PITCH),
            DhRow::variable(-FRAC_PI_2, 0.0, 0.0, 0.0, SHOULDER_ROLL),
            DhRow::variable(0.0, l1, 0.0, 0.0, ELBOW_ROLL),
            DhRow::fixed(0.0, l2, 0.0, -FRAC_PI_2),
        ];
        Self::new(name, rows, HomogeneousTransform::identity()).expect("valid table")
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            NAO_RIGHT_5DOF => Some(Self::nao_right_5dof()),
            NAO_RIGHT_3DOF => Some(Self::nao_right_3dof()),
            _ => None,
        }
    }

    pub fn with_base_offset(mut self, base_offset: HomogeneousTransform) -> Self {
        self.base_offset = base_offset;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> &[DhRow] {
        &self.rows
    }

    pub fn base_offset(&self) -> &HomogeneousTransform {
        &self.base_offset
    }

    pub fn dof(&self) -> usize {
        self.rows.iter().filter(|r| r.is_variable()).count()
    }

    pub fn joint_limits(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| match r.theta {
                JointSpec::Variable { lo, hi, .. } => Some((lo, hi)),
                JointSpec::Fixed(_) => None,
            })
            .collect()
    }

    /// Sum of all `|a|` and `|d|`: an upper bound on the reach.
    pub fn total_link_length(&self) -> f64 {
        self.rows.iter().map(|r| r.a.abs() + r.d.abs()).sum()
    }

    pub fn clamp(&self, q: &mut JointVector) {
        for (v, (lo, hi)) in q.iter_mut().zip(self.joint_limits()) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        self.first_violation(q).is_none()
    }

    pub fn first_violation(&self, q: &JointVector) -> Option<Error> {
        q.iter()
            .zip(self.joint_limits())
            .enumerate()
            .find(|(_, (v, (lo, hi)))| !(*lo..=*hi).contains(*v))
            .map(|(joint, (&value, (lo, hi)))| Error::LimitViolation { joint, value, lo, hi })
    }

    pub fn limit_midpoint(&self) -> JointVector {
        JointVector(
            self.joint_limits()
                .into_iter()
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }

    /// `(l1, l2)` if this chain has the shoulder-pitch / shoulder-roll /
    /// elbow-roll layout that the closed-form solver handles.
    pub fn shoulder_elbow_lengths(&self) -> Option<(f64, f64)> {
        const EPS: f64 = 1e-12;
        let [r1, r2, r3, r4] = self.rows.as_slice() else {
            return None;
        };
        let var_no_offset = |r: &DhRow| matches!(r.theta, JointSpec::Variable { offset, .. } if offset.abs() < EPS);
        let ok = var_no_offset(r1)
            && var_no_offset(r2)
            && var_no_offset(r3)
            && !r4.is_variable()
            && r1.alpha.abs() < EPS
            && r1.a.abs() < EPS
            && r1.d.abs() < EPS
            && (r2.alpha + FRAC_PI_2).abs() < EPS
            && r2.a.abs() < EPS
            && r2.d.abs() < EPS
            && r3.alpha.abs() < EPS
            && r3.d.abs() < EPS
            && r4.alpha.abs() < EPS
            && r4.d.abs() < EPS
            && r3.a > 0.0
            && r4.a > 0.0;
        ok.then_some((r3.a, r4.a))
    }

    pub fn from_json(name: &str, json: &ChainJson) -> Result<Self> {
        let base = match json.base_offset() {
            Some(t) => HomogeneousTransform::from_json(t)?,
            None => HomogeneousTransform::identity(),
        };
        Self::new(name, json.rows().to_vec(), base)
    }

    pub fn to_json(&self) -> ChainJson {
        ChainJson::Full {
            rows: self.rows.clone(),
            base_offset: Some(self.base_offset.to_json()),
        }
    }
}

/// On-disk chain definition: either a bare list of DH rows or an object with
/// `rows` and an optional `base_offset` transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainJson {
    Rows(Vec<DhRow>),
    Full {
        rows: Vec<DhRow>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base_offset: Option<TransformJson>,
    },
}

impl ChainJson {
    pub fn rows(&self) -> &[DhRow] {
        match self {
            ChainJson::Rows(r) => r,
            ChainJson::Full { rows, .. } => rows,
        }
    }

    pub fn base_offset(&self) -> Option<&TransformJson> {
        match self {
            ChainJson::Rows(_) => None,
            ChainJson::Full { base_offset, .. } => base_offset.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndPose {
    pub position: ArmPoint,
    pub transform: HomogeneousTransform,
}

/// Forward kinematics evaluated at the given angles without limit checks.
pub fn forward_kinematics(chain: &KinematicChain, q: &JointVector) -> Result<EndPose> {
    forward_kinematics_with(chain, q, LimitPolicy::Ignore)
}

pub fn forward_kinematics_with(chain: &KinematicChain, q: &JointVector, policy: LimitPolicy) -> Result<EndPose> {
    if q.len() != chain.dof() {
        return Err(Error::Input(format!(
            "expected {} joint values, got {}",
            chain.dof(),
            q.len()
        )));
    }
    let clamped;
    let q = match policy {
        LimitPolicy::Ignore => q,
        LimitPolicy::Clamp => {
            let mut c = q.clone();
            chain.clamp(&mut c);
            clamped = c;
            &clamped
        }
        LimitPolicy::Reject => {
            if let Some(e) = chain.first_violation(q) {
                return Err(e);
            }
            q
        }
    };
    let mut t = chain.base_offset;
    let mut joints = q.iter();
    for row in &chain.rows {
        let theta = match row.theta {
            JointSpec::Fixed(v) => v,
            JointSpec::Variable { offset, .. } => joints.next().expect("length checked") + offset,
        };
        t = t.compose(&link_transform(row, theta));
    }
    Ok(EndPose {
        position: ArmPoint::from(t.translation()),
        transform: t,
    })
}
