//! Image→board and board→arm calibration.

pub mod compare;
pub mod correspondence;
pub mod four_point;
pub mod image_map;
pub mod mlp;
pub mod normalized;

use serde::{Deserialize, Serialize};

pub use compare::{
    compare_calibrators, compare_calibrators_with, evaluate_calibration, CalibrationReport, MethodReport,
};
pub use correspondence::CorrespondenceSet;
pub use four_point::{estimate_four_point, estimate_four_point_with, FourPointOptions};
pub use image_map::{image_to_board, BoardRegion, ImageBounds};
pub use mlp::{
    lm_step, mlp_predict, train_mlp_calibrator, EpochRecord, MlpCalibrator, MlpJson, TrainingConfig, TrainingTrace,
};
pub use normalized::{estimate_normalized_matrix, estimate_normalized_matrix_with, NormalizedOptions};

use crate::error::Result;
use crate::geometry::{apply_transform, ArmPoint, BoardPoint, HomogeneousTransform, TransformJson};

/// Anything that maps board-frame points into the arm frame.
pub trait BoardToArm {
    fn board_to_arm(&self, p: &BoardPoint) -> Result<ArmPoint>;
}

impl BoardToArm for HomogeneousTransform {
    fn board_to_arm(&self, p: &BoardPoint) -> Result<ArmPoint> {
        apply_transform(self, &p.to_vector()).map(ArmPoint::from)
    }
}

impl BoardToArm for MlpCalibrator {
    fn board_to_arm(&self, p: &BoardPoint) -> Result<ArmPoint> {
        Ok(mlp_predict(self, p))
    }
}

/// A fitted board→arm calibration of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Calibration {
    Transform(HomogeneousTransform),
    Mlp(MlpCalibrator),
}

impl BoardToArm for Calibration {
    fn board_to_arm(&self, p: &BoardPoint) -> Result<ArmPoint> {
        match self {
            Calibration::Transform(t) => t.board_to_arm(p),
            Calibration::Mlp(m) => m.board_to_arm(p),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CalibrationJson {
    Transform(TransformJson),
    Mlp(MlpJson),
}

impl Calibration {
    pub fn to_json(&self) -> CalibrationJson {
        match self {
            Calibration::Transform(t) => CalibrationJson::Transform(t.to_json()),
            Calibration::Mlp(m) => CalibrationJson::Mlp(m.to_json()),
        }
    }

    pub fn from_json(j: &CalibrationJson) -> Result<Self> {
        Ok(match j {
            CalibrationJson::Transform(t) => Calibration::Transform(HomogeneousTransform::from_json(t)?),
            CalibrationJson::Mlp(m) => Calibration::Mlp(MlpCalibrator::from_json(m)?),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }
}
