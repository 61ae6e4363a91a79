//! Calibration, kinematics and trajectory planning for a sketch-drawing arm.
//!
//! Pipeline: image points are mapped linearly onto a board region, board
//! points are mapped into the arm frame by a fitted calibration, and joint
//! angles are solved per via point by inverse kinematics.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod format;
pub mod geometry;
pub mod kinematics;
pub mod sketch;

pub use error::{Error, Result};
