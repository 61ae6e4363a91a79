use std::io::{Read, Write};

use super::JointTrajectory;
use crate::error::{Error, Result};
use crate::geometry::ArmPoint;
use crate::kinematics::{forward_kinematics, KinematicChain};

/// Mean squared Euclidean distance between commanded points and the FK of
/// the trajectory's pen-down waypoints.
pub fn evaluate_drawing(commanded: &[ArmPoint], traj: &JointTrajectory, chain: &KinematicChain) -> Result<f64> {
    let achieved: Vec<_> = traj.pen_down().collect();
    if achieved.len() != commanded.len() {
        return Err(Error::Input(format!(
            "{} commanded points but {} pen-down waypoints",
            commanded.len(),
            achieved.len()
        )));
    }
    if commanded.is_empty() {
        return Err(Error::Input("nothing to evaluate: no pen-down waypoints".into()));
    }
    let mut sum = 0.0;
    for (c, w) in commanded.iter().zip(achieved) {
        let p = forward_kinematics(chain, &w.joints)?.position;
        sum += (p.to_vector() - c.to_vector()).norm_squared();
    }
    Ok(sum / commanded.len() as f64)
}

pub fn read_commanded_csv<R: Read>(r: R) -> Result<Vec<ArmPoint>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    if csv.headers()?.iter().collect::<Vec<_>>() != ["x", "y", "z"] {
        return Err(Error::Parse("commanded file must have header x,y,z".into()));
    }
    csv.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|f| f.parse().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1))))
                .collect::<Result<_>>()?;
            match v.as_slice() {
                [x, y, z] => Ok(ArmPoint::new(*x, *y, *z)),
                _ => Err(Error::Parse(format!("row {}: expected 3 fields", i + 1))),
            }
        })
        .collect()
}

/// Full-precision `x,y,z` rows.
pub fn write_commanded_csv<W: Write>(points: &[ArmPoint], mut w: W) -> Result<()> {
    writeln!(w, "x,y,z")?;
    for p in points {
        writeln!(w, "{},{},{}", p.x, p.y, p.z)?;
    }
    Ok(())
}
