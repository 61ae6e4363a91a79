use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use super::SketchPlan;
use crate::calibration::{image_to_board, BoardRegion, BoardToArm};
use crate::error::{Error, Result};
use crate::geometry::{apply_transform, ArmPoint};
use crate::kinematics::{
    forward_kinematics, solve_ik_closed_3dof, solve_ik_iterative, IkConfig, JointVector, KinematicChain,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenState {
    Down,
    Up,
}

impl fmt::Display for PenState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenState::Down => "down",
            PenState::Up => "up",
        })
    }
}

impl FromStr for PenState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "down" => Ok(PenState::Down),
            "up" => Ok(PenState::Up),
            other => Err(Error::Parse(format!("pen state must be up or down, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub joints: JointVector,
    pub pen: PenState,
    /// Distance between the commanded point and FK of `joints`, in meters.
    pub residual: f64,
}

/// Joint-space drawing. Each stroke is drawn pen-down; every stroke except
/// the last ends with a pen-up waypoint at the same joints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointTrajectory {
    pub chain: String,
    pub strokes: Vec<Vec<Waypoint>>,
}

impl JointTrajectory {
    pub fn pen_down(&self) -> impl Iterator<Item = &Waypoint> {
        self.strokes.iter().flatten().filter(|w| w.pen == PenState::Down)
    }

    /// `stroke,index,theta1..thetaN,pen,residual_m` with 9-decimal values.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dof = self.strokes.iter().flatten().next().map_or(0, |wp| wp.joints.len());
        let thetas: Vec<String> = (1..=dof).map(|i| format!("theta{i}")).collect();
        let mut header = vec!["stroke".to_string(), "index".to_string()];
        header.extend(thetas);
        header.extend(["pen".to_string(), "residual_m".to_string()]);
        writeln!(w, "{}", header.join(","))?;
        for (s, stroke) in self.strokes.iter().enumerate() {
            for (i, wp) in stroke.iter().enumerate() {
                let mut row = vec![s.to_string(), i.to_string()];
                row.extend(wp.joints.iter().map(|v| crate::format::fixed9(*v)));
                row.push(wp.pen.to_string());
                row.push(crate::format::fixed9(wp.residual));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, chain: &str) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        let n = headers.len();
        let dof = n.saturating_sub(4);
        let well_formed = n >= 5
            && headers[0] == "stroke"
            && headers[1] == "index"
            && (0..dof).all(|i| headers[2 + i] == format!("theta{}", i + 1))
            && headers[n - 2] == "pen"
            && headers[n - 1] == "residual_m";
        if !well_formed {
            return Err(Error::Parse(format!(
                "unexpected trajectory header: {}",
                headers.join(",")
            )));
        }
        let mut traj = JointTrajectory {
            chain: chain.to_string(),
            strokes: Vec::new(),
        };
        for (line, rec) in csv.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Parse(format!("trajectory row {}: bad {what}", line + 1));
            let stroke: usize = rec[0].parse().map_err(|_| bad("stroke"))?;
            let joints: Vec<f64> = (0..dof)
                .map(|i| rec[2 + i].parse::<f64>().map_err(|_| bad("angle")))
                .collect::<Result<_>>()?;
            let pen: PenState = rec[n - 2].parse()?;
            let residual: f64 = rec[n - 1].parse().map_err(|_| bad("residual"))?;
            if stroke + 1 < traj.strokes.len() || stroke > traj.strokes.len() {
                return Err(bad("stroke ordering"));
            }
            if stroke == traj.strokes.len() {
                traj.strokes.push(Vec::new());
            }
            traj.strokes[stroke].push(Waypoint {
                joints: joints.into(),
                pen,
                residual,
            });
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkMethod {
    Iterative,
    Closed,
}

impl FromStr for IkMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iterative" => Ok(IkMethod::Iterative),
            "closed" => Ok(IkMethod::Closed),
            other => Err(Error::Input(format!("unknown IK method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub method: IkMethod,
    pub ik: IkConfig,
    /// Seed for the first via point of each stroke. When absent, the
    /// closed-form solution (if the chain admits one) or the midpoint of
    /// the joint limits is used.
    pub seed: Option<JointVector>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            method: IkMethod::Iterative,
            ik: IkConfig::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlannedDrawing {
    pub trajectory: JointTrajectory,
    /// Arm-frame targets of the pen-down waypoints, in trajectory order.
    pub commanded: Vec<ArmPoint>,
}

fn closed_form(chain: &KinematicChain, target: &ArmPoint) -> Result<JointVector> {
    let (l1, l2) = chain.shoulder_elbow_lengths().ok_or_else(|| {
        Error::Input(format!(
            "closed-form IK needs a shoulder-elbow chain, {} is not one",
            chain.name()
        ))
    })?;
    let local = apply_transform(&chain.base_offset().rigid_inverse(), &target.to_vector())?;
    solve_ik_closed_3dof(l1, l2, &ArmPoint::from(local))
}

fn residual(chain: &KinematicChain, q: &JointVector, target: &ArmPoint) -> Result<f64> {
    Ok((forward_kinematics(chain, q)?.position.to_vector() - target.to_vector()).norm())
}

fn solve_via_point(
    chain: &KinematicChain,
    target: &ArmPoint,
    prev: Option<&JointVector>,
    opts: &PlanOptions,
) -> Result<(JointVector, f64)> {
    match opts.method {
        IkMethod::Closed => {
            let q = closed_form(chain, target)?;
            if let Some(violation) = chain.first_violation(&q) {
                return Err(Error::Unreachable(format!("closed-form solution: {violation}")));
            }
            let r = residual(chain, &q, target)?;
            Ok((q, r))
        }
        IkMethod::Iterative => {
            let seed = match (prev, &opts.seed) {
                (Some(p), _) => p.clone(),
                (None, Some(s)) => s.clone(),
                (None, None) => closed_form(chain, target)
                    .map(|mut q| {
                        chain.clamp(&mut q);
                        q
                    })
                    .unwrap_or_else(|_| chain.limit_midpoint()),
            };
            let sol = solve_ik_iterative(chain, target, &seed, &opts.ik)?;
            if let Some(violation) = chain.first_violation(&sol.joints) {
                return Err(violation);
            }
            Ok((sol.joints, sol.residual))
        }
    }
}

/// Image points → board (linear map) → arm (calibration) → joints (IK, each
/// via point seeded by its predecessor). Fails on the first via point that
/// cannot be solved.
pub fn plan_trajectory(
    plan: &SketchPlan,
    board: &BoardRegion,
    calibrator: &dyn BoardToArm,
    chain: &KinematicChain,
    opts: &PlanOptions,
) -> Result<PlannedDrawing> {
    opts.ik.validate()?;
    if let Some(seed) = &opts.seed {
        if seed.len() != chain.dof() {
            return Err(Error::Input(format!(
                "seed has {} joints, chain has {}",
                seed.len(),
                chain.dof()
            )));
        }
    }
    let mut out = PlannedDrawing {
        trajectory: JointTrajectory {
            chain: chain.name().to_string(),
            strokes: Vec::with_capacity(plan.strokes.len()),
        },
        commanded: Vec::with_capacity(plan.point_count()),
    };
    if plan.point_count() == 0 {
        return Ok(out);
    }
    let bounds = plan
        .bounds
        .ok_or_else(|| Error::Input("plan has no usable image bounds (zero span)".into()))?;

    let last = plan.strokes.len() - 1;
    for (s, stroke) in plan.strokes.iter().enumerate() {
        let board_pts = image_to_board(stroke, &bounds, board)?;
        let mut waypoints = Vec::with_capacity(stroke.len() + 1);
        let mut prev: Option<JointVector> = None;
        for (i, bp) in board_pts.iter().enumerate() {
            let tag = |e: Error| Error::ViaPoint {
                stroke: s,
                index: i,
                source: Box::new(e),
            };
            let target = calibrator.board_to_arm(bp).map_err(tag)?;
            let (q, r) = solve_via_point(chain, &target, prev.as_ref(), opts).map_err(tag)?;
            waypoints.push(Waypoint {
                joints: q.clone(),
                pen: PenState::Down,
                residual: r,
            });
            out.commanded.push(target);
            prev = Some(q);
        }
        if s != last {
            if let Some(end) = waypoints.last() {
                let lift = Waypoint {
                    pen: PenState::Up,
                    ..end.clone()
                };
                waypoints.push(lift);
            }
        }
        out.trajectory.strokes.push(waypoints);
    }
    Ok(out)
}
