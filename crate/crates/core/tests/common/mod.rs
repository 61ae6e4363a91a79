#![allow(dead_code)]

use std::f64::consts::PI;

use armsketch::calibration::{BoardRegion, CorrespondenceSet, ImageBounds};
use armsketch::geometry::{apply_transform, ArmPoint, BoardPoint, HomogeneousTransform, ImagePoint};
use armsketch::kinematics::{KinematicChain, NAO_FOREARM_3DOF as L2, NAO_UPPER_ARM as L1};
use armsketch::sketch::{order_strokes, SketchPlan};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn random_in_limits(chain: &KinematicChain, rng: &mut impl Rng) -> Vec<f64> {
    chain
        .joint_limits()
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..=hi))
        .collect()
}

/// Hand-derived position of the shoulder-pitch / shoulder-roll / elbow-roll
/// arm.
pub fn closed_position(q: &[f64]) -> Vector3<f64> {
    let (s1, c1) = q[0].sin_cos();
    let (s2, c2) = q[1].sin_cos();
    let (s3, c3) = q[2].sin_cos();
    let k = L1 + L2 * c3;
    let rho = k * c2 - L2 * s2 * s3;
    Vector3::new(c1 * rho, s1 * rho, -k * s2 - L2 * c2 * s3)
}

/// Partial derivatives of [`closed_position`], differentiated by hand.
pub fn analytic_jacobian(q: &[f64]) -> Matrix3<f64> {
    let (s1, c1) = q[0].sin_cos();
    let (s2, c2) = q[1].sin_cos();
    let (s3, c3) = q[2].sin_cos();
    let k = L1 + L2 * c3;
    let rho = k * c2 - L2 * s2 * s3;
    let drho_d2 = -k * s2 - L2 * c2 * s3;
    let drho_d3 = -L2 * s3 * c2 - L2 * s2 * c3;
    Matrix3::new(
        -s1 * rho,
        c1 * drho_d2,
        c1 * drho_d3,
        c1 * rho,
        s1 * drho_d2,
        s1 * drho_d3,
        0.0,
        -k * c2 + L2 * s2 * s3,
        L2 * s3 * s2 - L2 * c2 * c3,
    )
}

pub fn random_rigid(rng: &mut impl Rng) -> HomogeneousTransform {
    HomogeneousTransform::from_euler_xyz(
        rng.random_range(-PI..PI),
        rng.random_range(-PI / 2.0..PI / 2.0),
        rng.random_range(-PI..PI),
        Vector3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        ),
    )
}

pub fn board_points(rng: &mut impl Rng, n: usize, z_spread: f64) -> Vec<BoardPoint> {
    (0..n)
        .map(|_| {
            let z = if z_spread > 0.0 {
                rng.random_range(-z_spread..z_spread)
            } else {
                0.0
            };
            BoardPoint::new(rng.random_range(0.20..0.35), rng.random_range(0.05..0.20), z)
        })
        .collect()
}

/// Pairs `(b, T·b + noise)` with isotropic Gaussian noise of standard
/// deviation `sigma` on the arm points.
pub fn pairs_through(
    t: &HomogeneousTransform,
    board: &[BoardPoint],
    sigma: f64,
    rng: &mut impl Rng,
) -> CorrespondenceSet {
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    CorrespondenceSet::new(
        board
            .iter()
            .map(|b| {
                let mut a = apply_transform(t, &b.to_vector()).unwrap();
                if sigma > 0.0 {
                    a += Vector3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng));
                }
                (*b, ArmPoint::from(a))
            })
            .collect(),
    )
    .unwrap()
}

pub fn projection_mse(t: &HomogeneousTransform, cs: &CorrespondenceSet) -> f64 {
    cs.pairs()
        .iter()
        .map(|(b, a)| (apply_transform(t, &b.to_vector()).unwrap() - a.to_vector()).norm_squared())
        .sum::<f64>()
        / cs.len() as f64
}

/// Board region and the true board→arm transform of the drawing scenes.
/// The board rectangle lands on the arm-frame plane z = −0.05 m, inside the
/// reachable workspace of the 3-DOF arm.
pub fn drawing_scene() -> (BoardRegion, HomogeneousTransform) {
    let board = BoardRegion::new(0.10, 0.13, 0.20, 0.24, 0.0).unwrap();
    let truth = HomogeneousTransform::from_euler_xyz(0.0, 0.0, PI / 2.0, Vector3::new(0.40, -0.13, -0.05));
    (board, truth)
}

/// A 200-point square outline and a 200-point circle, as image points.
pub fn square_and_circle() -> Vec<ImagePoint> {
    let mut pts = Vec::with_capacity(400);
    for i in 0..50 {
        let t = 2.0 * i as f64;
        pts.push(ImagePoint::new(10.0 + t, 10.0));
        pts.push(ImagePoint::new(110.0, 10.0 + t));
        pts.push(ImagePoint::new(110.0 - t, 110.0));
        pts.push(ImagePoint::new(10.0, 110.0 - t));
    }
    for i in 0..200 {
        let a = 2.0 * PI * i as f64 / 200.0;
        pts.push(ImagePoint::new(190.0 + 40.0 * a.cos(), 60.0 + 40.0 * a.sin()));
    }
    pts
}

pub fn square_and_circle_plan() -> SketchPlan {
    let mut plan = order_strokes(&square_and_circle(), 2.5).unwrap();
    plan.bounds = Some(ImageBounds::new(0.0, 240.0, 0.0, 120.0).unwrap());
    plan
}

/// `n` random points spread over a board region.
pub fn board_points_in(board: &BoardRegion, rng: &mut impl Rng, n: usize) -> Vec<BoardPoint> {
    (0..n)
        .map(|_| {
            BoardPoint::new(
                rng.random_range(board.x_min..=board.x_max),
                rng.random_range(board.y_min..=board.y_max),
                board.z_plane,
            )
        })
        .collect()
}
