use nalgebra::{DMatrix, DVector, SMatrix, SVector, Vector4};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::{pearson_r, ArmPoint, BoardPoint};

pub const HIDDEN: usize = 10;
pub const IO: usize = 4;
/// `w1` (10×4) + `b1` (10) + `w2` (4×10) + `b2` (4).
pub const PARAMS: usize = HIDDEN * IO + HIDDEN + IO * HIDDEN + IO;

const MU_MAX: f64 = 1e10;

/// A 4-10-4 network: sigmoid hidden layer, linear output layer, on
/// homogeneous `(x, y, z, 1)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpCalibrator {
    pub w1: SMatrix<f64, HIDDEN, IO>,
    pub b1: SVector<f64, HIDDEN>,
    pub w2: SMatrix<f64, IO, HIDDEN>,
    pub b2: SVector<f64, IO>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpJson {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub seed: u64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn homogeneous(p: &BoardPoint) -> Vector4<f64> {
    Vector4::new(p.x, p.y, p.z, 1.0)
}

impl MlpCalibrator {
    /// Weights drawn from uniform(−0.5, 0.5) with a seeded generator.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..PARAMS).map(|_| rng.random_range(-0.5..0.5)).collect();
        Self::from_params(&params, seed)
    }

    /// Flat parameter vector in the order `w1` (row-major), `b1`, `w2`
    /// (row-major), `b2`.
    pub fn params(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(PARAMS);
        for r in 0..HIDDEN {
            out.extend(self.w1.row(r).iter());
        }
        out.extend(self.b1.iter());
        for r in 0..IO {
            out.extend(self.w2.row(r).iter());
        }
        out.extend(self.b2.iter());
        DVector::from_vec(out)
    }

    pub fn from_params(p: &[f64], seed: u64) -> Self {
        assert_eq!(p.len(), PARAMS, "parameter vector length");
        let mut i = 0;
        let mut next = || {
            i += 1;
            p[i - 1]
        };
        let w1 = SMatrix::<f64, HIDDEN, IO>::from_row_iterator((0..HIDDEN * IO).map(|_| next()));
        let b1 = SVector::<f64, HIDDEN>::from_iterator((0..HIDDEN).map(|_| next()));
        let w2 = SMatrix::<f64, IO, HIDDEN>::from_row_iterator((0..IO * HIDDEN).map(|_| next()));
        let b2 = SVector::<f64, IO>::from_iterator((0..IO).map(|_| next()));
        Self { w1, b1, w2, b2, seed }
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }

    fn hidden(&self, x: &Vector4<f64>) -> SVector<f64, HIDDEN> {
        (self.w1 * x + self.b1).map(sigmoid)
    }

    /// Full 4-component network output.
    pub fn forward(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.w2 * self.hidden(x) + self.b2
    }

    /// Rows of `∂y/∂w` for one sample: a 4 × PARAMS block.
    pub fn output_jacobian(&self, x: &Vector4<f64>) -> SMatrix<f64, IO, PARAMS> {
        let h = self.hidden(x);
        let mut jac = SMatrix::<f64, IO, PARAMS>::zeros();
        let off_b1 = HIDDEN * IO;
        let off_w2 = off_b1 + HIDDEN;
        let off_b2 = off_w2 + IO * HIDDEN;
        for k in 0..IO {
            for j in 0..HIDDEN {
                let g = self.w2[(k, j)] * h[j] * (1.0 - h[j]);
                for i in 0..IO {
                    jac[(k, j * IO + i)] = g * x[i];
                }
                jac[(k, off_b1 + j)] = g;
                jac[(k, off_w2 + k * HIDDEN + j)] = h[j];
            }
            jac[(k, off_b2 + k)] = 1.0;
        }
        jac
    }

    pub fn to_json(&self) -> MlpJson {
        MlpJson {
            w1: self.w1.row_iter().map(|r| r.iter().copied().collect()).collect(),
            b1: self.b1.iter().copied().collect(),
            w2: self.w2.row_iter().map(|r| r.iter().copied().collect()).collect(),
            b2: self.b2.iter().copied().collect(),
            seed: self.seed,
        }
    }

    pub fn from_json(j: &MlpJson) -> Result<Self> {
        let shape_ok = j.w1.len() == HIDDEN
            && j.w1.iter().all(|r| r.len() == IO)
            && j.b1.len() == HIDDEN
            && j.w2.len() == IO
            && j.w2.iter().all(|r| r.len() == HIDDEN)
            && j.b2.len() == IO;
        if !shape_ok {
            return Err(Error::Input("network weights must have 4-10-4 shape".into()));
        }
        let flat: Vec<f64> =
            j.w1.iter()
                .flatten()
                .chain(&j.b1)
                .chain(j.w2.iter().flatten())
                .chain(&j.b2)
                .copied()
                .collect();
        let m = Self::from_params(&flat, j.seed);
        if !m.is_finite() {
            return Err(Error::Input("network weights must be finite".into()));
        }
        Ok(m)
    }
}

/// Feed-forward prediction; the homogeneous fourth output is discarded.
pub fn mlp_predict(m: &MlpCalibrator, p: &BoardPoint) -> ArmPoint {
    let y = m.forward(&homogeneous(p));
    ArmPoint::new(y[0], y[1], y[2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub mu_init: f64,
    pub mu_factor: f64,
    pub stop_mse: f64,
    pub max_epochs: usize,
    /// (train, validation, test) fractions.
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            mu_init: 0.001,
            mu_factor: 10.0,
            stop_mse: 1e-5,
            max_epochs: 500,
            split: [0.70, 0.15, 0.15],
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_init > 0.0 && self.mu_init.is_finite()) {
            return Err(Error::Input(format!("mu_init must be positive, got {}", self.mu_init)));
        }
        if !(self.mu_factor > 1.0 && self.mu_factor.is_finite()) {
            return Err(Error::Input(format!("mu_factor must exceed 1, got {}", self.mu_factor)));
        }
        if !(self.stop_mse >= 0.0 && self.stop_mse.is_finite()) {
            return Err(Error::Input(format!(
                "stop_mse must be non-negative, got {}",
                self.stop_mse
            )));
        }
        if self.split.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::Input("split fractions must be positive".into()));
        }
        let sum: f64 = self.split.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("split fractions must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Epoch 0 is the initial network; later entries are accepted steps.
    pub epochs: Vec<EpochRecord>,
    /// Correlation between all predicted and target coordinates.
    pub pearson_r: Option<f64>,
    pub stop_reason: String,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// One damped Gauss–Newton step `(JᵀJ + μI)⁻¹ Jᵀ e`, where `J = ∂e/∂w`.
/// Returns `None` if the damped system is not positive definite.
pub fn lm_step(jac: &DMatrix<f64>, err: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let n = jac.ncols();
    let jtj = jac.transpose() * jac + DMatrix::identity(n, n) * mu;
    let jte = jac.transpose() * err;
    jtj.cholesky().map(|c| c.solve(&jte))
}

struct Samples {
    x: Vec<Vector4<f64>>,
    t: Vec<Vector4<f64>>,
}

impl Samples {
    fn gather(cs: &CorrespondenceSet, idx: &[usize]) -> Self {
        let pairs = cs.pairs();
        Self {
            x: idx.iter().map(|&i| homogeneous(&pairs[i].0)).collect(),
            t: idx
                .iter()
                .map(|&i| {
                    let a = pairs[i].1;
                    Vector4::new(a.x, a.y, a.z, 1.0)
                })
                .collect(),
        }
    }

    fn mse(&self, m: &MlpCalibrator) -> Option<f64> {
        if self.x.is_empty() {
            return None;
        }
        let sse: f64 = self
            .x
            .iter()
            .zip(&self.t)
            .map(|(x, t)| (t - m.forward(x)).norm_squared())
            .sum();
        Some(sse / (IO * self.x.len()) as f64)
    }

    /// Stacked errors `e = t − y` and their Jacobian w.r.t. the weights.
    fn residuals(&self, m: &MlpCalibrator) -> (DMatrix<f64>, DVector<f64>) {
        let rows = IO * self.x.len();
        let mut jac = DMatrix::zeros(rows, PARAMS);
        let mut err = DVector::zeros(rows);
        for (s, (x, t)) in self.x.iter().zip(&self.t).enumerate() {
            let e = t - m.forward(x);
            let dy = m.output_jacobian(x);
            for k in 0..IO {
                err[s * IO + k] = e[k];
                for p in 0..PARAMS {
                    jac[(s * IO + k, p)] = -dy[(k, p)];
                }
            }
        }
        (jac, err)
    }
}

fn split_counts(n: usize, split: &[f64; 3]) -> (usize, usize) {
    let train = ((n as f64 * split[0]).round() as usize).clamp(1, n);
    let val = ((n as f64 * split[1]).round() as usize).min(n - train);
    (train, val)
}

/// Levenberg–Marquardt training from seeded uniform(−0.5, 0.5) weights.
pub fn train_mlp_calibrator(cs: &CorrespondenceSet, cfg: &TrainingConfig) -> Result<(MlpCalibrator, TrainingTrace)> {
    cfg.validate()?;
    let n = cs.len();
    if n < 10 {
        return Err(Error::InsufficientData { needed: 10, got: n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (n_train, n_val) = split_counts(n, &cfg.split);
    let mut trace = TrainingTrace {
        train_indices: order[..n_train].to_vec(),
        validation_indices: order[n_train..n_train + n_val].to_vec(),
        test_indices: order[n_train + n_val..].to_vec(),
        ..Default::default()
    };
    trace.train_indices.sort_unstable();
    trace.validation_indices.sort_unstable();
    trace.test_indices.sort_unstable();
    let train = Samples::gather(cs, &trace.train_indices);
    let val = Samples::gather(cs, &trace.validation_indices);
    let test = Samples::gather(cs, &trace.test_indices);

    let mut net = MlpCalibrator::random(cfg.seed);
    let mut mu = cfg.mu_init;
    let mut loss = train.mse(&net).expect("training set is non-empty");
    let record = |epoch: usize, loss: f64, net: &MlpCalibrator, mu: f64| EpochRecord {
        epoch,
        train_mse: loss,
        validation_mse: val.mse(net),
        test_mse: test.mse(net),
        mu,
    };
    trace.epochs.push(record(0, loss, &net, mu));
    if !loss.is_finite() {
        trace.stop_reason = "non-finite loss".into();
        return Err(Error::TrainingFailure {
            epoch: 0,
            trace: Box::new(trace),
        });
    }

    let mut stop = "max epochs";
    'epochs: for epoch in 1..=cfg.max_epochs {
        if loss < cfg.stop_mse {
            stop = "goal met";
            break;
        }
        let (jac, err) = train.residuals(&net);
        let w = net.params();
        loop {
            if mu > MU_MAX {
                stop = "mu exceeded maximum";
                break 'epochs;
            }
            let Some(delta) = lm_step(&jac, &err, mu) else {
                mu *= cfg.mu_factor;
                continue;
            };
            let candidate = MlpCalibrator::from_params((&w - &delta).as_slice(), cfg.seed);
            let new_loss = train.mse(&candidate).unwrap_or(f64::NAN);
            if !new_loss.is_finite() {
                trace.stop_reason = "non-finite loss".into();
                return Err(Error::TrainingFailure {
                    epoch,
                    trace: Box::new(trace),
                });
            }
            if new_loss < loss {
                mu /= cfg.mu_factor;
                net = candidate;
                loss = new_loss;
                trace.epochs.push(record(epoch, loss, &net, mu));
                break;
            }
            mu *= cfg.mu_factor;
        }
    }
    if loss < cfg.stop_mse {
        stop = "goal met";
    }
    trace.stop_reason = stop.into();

    let (mut pred, mut target) = (Vec::with_capacity(3 * n), Vec::with_capacity(3 * n));
    for (b, a) in cs.pairs() {
        let p = mlp_predict(&net, b);
        pred.extend([p.x, p.y, p.z]);
        target.extend([a.x, a.y, a.z]);
    }
    trace.pearson_r = pearson_r(&target, &pred).ok();
    Ok((net, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_transform, HomogeneousTransform};
    use nalgebra::{Matrix4, Vector3};

    fn affine_set(n: usize, seed: u64) -> CorrespondenceSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix4::new(
            0.9, -0.3, 0.1, 0.05, //
            0.2, 1.1, 0.0, -0.02, //
            0.0, 0.1, 0.8, 0.1, //
            0.0, 0.0, 0.0, 1.0,
        );
        let t = HomogeneousTransform::rigid(m).unwrap();
        CorrespondenceSet::new(
            (0..n)
                .map(|_| {
                    let b = BoardPoint::new(
                        rng.random_range(0.20..0.35),
                        rng.random_range(0.05..0.20),
                        rng.random_range(-0.02..0.02),
                    );
                    (b, ArmPoint::from(apply_transform(&t, &b.to_vector()).unwrap()))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn param_layout_round_trip() {
        let m = MlpCalibrator::random(5);
        assert_eq!(PARAMS, 94);
        let back = MlpCalibrator::from_params(m.params().as_slice(), 5);
        assert_eq!(back, m);
        assert_eq!(m.params()[1], m.w1[(0, 1)]);
        assert_eq!(m.params()[40], m.b1[0]);
        assert_eq!(m.params()[50 + 11], m.w2[(1, 1)]);
        assert_eq!(m.params()[93], m.b2[3]);
    }

    #[test]
    fn init_in_range() {
        let m = MlpCalibrator::random(99);
        assert!(m.params().iter().all(|v| (-0.5..0.5).contains(v)));
    }

    #[test]
    fn hand_computed_forward() {
        let mut p = vec![0.0; PARAMS];
        // hidden unit 0 sees x only; output 0 = 2·h0 + 0.5
        p[0] = 1.0;
        p[50] = 2.0;
        p[90] = 0.5;
        let m = MlpCalibrator::from_params(&p, 0);
        let y = m.forward(&Vector4::new(0.3, 0.0, 0.0, 1.0));
        let h0 = 1.0 / (1.0 + (-0.3f64).exp());
        assert!((y[0] - (2.0 * h0 + 0.5)).abs() < 1e-15);
        assert_eq!(y[3], 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..5 {
            let m = MlpCalibrator::random(seed);
            let x = Vector4::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                1.0,
            );
            let analytic = m.output_jacobian(&x);
            let w = m.params();
            let h = 1e-6;
            for p in 0..PARAMS {
                let mut wp = w.clone();
                wp[p] += h;
                let mut wm = w.clone();
                wm[p] -= h;
                let fd = (MlpCalibrator::from_params(wp.as_slice(), 0).forward(&x)
                    - MlpCalibrator::from_params(wm.as_slice(), 0).forward(&x))
                    / (2.0 * h);
                let a = analytic.column(p);
                let scale = a.norm().max(1e-8);
                assert!((fd - a).norm() / scale < 1e-5, "param {p}");
            }
        }
    }

    #[test]
    fn lm_step_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let jac = DMatrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        let err = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        let gn = (jac.transpose() * &jac).try_inverse().unwrap() * jac.transpose() * &err;
        let step0 = lm_step(&jac, &err, 0.0).unwrap();
        assert!((step0 - &gn).norm() < 1e-9);
        let big = lm_step(&jac, &err, 1e12).unwrap();
        assert!(big.norm() < 1e-10);
        let grad = jac.transpose() * &err;
        assert!((big * 1e12 - &grad).norm() / grad.norm() < 1e-6);
    }

    #[test]
    fn trains_affine_map() {
        let cs = affine_set(60, 3);
        let cfg = TrainingConfig {
            max_epochs: 200,
            ..Default::default()
        };
        let (net, trace) = train_mlp_calibrator(&cs, &cfg).unwrap();
        let last = trace.epochs.last().unwrap();
        assert!(last.validation_mse.unwrap() < 1e-3);
        assert!(last.epoch <= 200);
        assert!(trace.epochs.windows(2).all(|w| w[1].train_mse <= w[0].train_mse));
        assert!(net.is_finite());
        assert!(trace.pearson_r.unwrap() > 0.99);
        assert_eq!(
            trace.train_indices.len() + trace.validation_indices.len() + trace.test_indices.len(),
            60
        );
    }

    #[test]
    fn identity_data_predicts_held_out_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<_> = (0..40)
            .map(|_| {
                let v = Vector3::new(
                    rng.random_range(0.2..0.35),
                    rng.random_range(0.05..0.2),
                    rng.random_range(-0.02..0.02),
                );
                (BoardPoint::from(v), ArmPoint::from(v))
            })
            .collect();
        let (train, held): (Vec<_>, Vec<_>) = pts.iter().enumerate().partition(|(i, _)| i % 3 != 2);
        let cs = CorrespondenceSet::new(train.into_iter().map(|(_, p)| *p).collect()).unwrap();
        let (net, _) = train_mlp_calibrator(&cs, &TrainingConfig::default()).unwrap();
        for (_, (b, a)) in held {
            let p = mlp_predict(&net, b);
            assert!((p.to_vector() - a.to_vector()).norm() < 1e-2);
        }
    }

    #[test]
    fn deterministic() {
        let cs = affine_set(30, 6);
        let cfg = TrainingConfig {
            max_epochs: 40,
            seed: 12,
            ..Default::default()
        };
        let (a, ta) = train_mlp_calibrator(&cs, &cfg).unwrap();
        let (b, tb) = train_mlp_calibrator(&cs, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn finite_output_for_extreme_inputs() {
        let m = MlpCalibrator::random(0);
        for v in [1e6, -1e6, 1e300, -1e300] {
            let p = mlp_predict(&m, &BoardPoint::new(v, -v, v));
            assert!(p.is_finite());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cs = affine_set(9, 0);
        assert!(matches!(
            train_mlp_calibrator(&cs, &TrainingConfig::default()),
            Err(Error::InsufficientData { needed: 10, got: 9 })
        ));
        let cs = affine_set(20, 0);
        let bad = TrainingConfig {
            split: [0.75, 0.15, 0.15],
            ..Default::default()
        };
        assert!(train_mlp_calibrator(&cs, &bad).is_err());
        let bad = TrainingConfig {
            mu_factor: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let mut cs_pairs = affine_set(12, 0).pairs().to_vec();
        cs_pairs[0].1 = ArmPoint::new(1e300, 1e300, 1e300);
        let cs = CorrespondenceSet::new(cs_pairs).unwrap();
        let cfg = TrainingConfig {
            split: [0.9, 0.05, 0.05],
            ..Default::default()
        };
        match train_mlp_calibrator(&cs, &cfg) {
            Err(Error::TrainingFailure { trace, .. }) => assert!(!trace.epochs.is_empty()),
            other => panic!("expected training failure, got {other:?}"),
        }
    }

    #[test]
    fn json_shape_checked() {
        let mut j = MlpCalibrator::random(1).to_json();
        j.b2.pop();
        assert!(MlpCalibrator::from_json(&j).is_err());
    }
}
