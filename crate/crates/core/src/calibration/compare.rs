use std::time::Instant;

use nalgebra::Vector3;

use super::{
    estimate_four_point, estimate_normalized_matrix, train_mlp_calibrator, BoardToArm, Calibration, CorrespondenceSet,
    TrainingConfig, TrainingTrace,
};
use crate::error::{Error, Result};
use crate::geometry::{axis_error_stats, AxisErrorStats};

pub const METHODS: [&str; 3] = ["four-point", "matrix", "mlp"];

#[derive(Debug, Clone)]
pub struct MethodReport {
    pub method: &'static str,
    pub calibration: Calibration,
    pub stats: AxisErrorStats,
    pub fit_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub methods: Vec<MethodReport>,
    pub mlp_trace: Option<TrainingTrace>,
}

impl CalibrationReport {
    pub fn get(&self, method: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Full-set prediction error of a fitted calibration.
pub fn evaluate_calibration(cal: &impl BoardToArm, cs: &CorrespondenceSet) -> Result<AxisErrorStats> {
    let predicted: Vec<Vector3<f64>> = cs
        .pairs()
        .iter()
        .map(|(b, _)| cal.board_to_arm(b).map(|p| p.to_vector()))
        .collect::<Result<_>>()?;
    axis_error_stats(&cs.arm_vectors(), &predicted)
}

fn tag<T>(method: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Estimator {
        method,
        source: Box::new(e),
    })
}

/// Fits the four-point, normalized-matrix and MLP calibrators on the same
/// data and scores each on the full set.
pub fn compare_calibrators(cs: &CorrespondenceSet, cfg: &TrainingConfig) -> Result<CalibrationReport> {
    compare_calibrators_with(cs, cfg, 1)
}

/// As [`compare_calibrators`], but each fit is repeated `timing_repeats`
/// times and the fastest wall time is reported. Fits are deterministic, so
/// the repeats only affect the timings.
pub fn compare_calibrators_with(
    cs: &CorrespondenceSet,
    cfg: &TrainingConfig,
    timing_repeats: usize,
) -> Result<CalibrationReport> {
    let repeats = timing_repeats.max(1);
    let (fp, fp_time) = timed(repeats, || tag(METHODS[0], estimate_four_point(cs)))?;
    let (nm, nm_time) = timed(repeats, || tag(METHODS[1], estimate_normalized_matrix(cs)))?;
    let ((net, trace), mlp_time) = timed(repeats, || tag(METHODS[2], train_mlp_calibrator(cs, cfg)))?;

    let mut methods = Vec::with_capacity(3);
    for (method, cal, secs) in [
        (METHODS[0], Calibration::Transform(fp), fp_time),
        (METHODS[1], Calibration::Transform(nm), nm_time),
        (METHODS[2], Calibration::Mlp(net), mlp_time),
    ] {
        let stats = tag(method, evaluate_calibration(&cal, cs))?;
        methods.push(MethodReport {
            method,
            calibration: cal,
            stats,
            fit_seconds: secs,
        });
    }
    Ok(CalibrationReport {
        methods,
        mlp_trace: Some(trace),
    })
}

fn timed<T>(repeats: usize, mut fit: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let r = fit()?;
        best = best.min(start.elapsed().as_secs_f64());
        out.get_or_insert(r);
    }
    Ok((out.expect("at least one repeat"), best))
}
