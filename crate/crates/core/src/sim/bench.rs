//! Wall-clock timing of the core operations.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::machine_inertia;
use crate::error::Result;
use crate::kinematics::BodyGroup;
use crate::model::{PlatformModel, PlatformState};
use crate::pipeline::evaluate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub operation: String,
    pub calls: usize,
    pub mean_us: f64,
    /// Spread of the per-batch means.
    pub stddev_us: f64,
    /// Target timing of the same operation, for orientation.
    pub reference_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, operation: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.operation == operation)
    }

    pub fn table(&self) -> String {
        let mut s =
            format!("{:<34} {:>9} {:>11} {:>11} {:>11}\n", "operation", "calls", "mean [us]", "std [us]", "ref [us]");
        for r in &self.rows {
            s += &format!(
                "{:<34} {:>9} {:>11.3} {:>11.3} {:>11.2}\n",
                r.operation, r.calls, r.mean_us, r.stddev_us, r.reference_us
            );
        }
        s
    }
}

pub const FORWARD_KINEMATICS: &str = "forward kinematics (all frames)";
pub const MANIPULATOR_WRENCH: &str = "manipulator wrench F_m";
pub const INVERSE_DYNAMICS: &str = "inverse dynamics pass";
pub const INERTIA_EXTRACTION: &str = "inertial parameter extraction";
pub const NORMAL_FORCES: &str = "normal forces (full pipeline)";

fn time(name: &str, reference_us: f64, calls: usize, mut op: impl FnMut()) -> BenchRow {
    let batches = 100.min(calls).max(1);
    let per = calls.div_ceil(batches);
    for _ in 0..per.min(1000) {
        op();
    }
    let mut means = Vec::with_capacity(batches);
    for _ in 0..batches {
        let start = Instant::now();
        for _ in 0..per {
            op();
        }
        means.push(start.elapsed().as_secs_f64() * 1e6 / per as f64);
    }
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (batches.max(2) - 1) as f64;
    BenchRow { operation: name.into(), calls: per * batches, mean_us: mean, stddev_us: var.sqrt(), reference_us }
}

/// A representative moving state: arm posed and moving, wheels turning,
/// suspension mid-stroke and accelerating.
pub fn bench_state(model: &PlatformModel) -> Result<PlatformState> {
    let mut s = model.nominal_state()?;
    for (j, q) in s.q_arm.iter_mut().enumerate() {
        *q = 0.3 + 0.1 * j as f64;
    }
    s.qd_arm.iter_mut().for_each(|v| *v = 0.5);
    s.qdd_arm.iter_mut().for_each(|v| *v = -0.2);
    s.qd_w = [0.6, 0.3, 0.6, 0.3];
    s.xd = [0.02, -0.01];
    s.xdd = [0.1, 0.05];
    model.settle(&mut s)?;
    Ok(s)
}

/// Times the five core operations with at least `calls` calls each.
pub fn benchmark(model: &PlatformModel, calls: usize) -> Result<BenchReport> {
    let s = bench_state(model)?;
    let kin = model.kinematics(&s)?;
    evaluate(model, &s)?;
    let m = model.frames.m;
    let rows = vec![
        time(FORWARD_KINEMATICS, 0.47, calls, || {
            black_box(model.forward_kinematics(black_box(&s)).ok());
        }),
        time(MANIPULATOR_WRENCH, 2.7, calls, || {
            black_box(model.tree.total_wrench_at(black_box(&kin), m, Some(BodyGroup::Manipulator)));
        }),
        time(INVERSE_DYNAMICS, 2.8, calls, || {
            black_box(model.tree.inverse_dynamics(black_box(&kin)));
        }),
        time(INERTIA_EXTRACTION, 5.2, calls, || {
            black_box(machine_inertia(model, black_box(&kin)).ok());
        }),
        time(NORMAL_FORCES, 10.0, calls, || {
            black_box(evaluate(model, black_box(&s)).ok());
        }),
    ];
    Ok(BenchReport { rows })
}
