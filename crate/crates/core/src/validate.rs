//! Self-checks of a loaded model: loop closure, branch agreement, rate
//! coefficients, aggregation and force equilibrium over deterministic sample
//! sets.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::machine_inertia;
use crate::error::Result;
use crate::forces::{force_inputs, normal_forces};
use crate::model::PlatformModel;
use crate::spatial::MotionVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!(
                "{} {:<44} worst {:>10.3e}  tol {:>8.1e}  n {:>6}  {:.3}s\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.tolerance,
                c.samples,
                c.seconds
            );
        }
        s
    }
}

/// Radical inverse in `base`; deterministic, well-spread samples in [0, 1).
fn halton(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn sample(i: usize, dim: usize, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * halton(i + 1, PRIMES[dim % PRIMES.len()])
}

fn check(name: &str, samples: usize, tolerance: f64, start: Instant, worst: f64) -> Check {
    Check {
        name: name.into(),
        samples,
        worst,
        tolerance,
        passed: worst < tolerance,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn validate_model(model: &PlatformModel) -> Result<ValidationReport> {
    let g = &model.config.chain;
    let (lo, hi) = g.admissible_stroke();
    let mut checks = Vec::new();

    let start = Instant::now();
    let n = 10_000;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        worst = worst.max(g.inner_angles(x)?.closure_residual().abs());
    }
    checks.push(check("loop closure |q+q1+q2+pi|", n, 1e-12, start, worst));

    let start = Instant::now();
    let n = 1000;
    let (mut pose, mut twist, mut accel): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let s = g.state(sample(i, 0, lo, hi), sample(i, 1, -0.2, 0.2), sample(i, 2, -1.0, 1.0))?;
        let nu = MotionVector::from_array(std::array::from_fn(|k| sample(i, 3 + k, -1.0, 1.0)));
        let nu_dot = MotionVector::from_array(std::array::from_fn(|k| sample(i, 9 + k, -2.0, 2.0)));
        for frames in &model.chains {
            let p = frames.poses(&s);
            pose = pose.max(p.tc.max_abs_diff(&p.tc_via_b1));
            let v = frames.twists(&s, &nu);
            twist = twist.max((v.tc - v.tc_via_b1).max_abs());
            let a = frames.accels(&s, &nu, &nu_dot);
            accel = accel.max((a.tc - a.tc_via_b1).max_abs());
        }
    }
    checks.push(check("branch agreement: pose", n, 1e-10, start, pose));
    checks.push(check("branch agreement: twist", n, 1e-10, start, twist));
    checks.push(check("branch agreement: acceleration", n, 1e-8, start, accel));

    let start = Instant::now();
    let n = 200;
    let (mut sum, mut fd): (f64, f64) = (0.0, 0.0);
    let h = 1e-6;
    for i in 0..n {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let r = g.rate_coefficients(x, 0.1)?;
        sum = sum.max((r.k[0] + r.k[1] + r.k[2]).abs());
        let (a, b) = (g.state(x - h, 0.0, 0.0)?, g.state(x + h, 0.0, 0.0)?);
        for j in 0..3 {
            let diff = (b.theta[j] - a.theta[j]) / (2.0 * h);
            fd = fd.max((diff - r.k[j]).abs() / r.k[j].abs().max(1e-3));
        }
    }
    checks.push(check("rate coefficients sum to zero", n, 1e-12, start, sum));
    checks.push(check("rate coefficients vs differences (rel)", n, 1e-6, start, fd));

    let start = Instant::now();
    let n = 200;
    let total = model.total_mass(None);
    let [s_lo, s_hi] = model.config.stroke;
    let (mut mass, mut sym, mut psd): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut state = model.nominal_state()?;
    for i in 0..n {
        state.x = [sample(i, 0, s_lo, s_hi), sample(i, 1, s_lo, s_hi)];
        for (j, q) in state.q_arm.iter_mut().enumerate() {
            *q = sample(i, 2 + j, -3.0, 3.0);
        }
        model.settle(&mut state)?;
        let kin = model.kinematics(&state)?;
        let agg = machine_inertia(model, &kin)?;
        mass = mass.max(((agg.mass() - total) / total).abs());
        let m = &agg.m_c.0;
        sym = sym.max((m - m.transpose()).abs().max() / m.abs().max());
        let eig = m.symmetric_eigen().eigenvalues.min();
        psd = psd.max((-eig / m.abs().max()).max(0.0));
    }
    checks.push(check("aggregate mass invariant (rel)", n, 1e-12, start, mass));
    checks.push(check("aggregate inertia symmetric (rel)", n, 1e-12, start, sym));
    checks.push(check("aggregate inertia PSD (rel neg. eigenvalue)", n, 1e-12, start, psd));

    let start = Instant::now();
    let n = 1000;
    let mut residual: f64 = 0.0;
    let mut state = model.nominal_state()?;
    for i in 0..n {
        state.x = [sample(i, 0, s_lo, s_hi); 2];
        state.xd = [sample(i, 1, -0.1, 0.1); 2];
        state.xdd = [sample(i, 2, -0.5, 0.5); 2];
        for j in 0..state.q_arm.len() {
            state.q_arm[j] = sample(i, 3 + j, -3.0, 3.0);
            state.qd_arm[j] = sample(i, 10 + (j % 6), -1.0, 1.0);
            state.qdd_arm[j] = sample(i, 4 + j, -2.0, 2.0);
        }
        state.qd_w =
            [sample(i, 12, -1.0, 1.0), sample(i, 13, -1.0, 1.0), sample(i, 12, -1.0, 1.0), sample(i, 13, -1.0, 1.0)];
        model.settle(&mut state)?;
        let kin = model.kinematics(&state)?;
        let whole = machine_inertia(model, &kin)?;
        let inputs = force_inputs(model, &kin, &whole)?;
        let f = normal_forces(&inputs)?;
        residual = residual.max(inputs.residual(&f));
    }
    checks.push(check("normal-force equilibrium residual [N]", n, 1e-8, start, residual));

    Ok(ValidationReport { model: model.config.name.clone(), checks })
}
