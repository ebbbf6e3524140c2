//! Fixed-step scenario runner: commands, suspension decision, optional
//! hydraulic tracking, mechanics and per-step metrics.

pub mod bench;
pub mod output;
pub mod scenario;

pub use output::{write_csv, write_summary, CSV_COLUMNS};
pub use scenario::{
    commands, ArmCommand, CommandSample, CommandSpec, HydraulicSpec, OutputSpec, Scenario, SuspensionMode,
    SuspensionSpec,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{aggregate_inertia, com_sensitivity};
use crate::error::{Error, Result};
use crate::hydraulics::{AxisLoad, ServoAxis};
use crate::kinematics::BodyGroup;
use crate::model::{PlatformModel, PlatformState};
use crate::optimizer::{ActuatorState, PlatformStability, SolverStatus, StepProblem};
use crate::pipeline::evaluate_settled;
use crate::spatial::extract_inertia;

/// `Σ_{i<j} |f_i − f_j|`, six unordered pairs.
pub fn force_distribution_metric(f: &[f64; 4]) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            sum += (f[i] - f[j]).abs();
        }
    }
    sum
}

/// Hydraulic quantities of one actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRow {
    pub p_a: f64,
    pub p_b: f64,
    pub u: f64,
    pub f_p: f64,
}

impl AxisRow {
    const ABSENT: Self = Self { p_a: f64::NAN, p_b: f64::NAN, u: f64::NAN, f_p: f64::NAN };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub t: f64,
    pub forces: [f64; 4],
    pub metric: f64,
    pub com_x: f64,
    /// Actuator state used by the mechanics.
    pub actuator: ActuatorState,
    /// Reference handed to the actuators.
    pub x_ref: [f64; 2],
    pub axes: [AxisRow; 2],
    pub tracking_error: [f64; 2],
    pub liftoff: bool,
    /// Optimizer cost, `NaN` when the step was not optimized.
    pub cost: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimizerStats {
    pub calls: usize,
    pub converged: usize,
    pub stalled: usize,
    pub max_iterations: usize,
    pub restored: usize,
    pub mean_iterations: f64,
    pub max_kkt: f64,
    pub max_consistency: f64,
    pub max_bound_violation: f64,
    pub max_force_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HydraulicStats {
    pub effective_mass: [f64; 2],
    pub max_tracking_error: f64,
    /// Largest tracking error over the last 10 % of the run.
    pub final_tracking_error: f64,
    pub within_threshold: bool,
    pub clamp_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub mode: SuspensionMode,
    pub steps: usize,
    pub duration: f64,
    pub dt: f64,
    pub rms_metric: f64,
    pub mean_metric: f64,
    pub max_metric: f64,
    pub rms_com_x: f64,
    pub min_force: f64,
    pub liftoff_steps: usize,
    pub optimizer: OptimizerStats,
    pub hydraulics: Option<HydraulicStats>,
    pub wall_time_s: f64,
}

#[derive(Default)]
struct Accumulator {
    n: usize,
    sq_metric: f64,
    sum_metric: f64,
    max_metric: f64,
    sq_com: f64,
    min_force: f64,
    liftoff: usize,
    opt: OptimizerStats,
    iterations: usize,
    tracking: Vec<f64>,
}

impl Accumulator {
    fn add(&mut self, r: &MetricsRow) {
        if self.n == 0 {
            self.min_force = f64::INFINITY;
        }
        self.n += 1;
        self.sq_metric += r.metric * r.metric;
        self.sum_metric += r.metric;
        self.max_metric = self.max_metric.max(r.metric);
        self.sq_com += r.com_x * r.com_x;
        self.min_force = r.forces.iter().copied().fold(self.min_force, f64::min);
        self.liftoff += r.liftoff as usize;
        self.tracking.push(r.tracking_error[0].abs().max(r.tracking_error[1].abs()));
    }
}

/// A scenario in progress. `step` advances one `dt`.
pub struct Simulation<'m> {
    model: &'m PlatformModel,
    scenario: Scenario,
    state: PlatformState,
    plan: ActuatorState,
    axes: Option<[ServoAxis; 2]>,
    k: usize,
    acc: Accumulator,
}

impl<'m> Simulation<'m> {
    pub fn new(model: &'m PlatformModel, scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        if scenario.commands.arm.q_alpha.len() != model.arm_dof() {
            return Err(Error::DimensionMismatch {
                what: "arm command",
                expected: model.arm_dof(),
                got: scenario.commands.arm.q_alpha.len(),
            });
        }
        let cmd = commands(&scenario, 0.0);
        let plan = cmd.suspension.unwrap_or(ActuatorState { x: scenario.suspension.x_alpha, ..Default::default() });
        let mut state = model.nominal_state()?;
        apply_arm(&mut state, &cmd);
        state.set_suspension(plan.x, plan.xd, plan.xdd);
        model.settle(&mut state)?;
        let axes = match &scenario.hydraulics {
            None => None,
            Some(h) => Some(initial_axes(model, &state, h)?),
        };
        Ok(Self { model, scenario, state, plan, axes, k: 0, acc: Accumulator::default() })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &PlatformState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.scenario.dt
    }

    pub fn finished(&self) -> bool {
        self.k > self.scenario.steps()
    }

    /// Produces the row for the current time and advances the clock. The
    /// first call reports the initial state.
    pub fn step(&mut self) -> Result<MetricsRow> {
        let t = self.time();
        let row = self.advance(t).map_err(|e| Error::AtTime { time: t, source: Box::new(e) })?;
        self.acc.add(&row);
        self.k += 1;
        Ok(row)
    }

    fn advance(&mut self, t: f64) -> Result<MetricsRow> {
        let dt = self.scenario.dt;
        let cmd = commands(&self.scenario, t);
        if self.k > 0 {
            integrate_planar(&mut self.state, dt);
            for i in 0..4 {
                self.state.q_w[i] += dt * cmd.qd_w[i];
            }
        }
        apply_arm(&mut self.state, &cmd);

        let mut cost = f64::NAN;
        let mut iterations = 0;
        match cmd.suspension {
            Some(s) => self.plan = s,
            None if self.k > 0 => {
                let sol = self.optimize()?;
                cost = sol.0;
                iterations = sol.1;
            }
            None => {}
        }

        let x_ref = self.plan.x;
        let mut rows = [AxisRow::ABSENT; 2];
        let mut error = [0.0; 2];
        let actual = match self.axes.as_mut() {
            None => self.plan,
            Some(axes) => {
                if self.k > 0 {
                    let f_load = reflected_load(self.model, &self.state)?;
                    for (i, axis) in axes.iter_mut().enumerate() {
                        axis.step(x_ref[i], |_| f_load[i], dt)?;
                    }
                }
                for (i, axis) in axes.iter().enumerate() {
                    let h = axis.hydraulic;
                    rows[i] = AxisRow { p_a: h.p_a, p_b: h.p_b, u: h.u, f_p: axis.piston_force() };
                    error[i] = x_ref[i] - axis.x;
                }
                ActuatorState {
                    x: [axes[0].x, axes[1].x],
                    xd: [axes[0].xd, axes[1].xd],
                    xdd: [axes[0].xdd, axes[1].xdd],
                }
            }
        };

        self.state.set_suspension(actual.x, actual.xd, actual.xdd);
        let e = evaluate_settled(self.model, &self.state, self.scenario.inertia)?;
        self.model.settle(&mut self.state)?;
        Ok(MetricsRow {
            t,
            forces: e.forces.f,
            metric: force_distribution_metric(&e.forces.f),
            com_x: e.com_c().x,
            actuator: actual,
            x_ref,
            axes: rows,
            tracking_error: error,
            liftoff: e.forces.liftoff,
            cost,
            iterations,
        })
    }

    fn optimize(&mut self) -> Result<(f64, usize)> {
        let stab = PlatformStability { model: self.model, state: self.state.clone(), mode: self.scenario.inertia };
        let problem = StepProblem {
            current: self.plan,
            dt: self.scenario.dt,
            stroke: self.model.config.stroke,
            config: &self.scenario.optimizer,
        };
        let sol = problem.solve(&stab)?;
        let o = &mut self.acc.opt;
        o.calls += 1;
        match sol.status {
            SolverStatus::Converged => o.converged += 1,
            SolverStatus::Stalled => o.stalled += 1,
            SolverStatus::MaxIterations => o.max_iterations += 1,
        }
        o.restored += sol.restored as usize;
        o.max_kkt = o.max_kkt.max(sol.residuals.kkt);
        o.max_consistency = o.max_consistency.max(sol.residuals.consistency);
        o.max_bound_violation = o.max_bound_violation.max(sol.residuals.bounds);
        o.max_force_violation = o.max_force_violation.max(sol.residuals.force);
        self.acc.iterations += sol.iterations;
        self.plan = sol.next;
        Ok((sol.cost.total, sol.iterations))
    }

    pub fn summary(&self, wall_time_s: f64) -> RunSummary {
        let a = &self.acc;
        let n = a.n.max(1) as f64;
        let mut opt = a.opt;
        opt.mean_iterations = if opt.calls > 0 { a.iterations as f64 / opt.calls as f64 } else { 0.0 };
        let hydraulics = self.axes.as_ref().map(|axes| {
            let tail = a.tracking.len() - a.tracking.len() / 10;
            let final_err =
                a.tracking[tail.min(a.tracking.len().saturating_sub(1))..].iter().copied().fold(0.0, f64::max);
            let threshold = self.scenario.hydraulics.map_or(f64::INFINITY, |h| h.tracking_threshold);
            HydraulicStats {
                effective_mass: [axes[0].load.mass, axes[1].load.mass],
                max_tracking_error: a.tracking.iter().copied().fold(0.0, f64::max),
                final_tracking_error: final_err,
                within_threshold: final_err < threshold,
                clamp_events: axes[0].clamp_events + axes[1].clamp_events,
            }
        });
        RunSummary {
            name: self.scenario.name.clone(),
            mode: self.scenario.suspension.mode,
            steps: a.n,
            duration: self.scenario.duration,
            dt: self.scenario.dt,
            rms_metric: (a.sq_metric / n).sqrt(),
            mean_metric: a.sum_metric / n,
            max_metric: a.max_metric,
            rms_com_x: (a.sq_com / n).sqrt(),
            min_force: a.min_force,
            liftoff_steps: a.liftoff,
            optimizer: opt,
            hydraulics,
            wall_time_s,
        }
    }
}

fn apply_arm(state: &mut PlatformState, cmd: &CommandSample) {
    state.q_arm.clone_from(&cmd.q_arm);
    state.qd_arm.clone_from(&cmd.qd_arm);
    state.qdd_arm.clone_from(&cmd.qdd_arm);
    state.qd_w = cmd.qd_w;
    state.qdd_w = [0.0; 4];
}

/// Exact arc for constant forward speed and yaw rate over one step.
fn integrate_planar(state: &mut PlatformState, dt: f64) {
    let [vx, vy, _, omega, _, _] = state.qd_fb;
    let yaw = state.q_fb[3];
    let v = vx * yaw.cos() + vy * yaw.sin();
    let next = yaw + omega * dt;
    if omega.abs() * dt < 1e-12 {
        state.q_fb[0] += v * dt * yaw.cos();
        state.q_fb[1] += v * dt * yaw.sin();
    } else {
        state.q_fb[0] += v / omega * (next.sin() - yaw.sin());
        state.q_fb[1] -= v / omega * (next.cos() - yaw.cos());
    }
    state.q_fb[3] = next;
}

/// Pitch inertia of the base and manipulator about the pivot axis.
pub fn pitch_inertia(model: &PlatformModel, state: &PlatformState) -> Result<f64> {
    let base = &model.config.bodies.base;
    let [cx, _, cz] = base.com;
    let mut i_yy = base.inertia[1] + base.mass * (cx * cx + cz * cz);
    let mut s = state.clone();
    model.settle(&mut s)?;
    let poses = model.forward_kinematics(&s)?;
    let arm = aggregate_inertia(&model.tree, &poses, model.frames.fb, Some(BodyGroup::Manipulator))?;
    let p = extract_inertia(&arm.m_c)?;
    i_yy += p.inertia[(1, 1)] + p.mass * (p.com.x * p.com.x + p.com.z * p.com.z);
    Ok(i_yy)
}

/// Mass reflected to each actuator when both move together:
/// `½ k² I_pitch`, with `k = ∂θ/∂x` of the chain.
pub fn effective_mass(model: &PlatformModel, state: &PlatformState) -> Result<[f64; 2]> {
    let i_yy = pitch_inertia(model, state)?;
    let chains = model.chain_states(state)?;
    Ok(chains.map(|c| 0.5 * c.rates.k[0] * c.rates.k[0] * i_yy))
}

/// Static actuator loads `M g ∂z_cm/∂x_i` at `state`.
pub fn reflected_load(model: &PlatformModel, state: &PlatformState) -> Result<[f64; 2]> {
    let j = com_sensitivity(model, state)?;
    let w = model.total_mass(None) * model.gravity();
    Ok([w * j[(2, 0)], w * j[(2, 1)]])
}

fn initial_axes(model: &PlatformModel, state: &PlatformState, h: &HydraulicSpec) -> Result<[ServoAxis; 2]> {
    let mass = match h.effective_mass {
        Some(m) => [m; 2],
        None => effective_mass(model, state)?,
    };
    let f_load = reflected_load(model, state)?;
    let axis = |i: usize| {
        let load = AxisLoad { mass: mass[i], damping: h.damping };
        ServoAxis::at_rest(h.params, load, h.k_p, state.x[i], f_load[i], h.rest_rod_pressure)
    };
    Ok([axis(0)?, axis(1)?])
}

/// Runs a scenario to completion, keeping every row.
pub fn run_scenario(model: &PlatformModel, scenario: &Scenario) -> Result<(Vec<MetricsRow>, RunSummary)> {
    let start = std::time::Instant::now();
    let mut sim = Simulation::new(model, scenario.clone())?;
    let mut rows = Vec::with_capacity(scenario.steps() + 1);
    while !sim.finished() {
        rows.push(sim.step()?);
    }
    let summary = sim.summary(start.elapsed().as_secs_f64());
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn metric_examples() {
        assert_eq!(force_distribution_metric(&[5.0; 4]), 0.0);
        assert_eq!(force_distribution_metric(&[1.0, 1.0, 1.0, 2.0]), 3.0);
    }

    #[test]
    fn metric_matches_ordered_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let f: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-5e4..5e4));
            let mut ordered = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        ordered += (f[i] - f[j]).abs();
                    }
                }
            }
            assert_relative_eq!(force_distribution_metric(&f), 0.5 * ordered, max_relative = 1e-14);
        }
    }

    fn frozen_scenario() -> Scenario {
        let mut s = Scenario { duration: 0.2, ..Default::default() };
        s.commands.arm.q_beta = vec![0.0; 7];
        s.commands.arm.q_alpha = vec![0.0; 7];
        s.commands.wheel_rates = [0.0; 4];
        s
    }

    #[test]
    fn zero_motion_is_constant() {
        let model = PlatformModel::reference().unwrap();
        let (rows, summary) = run_scenario(&model, &frozen_scenario()).unwrap();
        assert_eq!(rows.len(), 201);
        for r in &rows {
            assert_eq!(r.com_x, rows[0].com_x);
            assert_eq!(r.forces, rows[0].forces);
        }
        assert_eq!(summary.optimizer.calls, 0);
    }

    #[test]
    fn planar_arc_closes_circle() {
        let mut s = PlatformState::zeros(7);
        let (v, omega) = (0.5, 0.25);
        s.qd_fb[0] = v;
        s.qd_fb[3] = omega;
        let dt = 1e-3;
        let n = (2.0 * std::f64::consts::PI / omega / dt).round() as usize;
        for _ in 0..n {
            let yaw = s.q_fb[3];
            s.qd_fb[0] = v * yaw.cos();
            s.qd_fb[1] = v * yaw.sin();
            integrate_planar(&mut s, dt);
        }
        assert!(s.q_fb[0].abs() < 1e-3 && s.q_fb[1].abs() < 1e-3);
    }

    #[test]
    fn times_monotone_and_error_carries_time() {
        let model = PlatformModel::reference().unwrap();
        let mut s = frozen_scenario();
        s.suspension.mode = SuspensionMode::Scripted;
        s.suspension.x_beta = [2.0; 2];
        s.suspension.f_s = 10.0;
        let mut sim = Simulation::new(&model, s).unwrap();
        let mut last = -1.0;
        let err = loop {
            assert!(!sim.finished());
            match sim.step() {
                Ok(r) => {
                    assert!(r.t > last);
                    last = r.t;
                }
                Err(e) => break e,
            }
        };
        assert!(matches!(err, Error::AtTime { time, .. } if time > 0.0));
    }

    #[test]
    fn hydraulic_loop_holds_fixed_reference() {
        let model = PlatformModel::reference().unwrap();
        let mut s = frozen_scenario();
        s.hydraulics = Some(HydraulicSpec::default());
        let (rows, summary) = run_scenario(&model, &s).unwrap();
        let h = summary.hydraulics.unwrap();
        assert!(h.max_tracking_error < 1e-6, "{h:?}");
        assert!(rows.iter().all(|r| r.axes[0].p_a.is_finite()));
    }
}
