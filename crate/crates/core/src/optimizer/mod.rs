//! Per-step suspension optimization.
//!
//! The decision variable is the next stroke `x₊` of each actuator. Rate and
//! acceleration follow from backward differences,
//! `ẋ₊ = (x₊ − x_k)/Δt`, `ẍ₊ = (ẋ₊ − ẋ_k)/Δt`, so the kinematic consistency
//! conditions hold by construction and the position, rate and acceleration
//! limits all become a box on `x₊`. The cost is minimized by an SQP loop with
//! finite-difference derivatives and an ℓ1 merit line search.

pub mod cost;
pub mod qp;

pub use cost::{
    angle_term, evaluate_cost, force_term, smooth_bounds, stability_angles, BoundShape, CostBreakdown, RateBounds,
    Weights, EDGES,
};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PlatformModel, PlatformState};
use crate::pipeline::{evaluate_settled, InertiaMode};

/// What the cost needs from a candidate suspension state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub forces: [f64; 4],
    pub com: Vector3<f64>,
    pub contacts: [Vector3<f64>; 4],
}

pub trait StabilityModel {
    fn snapshot(&self, x: [f64; 2], xd: [f64; 2], xdd: [f64; 2]) -> Result<Snapshot>;
}

/// The platform at a fixed arm and wheel state, suspension left free.
#[derive(Debug, Clone)]
pub struct PlatformStability<'a> {
    pub model: &'a PlatformModel,
    pub state: PlatformState,
    pub mode: InertiaMode,
}

impl<'a> PlatformStability<'a> {
    pub fn new(model: &'a PlatformModel, state: PlatformState) -> Self {
        Self { model, state, mode: InertiaMode::Variable }
    }
}

impl StabilityModel for PlatformStability<'_> {
    fn snapshot(&self, x: [f64; 2], xd: [f64; 2], xdd: [f64; 2]) -> Result<Snapshot> {
        let mut s = self.state.clone();
        s.set_suspension(x, xd, xdd);
        let e = evaluate_settled(self.model, &s, self.mode)?;
        Ok(Snapshot { forces: e.forces.f, com: e.com_c(), contacts: e.contacts_c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub weights: Weights,
    pub bounds: BoundShape,
    /// Drive both sides with one stroke.
    pub symmetric: bool,
    /// Evaluate candidates with their stroke rate and acceleration instead
    /// of at rest.
    pub rate_terms: bool,
    /// Lower limit on every normal force, N.
    pub force_floor: f64,
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    pub gradient_step: f64,
    pub hessian_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            bounds: BoundShape::default(),
            symmetric: true,
            rate_terms: false,
            force_floor: 0.0,
            max_iterations: 50,
            kkt_tolerance: 1e-6,
            gradient_step: 1e-6,
            hessian_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorState {
    pub x: [f64; 2],
    pub xd: [f64; 2],
    pub xdd: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    /// The line search could not reduce the merit any further.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest violation of `x₊ = x_k + Δt ẋ₊` and `ẋ₊ = ẋ_k + Δt ẍ₊`.
    pub consistency: f64,
    /// Largest violation of the position, rate and acceleration limits,
    /// each in its own unit.
    pub bounds: f64,
    /// `max(0, floor − min f)`, N.
    pub force: f64,
    /// Stationarity of the scaled Lagrangian, per metre of stroke.
    pub kkt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptSolution {
    pub next: ActuatorState,
    pub cost: CostBreakdown,
    pub forces: [f64; 4],
    pub residuals: Residuals,
    pub status: SolverStatus,
    /// Rate limits were dropped because the full box was empty.
    pub restored: bool,
    pub iterations: usize,
}

/// Box on `x₊` for one actuator and whether the rate limits had to go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBox {
    pub lo: f64,
    pub hi: f64,
    pub restored: bool,
}

/// One optimization step from `current` over `dt`.
#[derive(Debug, Clone, Copy)]
pub struct StepProblem<'c> {
    pub current: ActuatorState,
    pub dt: f64,
    pub stroke: [f64; 2],
    pub config: &'c OptimizerConfig,
}

impl StepProblem<'_> {
    fn limits(&self, i: usize) -> RateBounds {
        smooth_bounds(self.current.x[i], self.stroke[0], self.stroke[1], &self.config.bounds)
    }

    fn boxes(&self, i: usize) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let (x, xd, dt) = (self.current.x[i], self.current.xd[i], self.dt);
        let b = self.limits(i);
        let pos = self.stroke;
        let vel = [x + dt * b.xd_min, x + dt * b.xd_max];
        let acc = [x + dt * xd + dt * dt * b.xdd_min, x + dt * xd + dt * dt * b.xdd_max];
        (pos, vel, acc)
    }

    pub fn step_box(&self, i: usize) -> Result<StepBox> {
        let (pos, vel, acc) = self.boxes(i);
        let lo = pos[0].max(vel[0]).max(acc[0]);
        let hi = pos[1].min(vel[1]).min(acc[1]);
        if lo <= hi {
            return Ok(StepBox { lo, hi, restored: false });
        }
        let lo = pos[0].max(acc[0]);
        let hi = pos[1].min(acc[1]);
        if lo <= hi {
            return Ok(StepBox { lo, hi, restored: true });
        }
        Err(Error::Infeasible {
            constraint: format!("stroke and acceleration limits of actuator {i}"),
            violation: lo - hi,
        })
    }

    pub fn rates(&self, x_next: [f64; 2]) -> ActuatorState {
        let mut s = ActuatorState { x: x_next, ..Default::default() };
        s.xd = std::array::from_fn(|i| (x_next[i] - self.current.x[i]) / self.dt);
        s.xdd = std::array::from_fn(|i| (s.xd[i] - self.current.xd[i]) / self.dt);
        s
    }

    fn snapshot(&self, model: &impl StabilityModel, x_next: [f64; 2]) -> Result<Snapshot> {
        if self.config.rate_terms {
            let s = self.rates(x_next);
            model.snapshot(s.x, s.xd, s.xdd)
        } else {
            model.snapshot(x_next, [0.0; 2], [0.0; 2])
        }
    }

    /// Cost of stepping to `x_next`, `+∞` when the centre of mass leaves the
    /// support polygon.
    pub fn evaluate_cost(&self, model: &impl StabilityModel, x_next: [f64; 2]) -> Result<CostBreakdown> {
        let s = self.snapshot(model, x_next)?;
        Ok(evaluate_cost(&s.forces, &s.com, &s.contacts, &self.config.weights))
    }

    /// Worst violation of the original (unrestored) limits at `next`.
    pub fn bound_violation(&self, next: &ActuatorState) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            let b = self.limits(i);
            let over = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
            worst = worst
                .max(over(next.x[i], self.stroke[0], self.stroke[1]))
                .max(over(next.xd[i], b.xd_min, b.xd_max))
                .max(over(next.xdd[i], b.xdd_min, b.xdd_max));
        }
        worst
    }

    pub fn solve(&self, model: &impl StabilityModel) -> Result<OptSolution> {
        Sqp::new(self, model)?.run()
    }
}

/// Solves one step. Convenience over [`StepProblem::solve`].
pub fn solve_step(
    model: &impl StabilityModel,
    current: &ActuatorState,
    stroke: [f64; 2],
    dt: f64,
    config: &OptimizerConfig,
) -> Result<OptSolution> {
    StepProblem { current: *current, dt, stroke, config }.solve(model)
}

struct Sqp<'p, 'c, M> {
    problem: &'p StepProblem<'c>,
    model: &'p M,
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    restored: bool,
    scale: f64,
}

struct Point {
    cost: f64,
    forces: [f64; 4],
}

impl<'p, 'c, M: StabilityModel> Sqp<'p, 'c, M> {
    fn new(problem: &'p StepProblem<'c>, model: &'p M) -> Result<Self> {
        let b = [problem.step_box(0)?, problem.step_box(1)?];
        let restored = b[0].restored || b[1].restored;
        let (lo, hi) = if problem.config.symmetric {
            let lo = b[0].lo.max(b[1].lo);
            let hi = b[0].hi.min(b[1].hi);
            if lo > hi {
                return Err(Error::Infeasible { constraint: "common stroke of both sides".into(), violation: lo - hi });
            }
            (vec![lo], vec![hi])
        } else {
            (vec![b[0].lo, b[1].lo], vec![b[0].hi, b[1].hi])
        };
        Ok(Self { problem, model, n: lo.len(), lo, hi, restored, scale: 1.0 })
    }

    fn x_next(&self, z: &[f64]) -> [f64; 2] {
        if self.n == 1 {
            [z[0]; 2]
        } else {
            [z[0], z[1]]
        }
    }

    fn point(&self, z: &[f64]) -> Result<Point> {
        let s = self.problem.snapshot(self.model, self.x_next(z))?;
        let eta = stability_angles(&s.com, &s.contacts)?;
        let w = &self.problem.config.weights;
        let cost = (force_term(&s.forces, w) + angle_term(&eta, w)) * self.scale;
        Ok(Point { cost, forces: s.forces })
    }

    fn shifted(&self, z: &[f64], moves: &[(usize, f64)]) -> Result<Point> {
        let mut y = z.to_vec();
        for &(j, h) in moves {
            y[j] += h;
        }
        self.point(&y)
    }

    fn violation(&self, forces: &[f64; 4]) -> f64 {
        forces.iter().map(|f| (self.problem.config.force_floor - f).max(0.0)).sum()
    }

    fn warm_start(&self) -> Vec<f64> {
        let c = &self.problem.current;
        let dt = self.problem.dt;
        let guess: Vec<f64> = (0..2).map(|i| c.x[i] + dt * c.xd[i] + dt * dt * c.xdd[i]).collect();
        if self.n == 1 {
            vec![(0.5 * (guess[0] + guess[1])).clamp(self.lo[0], self.hi[0])]
        } else {
            (0..2).map(|i| guess[i].clamp(self.lo[i], self.hi[i])).collect()
        }
    }

    fn run(mut self) -> Result<OptSolution> {
        let cfg = self.problem.config;
        let n = self.n;
        let mut z = self.warm_start();
        let c0 = self.point(&z)?.cost;
        self.scale = 1.0 / c0.abs().max(1.0);
        let mut here = self.point(&z)?;
        let mut mu: f64 = 0.0;
        let mut status = SolverStatus::MaxIterations;
        let mut kkt = f64::INFINITY;
        let mut iterations = 0;

        for it in 0..cfg.max_iterations {
            iterations = it + 1;
            let h = cfg.gradient_step;
            let mut g = DVector::zeros(n);
            let mut jac = DMatrix::zeros(4, n);
            for j in 0..n {
                let p = self.shifted(&z, &[(j, h)])?;
                let m = self.shifted(&z, &[(j, -h)])?;
                g[j] = (p.cost - m.cost) / (2.0 * h);
                for i in 0..4 {
                    jac[(i, j)] = (p.forces[i] - m.forces[i]) / (2.0 * h);
                }
            }
            let hess = self.hessian(&z, here.cost)?;

            // rows: upper box, lower box, force floor
            let rows = 2 * n + 4;
            let mut gm = DMatrix::zeros(rows, n);
            let mut hv = DVector::zeros(rows);
            for j in 0..n {
                gm[(2 * j, j)] = 1.0;
                hv[2 * j] = self.hi[j] - z[j];
                gm[(2 * j + 1, j)] = -1.0;
                hv[2 * j + 1] = z[j] - self.lo[j];
            }
            for i in 0..4 {
                for j in 0..n {
                    gm[(2 * n + i, j)] = -jac[(i, j)];
                }
                hv[2 * n + i] = here.forces[i] - cfg.force_floor;
            }
            let sol = match qp::solve_qp(&hess, &g, &gm, &hv) {
                Some(s) => s,
                None => {
                    let gm = gm.rows(0, 2 * n).into_owned();
                    let hv = hv.rows(0, 2 * n).into_owned();
                    let s = qp::solve_qp(&hess, &g, &gm, &hv)
                        .ok_or_else(|| Error::Infeasible { constraint: "stroke box".into(), violation: 0.0 })?;
                    let mut lambda = DVector::zeros(rows);
                    lambda.rows_mut(0, 2 * n).copy_from(&s.lambda);
                    qp::QpSolution { d: s.d, lambda, objective: s.objective }
                }
            };
            let stationarity = &g + gm.transpose() * &sol.lambda;
            kkt = stationarity.amax();
            let violation = self.violation(&here.forces);
            if kkt < cfg.kkt_tolerance && violation == 0.0 {
                status = SolverStatus::Converged;
                break;
            }
            for i in 0..4 {
                mu = mu.max(1.1 * sol.lambda[2 * n + i]);
            }
            let merit = |p: &Point| p.cost + mu * self.violation(&p.forces);
            let phi = merit(&here);
            let predicted = -g.dot(&sol.d) + mu * violation;
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-10 {
                let trial: Vec<f64> = (0..n).map(|j| (z[j] + alpha * sol.d[j]).clamp(self.lo[j], self.hi[j])).collect();
                let p = self.point(&trial)?;
                if merit(&p) <= phi - 1e-4 * alpha * predicted.max(0.0) {
                    accepted = Some((trial, p));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((trial, p)) if trial != z => {
                    z = trial;
                    here = p;
                }
                _ => {
                    status = SolverStatus::Stalled;
                    break;
                }
            }
        }

        let next = self.problem.rates(self.x_next(&z));
        let cost = self.problem.evaluate_cost(self.model, next.x)?;
        let mut consistency: f64 = 0.0;
        let c = &self.problem.current;
        for i in 0..2 {
            consistency = consistency
                .max((next.x[i] - c.x[i] - self.problem.dt * next.xd[i]).abs())
                .max((next.xd[i] - c.xd[i] - self.problem.dt * next.xdd[i]).abs());
        }
        let forces = here.forces;
        let residuals = Residuals {
            consistency,
            bounds: self.problem.bound_violation(&next),
            force: (cfg.force_floor - forces.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0),
            kkt,
        };
        Ok(OptSolution { next, cost, forces, residuals, status, restored: self.restored, iterations })
    }

    /// Central second differences, then eigenvalues lifted to a positive floor.
    fn hessian(&self, z: &[f64], c: f64) -> Result<DMatrix<f64>> {
        let n = self.n;
        let h = self.problem.config.hessian_step;
        let mut hess = DMatrix::zeros(n, n);
        for j in 0..n {
            let p = self.shifted(z, &[(j, h)])?.cost;
            let m = self.shifted(z, &[(j, -h)])?.cost;
            hess[(j, j)] = (p - 2.0 * c + m) / (h * h);
        }
        for j in 0..n {
            for k in (j + 1)..n {
                let pp = self.shifted(z, &[(j, h), (k, h)])?.cost;
                let pm = self.shifted(z, &[(j, h), (k, -h)])?.cost;
                let mp = self.shifted(z, &[(j, -h), (k, h)])?.cost;
                let mm = self.shifted(z, &[(j, -h), (k, -h)])?.cost;
                let v = (pp - pm - mp + mm) / (4.0 * h * h);
                hess[(j, k)] = v;
                hess[(k, j)] = v;
            }
        }
        let eig = hess.symmetric_eigen();
        let floor = 1e-8 * eig.eigenvalues.amax().max(1.0);
        let lifted = eig.eigenvalues.map(|l| l.abs().max(floor));
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&lifted) * eig.eigenvectors.transpose())
    }
}
