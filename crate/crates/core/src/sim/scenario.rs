//! Scenario files and the analytic command generators.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydraulics::HydraulicParams;
use crate::optimizer::{ActuatorState, OptimizerConfig};
use crate::pipeline::InertiaMode;

/// `q_arm(t) = q_α + q_β sin(ω t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmCommand {
    pub q_alpha: Vec<f64>,
    pub q_beta: Vec<f64>,
    /// ω, rad/s.
    pub frequency: f64,
}

impl Default for ArmCommand {
    fn default() -> Self {
        Self {
            q_alpha: vec![PI / 2.0, 0.5, -0.5, 0.1, 0.0, PI / 2.0, 0.0],
            q_beta: vec![4.0 * PI, 0.7, -0.4, 0.9, 0.0, 0.0, 0.0],
            frequency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandSpec {
    pub arm: ArmCommand,
    /// Constant wheel rates `[FR, FL, RR, RL]`, rad/s.
    pub wheel_rates: [f64; 4],
}

impl Default for CommandSpec {
    fn default() -> Self {
        Self { arm: ArmCommand::default(), wheel_rates: [PI / 5.0, PI / 10.0, PI / 5.0, PI / 10.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuspensionMode {
    /// Held at `x_α`.
    #[default]
    Fixed,
    /// `x = x_α + x_β sin(f_s t)`.
    Scripted,
    /// Chosen each step by the stability optimizer, starting from `x_α`.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuspensionSpec {
    pub mode: SuspensionMode,
    pub x_alpha: [f64; 2],
    pub x_beta: [f64; 2],
    pub f_s: f64,
}

impl Default for SuspensionSpec {
    fn default() -> Self {
        Self { mode: SuspensionMode::Fixed, x_alpha: [-0.1; 2], x_beta: [0.07; 2], f_s: 0.3 }
    }
}

/// Valve-controlled cylinders tracking the suspension reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HydraulicSpec {
    pub params: HydraulicParams,
    pub k_p: f64,
    /// Viscous damping along the stroke, N·s/m.
    pub damping: f64,
    /// Reflected mass per actuator; derived from the pitch inertia when absent.
    pub effective_mass: Option<f64>,
    /// Rod-side pressure of the initial equilibrium, Pa.
    pub rest_rod_pressure: f64,
    /// Steady-state tracking bound checked in the summary, m.
    pub tracking_threshold: f64,
}

impl Default for HydraulicSpec {
    fn default() -> Self {
        Self {
            params: HydraulicParams::default(),
            k_p: 10.0,
            damping: 5e4,
            effective_mass: None,
            rest_rod_pressure: 2e6,
            tracking_threshold: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub summary: PathBuf,
    /// Write one CSV row every this many steps.
    pub every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into(), csv: "metrics.csv".into(), summary: "summary.json".into(), every: 1 }
    }
}

impl OutputSpec {
    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(&self.csv)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(&self.summary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub name: String,
    /// Model file; the built-in reference machine when absent.
    pub model: Option<PathBuf>,
    pub duration: f64,
    pub dt: f64,
    pub commands: CommandSpec,
    pub suspension: SuspensionSpec,
    pub optimizer: OptimizerConfig,
    /// Cylinders in the loop when present, ideal actuators otherwise.
    pub hydraulics: Option<HydraulicSpec>,
    pub inertia: InertiaMode,
    pub output: OutputSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            model: None,
            duration: 100.0,
            dt: 1e-3,
            commands: CommandSpec::default(),
            suspension: SuspensionSpec::default(),
            optimizer: OptimizerConfig::default(),
            hydraulics: None,
            inertia: InertiaMode::Variable,
            output: OutputSpec::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario; a relative model path is taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (Some(m), Some(dir)) = (&s.model, path.parent()) {
            if m.is_relative() {
                s.model = Some(dir.join(m));
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration >= self.dt) {
            return Err(Error::Config(format!("duration {} shorter than dt {}", self.duration, self.dt)));
        }
        let arm = &self.commands.arm;
        if arm.q_alpha.len() != arm.q_beta.len() {
            return Err(Error::DimensionMismatch {
                what: "q_beta",
                expected: arm.q_alpha.len(),
                got: arm.q_beta.len(),
            });
        }
        if self.output.every == 0 {
            return Err(Error::Config("output.every must be at least 1".into()));
        }
        let w = &self.optimizer.weights;
        if w.pairs.iter().flatten().chain(w.angles.iter()).any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("optimizer weights must be non-negative".into()));
        }
        Ok(())
    }

    /// Number of steps after the initial sample.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Commands at one instant, with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandSample {
    pub q_arm: Vec<f64>,
    pub qd_arm: Vec<f64>,
    pub qdd_arm: Vec<f64>,
    pub qd_w: [f64; 4],
    /// Prescribed suspension trajectory; `None` in optimized mode.
    pub suspension: Option<ActuatorState>,
}

pub fn commands(scenario: &Scenario, t: f64) -> CommandSample {
    let arm = &scenario.commands.arm;
    let w = arm.frequency;
    let (s, c) = (w * t).sin_cos();
    let q_arm = arm.q_alpha.iter().zip(&arm.q_beta).map(|(a, b)| a + b * s).collect();
    let qd_arm = arm.q_beta.iter().map(|b| b * w * c).collect();
    let qdd_arm = arm.q_beta.iter().map(|b| -b * w * w * s).collect();
    let sp = &scenario.suspension;
    let suspension = match sp.mode {
        SuspensionMode::Fixed => Some(ActuatorState { x: sp.x_alpha, ..Default::default() }),
        SuspensionMode::Scripted => {
            let (s, c) = (sp.f_s * t).sin_cos();
            let f2 = sp.f_s * sp.f_s;
            Some(ActuatorState {
                x: [sp.x_alpha[0] + sp.x_beta[0] * s, sp.x_alpha[1] + sp.x_beta[1] * s],
                xd: [sp.x_beta[0] * sp.f_s * c, sp.x_beta[1] * sp.f_s * c],
                xdd: [-sp.x_beta[0] * f2 * s, -sp.x_beta[1] * f2 * s],
            })
        }
        SuspensionMode::Optimized => None,
    };
    CommandSample { q_arm, qd_arm, qdd_arm, qd_w: scenario.commands.wheel_rates, suspension }
}
