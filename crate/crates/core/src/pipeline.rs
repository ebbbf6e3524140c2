//! State → forces pipeline shared by the simulator, the optimizer and the
//! benchmarks.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{machine_inertia, AggregateInertia};
use crate::error::Result;
use crate::forces::{force_inputs, normal_forces, ForceInputs, NormalForces};
use crate::model::{PlatformModel, PlatformState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaMode {
    /// Inertial parameters follow the actual suspension state.
    #[default]
    Variable,
    /// Suspension held at the nominal stroke with zero rates.
    Frozen,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub forces: NormalForces,
    pub inputs: ForceInputs,
    pub whole: AggregateInertia,
    /// Contact points in the chassis frame.
    pub contacts_c: [Vector3<f64>; 4],
}

impl Evaluation {
    /// Whole-machine centre of mass in the chassis frame.
    pub fn com_c(&self) -> Vector3<f64> {
        self.whole.com()
    }
}

/// Evaluates a state whose floating base is already settled.
pub fn evaluate(model: &PlatformModel, state: &PlatformState) -> Result<Evaluation> {
    let kin = model.kinematics(state)?;
    let whole = machine_inertia(model, &kin)?;
    let inputs = force_inputs(model, &kin, &whole)?;
    let forces = normal_forces(&inputs)?;
    let r = whole.com();
    let contacts_c = inputs.contacts.map(|p| p + r);
    Ok(Evaluation { forces, inputs, whole, contacts_c })
}

/// Settles a copy of `state` on flat ground, then evaluates it.
pub fn evaluate_settled(model: &PlatformModel, state: &PlatformState, mode: InertiaMode) -> Result<Evaluation> {
    let mut s = state.clone();
    if mode == InertiaMode::Frozen {
        s.set_suspension([model.config.nominal_x; 2], [0.0; 2], [0.0; 2]);
    }
    model.settle(&mut s)?;
    evaluate(model, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn frozen_matches_variable_at_nominal() {
        let model = PlatformModel::reference().unwrap();
        let mut s = model.nominal_state().unwrap();
        s.q_arm[0] = PI / 2.0;
        s.qd_arm[0] = 1.0;
        let a = evaluate_settled(&model, &s, InertiaMode::Variable).unwrap();
        let b = evaluate_settled(&model, &s, InertiaMode::Frozen).unwrap();
        assert_eq!(a.forces.f, b.forces.f);
    }

    #[test]
    fn frozen_ignores_stroke() {
        let model = PlatformModel::reference().unwrap();
        let mut s = model.nominal_state().unwrap();
        let base = evaluate_settled(&model, &s, InertiaMode::Frozen).unwrap();
        s.x = [0.0, 0.0];
        s.xd = [0.05, 0.05];
        let frozen = evaluate_settled(&model, &s, InertiaMode::Frozen).unwrap();
        let variable = evaluate_settled(&model, &s, InertiaMode::Variable).unwrap();
        assert_eq!(base.forces.f, frozen.forces.f);
        assert!((variable.forces.f[0] - frozen.forces.f[0]).abs() > 1.0);
    }

    #[test]
    fn extending_moves_com_back() {
        let model = PlatformModel::reference().unwrap();
        let mut s = model.nominal_state().unwrap();
        let [lo, hi] = model.config.stroke;
        let mut previous = f64::INFINITY;
        let mut front_previous = f64::INFINITY;
        for i in 0..=10 {
            let x = lo + (hi - lo) * i as f64 / 10.0;
            s.x = [x, x];
            let e = evaluate_settled(&model, &s, InertiaMode::Variable).unwrap();
            assert!(e.com_c().x < previous);
            let front = e.forces.f[0] + e.forces.f[1];
            assert!(front < front_previous);
            assert!(e.inputs.l2 > e.inputs.l2.min(e.inputs.l1) - 1e-12);
            previous = e.com_c().x;
            front_previous = front;
        }
    }
}
