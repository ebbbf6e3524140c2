//! Wheel normal forces on flat terrain from Newton–Euler balance of the
//! platform plus the manipulator wrench.
//!
//! With `W` the wrench the ground must supply, expressed at the
//! centre-of-mass frame `Σ_cm` (z up), contacts `(x_i, y_i, z_g)` and
//! unknown tangential reactions, the normal forces satisfy
//!
//! ```text
//! Σ f_i          = W_fz
//! Σ y_i f_i      = W_mx + z_g W_fy
//! Σ (−x_i) f_i   = W_my − z_g W_fx
//! ```
//!
//! Three equations in four unknowns; the minimum-norm solution
//! `f = Aᵀ (A Aᵀ)⁻¹ b` is returned.

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};

use crate::dynamics::{aggregate_inertia, AggregateInertia};
use crate::error::{Error, Result};
use crate::kinematics::{body_wrench, BodyGroup, TreeKinematics};
use crate::model::PlatformModel;
use crate::spatial::{
    inverse_transform_motion, transform_force, transform_inertia, ForceVector, MotionVector, SpatialInertia, Transform,
};

/// Four normal forces `[FR, FL, RR, RL]` in newtons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalForces {
    pub f: [f64; 4],
    /// Set when any force is negative (a wheel would lift off).
    pub liftoff: bool,
}

impl NormalForces {
    pub fn new(f: [f64; 4]) -> Self {
        Self { f, liftoff: f.iter().any(|&v| v < 0.0) }
    }

    pub fn sum(&self) -> f64 {
        self.f.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.f.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForceInputs {
    /// Wrench the base exerts on the manipulator, at `Σ_m`.
    pub f_m: ForceVector,
    pub g_cm_m: Transform,
    pub g_w_cm: Transform,
    /// Twist and acceleration (gravity included) of `Σ_cm`.
    pub nu_cm: MotionVector,
    pub nu_dot_cm: MotionVector,
    /// Platform inertia about `Σ_cm`.
    pub m_cm: SpatialInertia,
    /// Whole-machine rotational inertia about the centre of mass.
    pub inertia_c: Matrix3<f64>,
    /// Contact points in `Σ_cm`, wheel order.
    pub contacts: [Vector3<f64>; 4],
    /// Distance from the centre of mass back to the rear axle and forward to the front axle.
    pub l1: f64,
    pub l2: f64,
    pub half_track: f64,
}

impl ForceInputs {
    /// Ground wrench required at `Σ_cm`: the rigid platform term plus the
    /// transported manipulator wrench.
    pub fn required_wrench(&self) -> ForceVector {
        body_wrench(&self.m_cm, &self.nu_cm, &self.nu_dot_cm) + transform_force(&self.g_cm_m, &self.f_m)
    }

    /// Equilibrium matrix and right-hand side.
    pub fn equilibrium_system(&self) -> (Matrix3x4<f64>, Vector3<f64>) {
        let w = self.required_wrench();
        let (f, m) = (w.force(), w.moment());
        let zg = self.contacts.iter().map(|c| c.z).sum::<f64>() / 4.0;
        let mut a = Matrix3x4::zeros();
        for (i, c) in self.contacts.iter().enumerate() {
            a[(0, i)] = 1.0;
            a[(1, i)] = c.y;
            a[(2, i)] = -c.x;
        }
        (a, Vector3::new(f.z, m.x + zg * f.y, m.y - zg * f.x))
    }

    pub fn residual(&self, forces: &NormalForces) -> f64 {
        let (a, b) = self.equilibrium_system();
        (a * Vector4::from(forces.f) - b).abs().max()
    }
}

pub fn normal_forces(inputs: &ForceInputs) -> Result<NormalForces> {
    if !(inputs.l1 > 0.0 && inputs.l2 > 0.0) {
        return Err(Error::ComOutsideWheelbase { l1: inputs.l1, l2: inputs.l2 });
    }
    let (a, b) = inputs.equilibrium_system();
    let gram = a * a.transpose();
    let lambda = gram.cholesky().ok_or_else(|| Error::Config("contact points are collinear".into()))?.solve(&b);
    let f = a.transpose() * lambda;
    Ok(NormalForces::new([f[0], f[1], f[2], f[3]]))
}

/// Evaluates every force input at the state described by `kin`.
/// `whole` is the machine aggregate at the chassis frame.
pub fn force_inputs(model: &PlatformModel, kin: &TreeKinematics, whole: &AggregateInertia) -> Result<ForceInputs> {
    let f = &model.frames;
    let platform = aggregate_inertia(&model.tree, &kin.poses, f.chassis, Some(BodyGroup::Platform))?;
    let c_cm = Transform::from_translation(whole.com());
    let cm_c = c_cm.inverse();
    let m_cm = transform_inertia(&platform.m_c, &cm_c);
    let nu_cm = inverse_transform_motion(&c_cm, &kin.twists[f.chassis]);
    let nu_dot_cm = inverse_transform_motion(&c_cm, &kin.accels[f.chassis]);
    let f_m = model.tree.total_wrench_at(kin, f.m, Some(BodyGroup::Manipulator));
    let g_cm_m = cm_c * kin.relative(f.chassis, f.m);
    let to_cm = whole.g_w_cm.inverse();
    let contacts = model.contact_points(&kin.poses).map(|p| to_cm.transform_point(&p));
    let l2 = 0.5 * (contacts[0].x + contacts[1].x);
    let l1 = -0.5 * (contacts[2].x + contacts[3].x);
    Ok(ForceInputs {
        f_m,
        g_cm_m,
        g_w_cm: whole.g_w_cm,
        nu_cm,
        nu_dot_cm,
        m_cm,
        inertia_c: whole.params.inertia,
        contacts,
        l1,
        l2,
        half_track: model.config.wheels.half_track,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::gravity_root;
    use crate::spatial::build_inertia;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const G: f64 = 9.81;

    fn static_inputs(mass: f64, contacts: [Vector3<f64>; 4]) -> ForceInputs {
        let m_cm = build_inertia(mass, Vector3::zeros(), Matrix3::from_diagonal_element(100.0)).unwrap();
        ForceInputs {
            f_m: ForceVector::zeros(),
            g_cm_m: Transform::identity(),
            g_w_cm: Transform::identity(),
            nu_cm: MotionVector::zeros(),
            nu_dot_cm: gravity_root(G),
            m_cm,
            inertia_c: Matrix3::from_diagonal_element(100.0),
            l1: -0.5 * (contacts[2].x + contacts[3].x),
            l2: 0.5 * (contacts[0].x + contacts[1].x),
            contacts,
            half_track: contacts[1].y,
        }
    }

    fn rectangle(front: f64, rear: f64, w: f64, h: f64) -> [Vector3<f64>; 4] {
        [
            Vector3::new(front, -w, -h),
            Vector3::new(front, w, -h),
            Vector3::new(-rear, -w, -h),
            Vector3::new(-rear, w, -h),
        ]
    }

    #[test]
    fn symmetric_quarter_weight() {
        let inputs = static_inputs(8000.0, rectangle(1.2, 1.2, 0.9, 1.3));
        let f = normal_forces(&inputs).unwrap();
        let quarter = 8000.0 * G / 4.0;
        for v in f.f {
            assert!(((v - quarter) / quarter).abs() < 1e-10);
        }
        assert!(!f.liftoff);
    }

    #[test]
    fn lever_rule() {
        // l1 = 2 l2: the front pair carries two thirds
        let inputs = static_inputs(6000.0, rectangle(0.8, 1.6, 0.9, 1.0));
        let f = normal_forces(&inputs).unwrap();
        let w = 6000.0 * G;
        assert_relative_eq!(f.f[0], w / 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.f[1], w / 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.f[2], w / 6.0, max_relative = 1e-12);
        assert_relative_eq!(f.f[3], w / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn com_behind_rear_axle() {
        let inputs = static_inputs(1000.0, rectangle(2.0, -0.1, 0.9, 1.0));
        assert!(matches!(normal_forces(&inputs), Err(Error::ComOutsideWheelbase { .. })));
    }

    #[test]
    fn liftoff_flagged_not_clamped() {
        let mut inputs = static_inputs(1000.0, rectangle(1.0, 1.0, 0.9, 1.0));
        inputs.f_m = ForceVector::from_array([0.0, 0.0, 0.0, 2.0e4, 0.0, 0.0]);
        let f = normal_forces(&inputs).unwrap();
        assert!(f.liftoff);
        assert!(f.min() < 0.0);
        assert!(inputs.residual(&f) < 1e-8);
    }

    fn random_inputs(rng: &mut impl Rng) -> ForceInputs {
        let mut contacts = rectangle(rng.gen_range(0.8..1.6), rng.gen_range(0.8..1.6), rng.gen_range(0.6..1.0), 1.2);
        for c in contacts.iter_mut() {
            c.x += rng.gen_range(-0.05..0.05);
            c.y += rng.gen_range(-0.05..0.05);
        }
        let mut inputs = static_inputs(rng.gen_range(3000.0..9000.0), contacts);
        inputs.m_cm = build_inertia(
            inputs.m_cm.mass(),
            Vector3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)),
            Matrix3::new(3000.0, 10.0, 20.0, 10.0, 5000.0, 30.0, 20.0, 30.0, 6000.0),
        )
        .unwrap();
        inputs.nu_cm = MotionVector::from_array(std::array::from_fn(|_| rng.gen_range(-0.5..0.5)));
        inputs.nu_dot_cm =
            gravity_root(G) + MotionVector::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        inputs.f_m = ForceVector::from_array(std::array::from_fn(|_| rng.gen_range(-2000.0..2000.0)));
        inputs.g_cm_m = Transform::from_xyz_rpy([0.3, 0.1, 0.6], [0.1, -0.2, 0.5]);
        inputs
    }

    #[test]
    fn random_dynamic_states_match_least_squares_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let inputs = random_inputs(&mut rng);
            let f = normal_forces(&inputs).unwrap();
            assert!(inputs.residual(&f) < 1e-8);
            // minimum-norm solution through the SVD pseudo-inverse
            let (a, b) = inputs.equilibrium_system();
            let ad = DMatrix::from_fn(3, 4, |i, j| a[(i, j)]);
            let bd = DVector::from_fn(3, |i, _| b[i]);
            let x = ad.svd(true, true).solve(&bd, 1e-14).unwrap();
            for i in 0..4 {
                assert!(((f.f[i] - x[i]) / x.norm()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weight_balance_of_reference_machine() {
        let model = PlatformModel::reference().unwrap();
        let mut s = model.nominal_state().unwrap();
        // arm pointing forward keeps the machine laterally symmetric
        s.q_arm[0] = std::f64::consts::FRAC_PI_2;
        let kin = model.kinematics(&s).unwrap();
        let whole = crate::dynamics::machine_inertia(&model, &kin).unwrap();
        let inputs = force_inputs(&model, &kin, &whole).unwrap();
        let f = normal_forces(&inputs).unwrap();
        let weight = model.total_mass(None) * G;
        assert!(((f.sum() - weight) / weight).abs() < 1e-9);
        // static, symmetric: F_m is pure gravity
        let fw = inputs.g_w_cm.rotation * transform_force(&inputs.g_cm_m, &inputs.f_m).force();
        assert_relative_eq!(fw.z, model.total_mass(Some(BodyGroup::Manipulator)) * G, max_relative = 1e-9);
        assert_relative_eq!(f.f[0], f.f[1], max_relative = 1e-9);
        assert!(inputs.l1 > 0.0 && inputs.l2 > 0.0);
    }
}
