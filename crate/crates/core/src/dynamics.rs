//! Configuration-dependent aggregate inertia of the machine at the chassis
//! frame, `M_c = Σ_i Ad*_{G_i^c} M_i Ad_{G_i^c}`, and the centre-of-mass frame.

use nalgebra::{Matrix3x2, Vector3};

use crate::error::Result;
use crate::kinematics::{BodyGroup, KinematicTree, TreeKinematics};
use crate::model::{PlatformModel, PlatformState};
use crate::spatial::{extract_inertia, transform_inertia, InertialParameters, SpatialInertia, Transform};

/// Step of the centre-of-mass sensitivity finite difference.
pub const COM_SENSITIVITY_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct AggregateInertia {
    /// Spatial inertia about the aggregation frame.
    pub m_c: SpatialInertia,
    /// Mass, centre of mass in the aggregation frame, tensor about the centre of mass.
    pub params: InertialParameters,
    /// World pose of the centre-of-mass frame (aggregation-frame orientation).
    pub g_w_cm: Transform,
}

impl AggregateInertia {
    pub fn mass(&self) -> f64 {
        self.params.mass
    }

    pub fn com(&self) -> Vector3<f64> {
        self.params.com
    }
}

/// Sums the inertias of `group` (all bodies for `None`) in frame `at`.
pub fn aggregate_inertia(
    tree: &KinematicTree,
    poses: &[Transform],
    at: usize,
    group: Option<BodyGroup>,
) -> Result<AggregateInertia> {
    let at_inv = poses[at].inverse();
    let mut m_c = SpatialInertia::zero();
    for b in tree.bodies().iter().filter(|b| group.is_none_or(|g| b.group == g)) {
        m_c += transform_inertia(&b.inertia, &(at_inv * poses[b.frame]));
    }
    let params = extract_inertia(&m_c)?;
    let g_w_cm = poses[at] * Transform::from_translation(params.com);
    Ok(AggregateInertia { m_c, params, g_w_cm })
}

/// `M_w` from `M_c` and the chassis pose `G_w^c`.
pub fn inertia_in_world(m_c: &SpatialInertia, g_w_c: &Transform) -> SpatialInertia {
    transform_inertia(m_c, g_w_c)
}

/// Whole-machine aggregate at the chassis frame.
pub fn machine_inertia(model: &PlatformModel, kin: &TreeKinematics) -> Result<AggregateInertia> {
    aggregate_inertia(&model.tree, &kin.poses, model.frames.chassis, None)
}

/// Centre of mass of the whole machine in the chassis frame after settling
/// the state on flat ground.
pub fn settled_com(model: &PlatformModel, state: &PlatformState) -> Result<Vector3<f64>> {
    let mut s = state.clone();
    model.settle(&mut s)?;
    let poses = model.forward_kinematics(&s)?;
    Ok(aggregate_inertia(&model.tree, &poses, model.frames.chassis, None)?.com())
}

/// `∂r^cm_c / ∂x` by central differences with [`COM_SENSITIVITY_STEP`];
/// one-sided when an actuator is within one step of the admissible range.
pub fn com_sensitivity(model: &PlatformModel, state: &PlatformState) -> Result<Matrix3x2<f64>> {
    com_sensitivity_with_step(model, state, COM_SENSITIVITY_STEP)
}

pub fn com_sensitivity_with_step(model: &PlatformModel, state: &PlatformState, h: f64) -> Result<Matrix3x2<f64>> {
    let (lo, hi) = model.config.chain.admissible_stroke();
    let mut out = Matrix3x2::zeros();
    let at = |side: usize, x: f64| -> Result<Vector3<f64>> {
        let mut s = state.clone();
        s.x[side] = x;
        settled_com(model, &s)
    };
    for side in 0..2 {
        let x = state.x[side];
        let col = if x - h <= lo {
            (at(side, x + h)? - at(side, x)?) / h
        } else if x + h >= hi {
            (at(side, x)? - at(side, x - h)?) / h
        } else {
            (at(side, x + h)? - at(side, x - h)?) / (2.0 * h)
        };
        out.set_column(side, &col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::JointKind;
    use crate::spatial::{build_inertia, exp_screw, MotionVector};
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn single_body_at_origin() {
        let mut tree = KinematicTree::new();
        let c = tree.add_fixed("c", None, Transform::identity()).unwrap();
        let m = build_inertia(3.0, Vector3::new(0.1, 0.2, 0.3), Matrix3::from_diagonal_element(0.5)).unwrap();
        tree.attach_body(c, m, BodyGroup::Platform);
        let agg = aggregate_inertia(&tree, &[Transform::identity()], c, None).unwrap();
        assert_relative_eq!(agg.m_c.0, m.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_masses() {
        let (m, d) = (2.0, 0.7);
        let mut tree = KinematicTree::new();
        let c = tree.add_fixed("c", None, Transform::identity()).unwrap();
        let a = tree.add_fixed("a", Some(c), Transform::from_translation(Vector3::new(d, 0.0, 0.0))).unwrap();
        let b = tree.add_fixed("b", Some(c), Transform::from_translation(Vector3::new(-d, 0.0, 0.0))).unwrap();
        let point = build_inertia(m, Vector3::zeros(), Matrix3::zeros()).unwrap();
        tree.attach_body(a, point, BodyGroup::Platform);
        tree.attach_body(b, point, BodyGroup::Platform);
        let poses = vec![
            Transform::identity(),
            Transform::from_translation(Vector3::new(d, 0.0, 0.0)),
            Transform::from_translation(Vector3::new(-d, 0.0, 0.0)),
        ];
        let agg = aggregate_inertia(&tree, &poses, c, None).unwrap();
        assert!(agg.com().norm() < 1e-15);
        let i = agg.params.inertia;
        assert_relative_eq!(i[(0, 0)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(i[(1, 1)], 2.0 * m * d * d, epsilon = 1e-14);
        assert_relative_eq!(i[(2, 2)], 2.0 * m * d * d, epsilon = 1e-14);
    }

    #[test]
    fn world_inertia_rotates_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = build_inertia(
            10.0,
            Vector3::new(0.3, -0.2, 0.1),
            Matrix3::new(3.0, 0.1, 0.2, 0.1, 4.0, 0.3, 0.2, 0.3, 5.0),
        )
        .unwrap();
        assert_eq!(inertia_in_world(&m, &Transform::identity()), m);
        for _ in 0..20 {
            let axis =
                Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
            let r = exp_screw(&MotionVector::revolute(axis), rng.gen_range(-PI..PI)).rotation;
            let t = Transform::new(r, Vector3::new(rng.gen_range(-2.0..2.0), 0.5, -1.0));
            let w = inertia_in_world(&m, &t);
            let (pb, pw) = (extract_inertia(&m).unwrap(), extract_inertia(&w).unwrap());
            assert_relative_eq!(pw.inertia, r * pb.inertia * r.transpose(), epsilon = 1e-10);
            assert_relative_eq!(pw.com, t.transform_point(&pb.com), epsilon = 1e-12);
            assert!((w.mass() - m.mass()).abs() < 1e-12);
        }
    }

    /// Six point masses on the principal axes reproducing mass, centre of
    /// mass and inertia tensor of a body, in body coordinates.
    pub(crate) fn particle_cloud(p: &InertialParameters) -> Vec<(f64, Vector3<f64>)> {
        let cov = Matrix3::identity() * (0.5 * p.inertia.trace()) - p.inertia;
        let eig = SymmetricEigen::new(cov);
        let mut out = Vec::new();
        for k in 0..3 {
            let s = (3.0 * eig.eigenvalues[k].max(0.0) / p.mass).sqrt();
            let v = eig.eigenvectors.column(k).into_owned();
            out.push((p.mass / 6.0, p.com + v * s));
            out.push((p.mass / 6.0, p.com - v * s));
        }
        out
    }

    pub(crate) fn cloud_moments(points: &[(f64, Vector3<f64>)]) -> InertialParameters {
        let mass: f64 = points.iter().map(|(m, _)| m).sum();
        let com = points.iter().map(|(m, p)| p * *m).sum::<Vector3<f64>>() / mass;
        let mut inertia = Matrix3::zeros();
        for (m, p) in points {
            let d = p - com;
            inertia += (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * *m;
        }
        InertialParameters { mass, com, inertia }
    }

    #[test]
    fn cloud_reproduces_body() {
        let p = InertialParameters {
            mass: 4.0,
            com: Vector3::new(0.1, 0.2, -0.3),
            inertia: Matrix3::new(2.0, 0.1, 0.0, 0.1, 3.0, 0.2, 0.0, 0.2, 4.0),
        };
        let back = cloud_moments(&particle_cloud(&p));
        assert_relative_eq!(back.mass, p.mass, epsilon = 1e-14);
        assert_relative_eq!(back.com, p.com, epsilon = 1e-14);
        assert_relative_eq!(back.inertia, p.inertia, epsilon = 1e-12);
    }

    #[test]
    fn machine_aggregate_matches_particle_cloud() {
        let model = PlatformModel::reference().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let mut s = model.nominal_state().unwrap();
            let [lo, hi] = model.config.stroke;
            s.x = [rng.gen_range(lo..hi), rng.gen_range(lo..hi)];
            s.q_arm.iter_mut().for_each(|q| *q = rng.gen_range(-PI..PI));
            s.q_fb[3] = rng.gen_range(-PI..PI);
            model.settle(&mut s).unwrap();
            let kin = model.kinematics(&s).unwrap();
            let agg = machine_inertia(&model, &kin).unwrap();
            let c_inv = kin.poses[model.frames.chassis].inverse();
            let mut cloud = Vec::new();
            for b in model.tree.bodies() {
                let t = c_inv * kin.poses[b.frame];
                for (m, p) in particle_cloud(&extract_inertia(&b.inertia).unwrap()) {
                    cloud.push((m, t.transform_point(&p)));
                }
            }
            let oracle = cloud_moments(&cloud);
            assert!(((agg.mass() - oracle.mass) / oracle.mass).abs() < 1e-12);
            assert!((agg.com() - oracle.com).norm() / oracle.com.norm() < 1e-9);
            assert!((agg.params.inertia - oracle.inertia).norm() / oracle.inertia.norm() < 1e-9);
        }
    }

    #[test]
    fn stroke_sweep_invariants() {
        let model = PlatformModel::reference().unwrap();
        let total = model.total_mass(None);
        let [lo, hi] = model.config.stroke;
        let mut s = model.nominal_state().unwrap();
        s.q_arm[0] = std::f64::consts::FRAC_PI_2;
        let mut previous: Option<Vector3<f64>> = None;
        for i in 0..=200 {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            s.x = [x, x];
            model.settle(&mut s).unwrap();
            let kin = model.kinematics(&s).unwrap();
            let agg = machine_inertia(&model, &kin).unwrap();
            assert!(((agg.mass() - total) / total).abs() < 1e-12);
            assert!(agg.m_c.is_symmetric(1e-9));
            assert!(agg.m_c.is_psd(1e-12));
            assert!(agg.com().y.abs() < 1e-10);
            if let Some(p) = previous {
                assert!((agg.com() - p).norm() < 0.01);
            }
            previous = Some(agg.com());
        }
    }

    #[test]
    fn sensitivity_mirror_symmetry() {
        let model = PlatformModel::reference().unwrap();
        let s = model.nominal_state().unwrap();
        let d = com_sensitivity(&model, &s).unwrap();
        assert!(d.norm() > 0.0);
        assert_relative_eq!(d[(1, 0)], -d[(1, 1)], epsilon = 1e-8);
        assert_relative_eq!(d[(0, 0)], d[(0, 1)], epsilon = 1e-8);
    }

    #[test]
    fn sensitivity_matches_richardson() {
        let model = PlatformModel::reference().unwrap();
        let mut s = model.nominal_state().unwrap();
        s.x = [-0.05, -0.15];
        s.q_arm[0] = 0.7;
        let d = com_sensitivity(&model, &s).unwrap();
        let (h1, h2) = (2e-3, 1e-3);
        let r = (com_sensitivity_with_step(&model, &s, h2).unwrap() * 4.0
            - com_sensitivity_with_step(&model, &s, h1).unwrap())
            / 3.0;
        for k in 0..6 {
            if r[k].abs() > 1e-6 {
                assert!(((d[k] - r[k]) / r[k]).abs() < 1e-4, "entry {k}: {} vs {}", d[k], r[k]);
            }
        }
    }

    #[test]
    fn locked_chain_has_no_sensitivity() {
        // a tree with no suspension bodies: moving the actuator cannot move the CoM
        let mut tree = KinematicTree::new();
        let c = tree.add_fixed("c", None, Transform::identity()).unwrap();
        tree.add_joint("p", Some(c), Transform::identity(), MotionVector::unit_x_prismatic(), JointKind::Prismatic)
            .unwrap();
        tree.attach_body(
            c,
            build_inertia(1.0, Vector3::new(0.2, 0.0, 0.0), Matrix3::zeros()).unwrap(),
            BodyGroup::Platform,
        );
        let com = |x: f64| {
            let poses = vec![Transform::identity(), Transform::from_translation(Vector3::new(x, 0.0, 0.0))];
            aggregate_inertia(&tree, &poses, c, None).unwrap().com()
        };
        assert_eq!((com(0.1) - com(-0.1)).norm(), 0.0);
    }
}
