//! Kinematic tree with recursive pose, twist and spatial-acceleration
//! propagation, per-body Euler–Poincaré wrenches and their projection.
//!
//! Frames are stored in topological order (a parent always precedes its
//! children). Each frame owns the joint that connects it to its parent:
//! `T_parent_child(q) = offset · exp([s] q)`.

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{
    dual_bracket, exp_screw, inverse_transform_motion, lie_bracket, transform_force, ForceVector, MotionVector,
    SpatialInertia, Transform,
};

/// Standard gravity used for the root spatial acceleration.
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

/// Which subsystem a rigid body belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyGroup {
    Platform,
    Manipulator,
}

#[derive(Debug, Clone)]
pub struct JointSpec {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: Transform,
    pub screw: MotionVector,
    pub kind: JointKind,
}

impl JointSpec {
    #[inline]
    pub fn local_transform(&self, q: f64) -> Transform {
        match self.kind {
            JointKind::Fixed => self.offset,
            _ => self.offset * exp_screw(&self.screw, q),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Body {
    pub frame: usize,
    pub inertia: SpatialInertia,
    pub group: BodyGroup,
}

#[derive(Debug, Clone, Default)]
pub struct KinematicTree {
    joints: Vec<JointSpec>,
    bodies: Vec<Body>,
    names: HashMap<String, usize>,
}

/// Joint position, velocity and acceleration, one entry per frame.
/// Entries of fixed joints are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct JointValues {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
}

impl JointValues {
    pub fn zeros(n: usize) -> Self {
        Self { q: vec![0.0; n], qd: vec![0.0; n], qdd: vec![0.0; n] }
    }

    pub fn set(&mut self, index: usize, q: f64, qd: f64, qdd: f64) {
        self.q[index] = q;
        self.qd[index] = qd;
        self.qdd[index] = qdd;
    }
}

/// Output of a full second-order forward pass.
#[derive(Debug, Clone)]
pub struct TreeKinematics {
    /// Pose of each frame in world coordinates.
    pub poses: Vec<Transform>,
    /// Parent-to-child transforms.
    pub local: Vec<Transform>,
    /// Body twists in local coordinates.
    pub twists: Vec<MotionVector>,
    /// Spatial accelerations in local coordinates, gravity included.
    pub accels: Vec<MotionVector>,
}

impl TreeKinematics {
    /// Pose of frame `b` seen from frame `a`.
    pub fn relative(&self, a: usize, b: usize) -> Transform {
        self.poses[a].inverse() * self.poses[b]
    }
}

/// Root acceleration that folds gravity into the recursion: the world frame
/// is given an upward acceleration of magnitude `g`.
pub fn gravity_root(g: f64) -> MotionVector {
    MotionVector::from_parts(Vector3::new(0.0, 0.0, g), Vector3::zeros())
}

impl KinematicTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a frame; `parent` must already exist (or be `None` for a
    /// child of the world).
    pub fn add_joint(
        &mut self,
        name: &str,
        parent: Option<usize>,
        offset: Transform,
        screw: MotionVector,
        kind: JointKind,
    ) -> Result<usize> {
        if let Some(p) = parent {
            if p >= self.joints.len() {
                return Err(Error::Config(format!("parent index {p} of `{name}` does not exist yet")));
            }
        }
        if self.names.contains_key(name) {
            return Err(Error::Config(format!("duplicate frame `{name}`")));
        }
        if kind != JointKind::Fixed && !screw.is_unit_screw() {
            return Err(Error::Config(format!("screw of `{name}` is not a unit screw")));
        }
        if kind == JointKind::Revolute && screw.angular().norm() < 0.5 {
            return Err(Error::Config(format!("revolute joint `{name}` has no angular part")));
        }
        if kind == JointKind::Prismatic && screw.angular().norm() > 0.0 {
            return Err(Error::Config(format!("prismatic joint `{name}` has an angular part")));
        }
        let index = self.joints.len();
        self.joints.push(JointSpec { name: name.to_string(), parent, offset, screw, kind });
        self.names.insert(name.to_string(), index);
        Ok(index)
    }

    pub fn add_fixed(&mut self, name: &str, parent: Option<usize>, offset: Transform) -> Result<usize> {
        self.add_joint(name, parent, offset, MotionVector::zeros(), JointKind::Fixed)
    }

    pub fn attach_body(&mut self, frame: usize, inertia: SpatialInertia, group: BodyGroup) {
        self.bodies.push(Body { frame, inertia, group });
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn frame(&self, name: &str) -> Result<usize> {
        self.names.get(name).copied().ok_or_else(|| Error::UnknownFrame(name.to_string()))
    }

    pub fn total_mass(&self, group: Option<BodyGroup>) -> f64 {
        self.bodies.iter().filter(|b| group.is_none_or(|g| b.group == g)).map(|b| b.inertia.mass()).sum()
    }

    fn check(&self, v: &JointValues) -> Result<()> {
        for (what, len) in [("q", v.q.len()), ("qd", v.qd.len()), ("qdd", v.qdd.len())] {
            if len != self.joints.len() {
                return Err(Error::DimensionMismatch { what, expected: self.joints.len(), got: len });
            }
        }
        Ok(())
    }

    /// World pose of every frame.
    pub fn forward_kinematics(&self, v: &JointValues) -> Result<Vec<Transform>> {
        self.check(v)?;
        let mut poses: Vec<Transform> = Vec::with_capacity(self.joints.len());
        for (i, j) in self.joints.iter().enumerate() {
            let local = j.local_transform(v.q[i]);
            let pose = match j.parent {
                Some(p) => poses[p] * local,
                None => local,
            };
            poses.push(pose);
        }
        Ok(poses)
    }

    /// Full pass: poses, twists `ν_i = Ad ν_λ + s_i q̇_i` and accelerations
    /// `ν̇_i = Ad ν̇_λ + s_i q̈_i + ad_{ν_i} s_i q̇_i`, with world twist zero
    /// and world acceleration `root_accel`.
    pub fn propagate(&self, v: &JointValues, root_accel: &MotionVector) -> Result<TreeKinematics> {
        self.check(v)?;
        let n = self.joints.len();
        let mut out = TreeKinematics {
            poses: Vec::with_capacity(n),
            local: Vec::with_capacity(n),
            twists: Vec::with_capacity(n),
            accels: Vec::with_capacity(n),
        };
        for (i, j) in self.joints.iter().enumerate() {
            let local = j.local_transform(v.q[i]);
            let (pose, parent_twist, parent_accel) = match j.parent {
                Some(p) => (out.poses[p] * local, out.twists[p], out.accels[p]),
                None => (local, MotionVector::zeros(), *root_accel),
            };
            let mut twist = inverse_transform_motion(&local, &parent_twist);
            let mut accel = inverse_transform_motion(&local, &parent_accel);
            if j.kind != JointKind::Fixed {
                let sq = j.screw * v.qd[i];
                twist += sq;
                accel += j.screw * v.qdd[i] + lie_bracket(&twist, &sq);
            }
            out.poses.push(pose);
            out.local.push(local);
            out.twists.push(twist);
            out.accels.push(accel);
        }
        Ok(out)
    }

    /// Twists only (accelerations propagated with zero root acceleration).
    pub fn propagate_twist(&self, v: &JointValues) -> Result<Vec<MotionVector>> {
        Ok(self.propagate(v, &MotionVector::zeros())?.twists)
    }

    pub fn propagate_accel(&self, v: &JointValues, root_accel: &MotionVector) -> Result<Vec<MotionVector>> {
        Ok(self.propagate(v, root_accel)?.accels)
    }

    /// Sum of the body wrenches of `group`, each carried to frame `at`:
    /// `F_at = Σ_i Ad*_{G_i^at} F_i`.
    pub fn total_wrench_at(&self, kin: &TreeKinematics, at: usize, group: Option<BodyGroup>) -> ForceVector {
        let at_inv = kin.poses[at].inverse();
        let mut total = ForceVector::zeros();
        for b in self.bodies.iter().filter(|b| group.is_none_or(|g| b.group == g)) {
            let f = body_wrench(&b.inertia, &kin.twists[b.frame], &kin.accels[b.frame]);
            let t = at_inv * kin.poses[b.frame];
            total += transform_force(&t, &f);
        }
        total
    }

    /// Recursive Newton–Euler backward pass. Returns the generalized force of
    /// every joint (zero for fixed joints) and the wrench each frame transmits
    /// to its parent, in local coordinates.
    pub fn inverse_dynamics(&self, kin: &TreeKinematics) -> (Vec<f64>, Vec<ForceVector>) {
        let n = self.joints.len();
        let mut wrench = vec![ForceVector::zeros(); n];
        for b in &self.bodies {
            wrench[b.frame] += body_wrench(&b.inertia, &kin.twists[b.frame], &kin.accels[b.frame]);
        }
        let mut tau = vec![0.0; n];
        for i in (0..n).rev() {
            let j = &self.joints[i];
            if j.kind != JointKind::Fixed {
                tau[i] = wrench[i].dot_motion(&j.screw);
            }
            if let Some(p) = j.parent {
                let carried = transform_force(&kin.local[i], &wrench[i]);
                wrench[p] += carried;
            }
        }
        (tau, wrench)
    }
}

/// Controlled Euler–Poincaré equation, `F = M ν̇ − ad*_ν (M ν)`.
#[inline]
pub fn body_wrench(m: &SpatialInertia, twist: &MotionVector, accel: &MotionVector) -> ForceVector {
    let mu = m.momentum(twist);
    ForceVector(m.0 * accel.0) - dual_bracket(twist, &mu)
}
