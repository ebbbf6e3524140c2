//! Reference platform: declarative config, kinematic tree assembly and the
//! flat-terrain state completion.
//!
//! The tree is
//!
//! ```text
//! world ─ fb_x ─ fb_y ─ fb_z ─ c (yaw) ─ fb_pitch ─ fb (roll)
//!   fb ─ m ─ arm joints … ─ tcp
//!   fb ─ B1_s ─ wF? / wR?, TcA_s        (s = R, L)
//!   fb ─ B3_s ─ B4_s ─ Tc_s
//! ```
//!
//! `c` is the chassis frame: origin at the midpoint of the two bogie pivots,
//! yaw-only orientation, so its z axis stays vertical on flat ground.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{gravity_root, BodyGroup, JointKind, JointValues, KinematicTree, TreeKinematics, GRAVITY};
use crate::spatial::{build_inertia, transform_inertia, MotionVector, SpatialInertia, Transform};
use crate::suspension::{ChainFrames, ChainGeometry, ChainState};

/// Bundled reference platform.
pub const REFERENCE_MODEL: &str = include_str!("../../../configs/reference_model.json");

/// Wheel order used everywhere: front-right, front-left, rear-right, rear-left.
pub const WHEEL_NAMES: [&str; 4] = ["FR", "FL", "RR", "RL"];
/// Suspension order: right, left.
pub const SIDE_NAMES: [&str; 2] = ["R", "L"];

/// Side (0 = right, 1 = left) carrying each wheel.
pub const WHEEL_SIDE: [usize; 4] = [0, 1, 0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Pose {
    pub fn transform(&self) -> Transform {
        Transform::from_xyz_rpy(self.xyz, self.rpy)
    }
}

/// Mass, centre of mass and inertia `[ixx, iyy, izz, ixy, ixz, iyz]` about
/// the centre of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaSpec {
    pub mass: f64,
    #[serde(default)]
    pub com: [f64; 3],
    #[serde(default)]
    pub inertia: [f64; 6],
}

impl InertiaSpec {
    pub fn tensor(&self) -> Matrix3<f64> {
        let [xx, yy, zz, xy, xz, yz] = self.inertia;
        Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
    }

    pub fn spatial(&self) -> Result<SpatialInertia> {
        build_inertia(self.mass, Vector3::from(self.com), self.tensor())
    }

    /// Reflection through the x-z plane.
    pub fn mirrored(&self) -> Self {
        let [xx, yy, zz, xy, xz, yz] = self.inertia;
        Self { mass: self.mass, com: [self.com[0], -self.com[1], self.com[2]], inertia: [xx, yy, zz, -xy, xz, -yz] }
    }
}

/// Platform bodies. `base` is given in `fb`; `bogie`, `cylinder` and
/// `piston` in `fb` coordinates at the nominal stroke for the right side
/// (the left side is mirrored); `wheel` about the wheel centre with
/// `fb`-aligned axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlatformBodies {
    pub base: InertiaSpec,
    pub bogie: InertiaSpec,
    pub cylinder: InertiaSpec,
    pub piston: InertiaSpec,
    pub wheel: InertiaSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmJoint {
    pub name: String,
    /// Parent frame name; defaults to the previous joint (or `m`).
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub offset: Pose,
    pub screw: [f64; 6],
    pub kind: JointKind,
    /// Link inertia in the joint frame.
    #[serde(default)]
    pub inertia: Option<InertiaSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManipulatorConfig {
    /// Pose of the mounting frame `m` in `fb`.
    pub mount: Pose,
    pub joints: Vec<ArmJoint>,
    #[serde(default)]
    pub tcp: Pose,
}

/// Wheel centres relative to the bogie pivot in (forward, up) at the
/// nominal stroke.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WheelLayout {
    pub front: [f64; 2],
    pub rear: [f64; 2],
    pub radius: f64,
    /// Lateral distance of the wheel centres from the vehicle mid-plane.
    pub half_track: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Lateral distance of the bogie pivots from the mid-plane.
    pub pivot_half_width: f64,
    pub wheels: WheelLayout,
    pub chain: ChainGeometry,
    pub nominal_x: f64,
    /// Hard actuator limits `[x_min, x_max]`.
    pub stroke: [f64; 2],
    pub bodies: PlatformBodies,
    pub manipulator: ManipulatorConfig,
}

fn default_gravity() -> f64 {
    GRAVITY
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn reference() -> Self {
        Self::from_json(REFERENCE_MODEL).expect("bundled reference model parses")
    }
}

/// Frame indices of the named frames of the platform tree.
#[derive(Debug, Clone)]
pub struct FrameIndex {
    pub chassis: usize,
    pub fb: usize,
    pub m: usize,
    pub tcp: usize,
    pub arm: Vec<usize>,
    pub b1: [usize; 2],
    pub b3: [usize; 2],
    pub b4: [usize; 2],
    pub tc: [usize; 2],
    pub tca: [usize; 2],
    pub wheels: [usize; 4],
    /// First six frames: fb_x, fb_y, fb_z, c, fb_pitch, fb.
    pub floating: [usize; 6],
}

/// Joint positions, rates and accelerations of the whole machine.
///
/// `q_fb = [x, y, z, yaw, pitch, roll]` in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformState {
    pub q_fb: [f64; 6],
    pub qd_fb: [f64; 6],
    pub qdd_fb: [f64; 6],
    pub q_arm: Vec<f64>,
    pub qd_arm: Vec<f64>,
    pub qdd_arm: Vec<f64>,
    pub q_w: [f64; 4],
    pub qd_w: [f64; 4],
    pub qdd_w: [f64; 4],
    pub x: [f64; 2],
    pub xd: [f64; 2],
    pub xdd: [f64; 2],
}

impl PlatformState {
    pub fn zeros(arm_dof: usize) -> Self {
        Self {
            q_fb: [0.0; 6],
            qd_fb: [0.0; 6],
            qdd_fb: [0.0; 6],
            q_arm: vec![0.0; arm_dof],
            qd_arm: vec![0.0; arm_dof],
            qdd_arm: vec![0.0; arm_dof],
            q_w: [0.0; 4],
            qd_w: [0.0; 4],
            qdd_w: [0.0; 4],
            x: [0.0; 2],
            xd: [0.0; 2],
            xdd: [0.0; 2],
        }
    }

    pub fn set_suspension(&mut self, x: [f64; 2], xd: [f64; 2], xdd: [f64; 2]) {
        self.x = x;
        self.xd = xd;
        self.xdd = xdd;
    }
}

#[derive(Debug, Clone)]
pub struct PlatformModel {
    pub config: ModelConfig,
    pub tree: KinematicTree,
    pub frames: FrameIndex,
    pub chains: [ChainFrames; 2],
    /// Pivot height above the ground with level bogies.
    pub pivot_height: f64,
    theta_nominal: f64,
}

/// Rotation of every wheel frame in `fb`: x forward, z along the spin axis `+y_fb`.
fn wheel_rotation() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0)
}

impl PlatformModel {
    pub fn reference() -> Result<Self> {
        Self::new(ModelConfig::reference())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(ModelConfig::load(path)?)
    }

    pub fn new(config: ModelConfig) -> Result<Self> {
        let cfg = &config;
        cfg.chain.validate()?;
        let w = &cfg.wheels;
        if !(w.radius > 0.0) || !(w.half_track > 0.0) || !(cfg.pivot_half_width > 0.0) {
            return Err(Error::Config("wheel radius and lateral widths must be positive".into()));
        }
        if (w.front[1] - w.rear[1]).abs() > 1e-12 || !(w.front[0] > w.rear[0]) {
            return Err(Error::Config("front and rear wheel centres must sit level, front ahead of rear".into()));
        }
        if !(cfg.stroke[0] < cfg.stroke[1]) {
            return Err(Error::Config("stroke must satisfy x_min < x_max".into()));
        }
        let (lo, hi) = cfg.chain.admissible_stroke();
        if cfg.stroke[0] < lo || cfg.stroke[1] > hi {
            return Err(Error::Config(format!(
                "stroke [{}, {}] exceeds admissible chain range [{lo:.6}, {hi:.6}]",
                cfg.stroke[0], cfg.stroke[1]
            )));
        }
        if !(cfg.nominal_x > cfg.stroke[0] && cfg.nominal_x < cfg.stroke[1]) {
            return Err(Error::Config("nominal_x must lie inside the stroke".into()));
        }

        let mut tree = KinematicTree::new();
        let id = Transform::identity();
        let ex = Vector3::x();
        let ey = Vector3::y();
        let ez = Vector3::z();
        let fx = tree.add_joint("fb_x", None, id, MotionVector::prismatic(ex), JointKind::Prismatic)?;
        let fy = tree.add_joint("fb_y", Some(fx), id, MotionVector::prismatic(ey), JointKind::Prismatic)?;
        let fz = tree.add_joint("fb_z", Some(fy), id, MotionVector::prismatic(ez), JointKind::Prismatic)?;
        let chassis = tree.add_joint("c", Some(fz), id, MotionVector::revolute(ez), JointKind::Revolute)?;
        let pitch = tree.add_joint("fb_pitch", Some(chassis), id, MotionVector::revolute(ey), JointKind::Revolute)?;
        let fb = tree.add_joint("fb", Some(pitch), id, MotionVector::revolute(ex), JointKind::Revolute)?;
        tree.attach_body(fb, cfg.bodies.base.spatial()?, BodyGroup::Platform);

        let m = tree.add_fixed("m", Some(fb), cfg.manipulator.mount.transform())?;
        let mut arm = Vec::new();
        let mut previous = m;
        for j in &cfg.manipulator.joints {
            let parent = match &j.parent {
                Some(name) => tree.frame(name)?,
                None => previous,
            };
            let screw = MotionVector::from_array(j.screw);
            let idx = tree.add_joint(&j.name, Some(parent), j.offset.transform(), screw, j.kind)?;
            if let Some(inertia) = &j.inertia {
                tree.attach_body(idx, inertia.spatial()?, BodyGroup::Manipulator);
            }
            if j.kind != JointKind::Fixed {
                arm.push(idx);
            }
            previous = idx;
        }
        let tcp = tree.add_fixed("tcp", Some(previous), cfg.manipulator.tcp.transform())?;

        let nominal = cfg.chain.state(cfg.nominal_x, 0.0, 0.0)?;
        let mut chains = Vec::with_capacity(2);
        let (mut b1, mut b3, mut b4, mut tc, mut tca) = ([0; 2], [0; 2], [0; 2], [0; 2], [0; 2]);
        let mut wheels = [0; 4];
        for (side, name) in SIDE_NAMES.iter().enumerate() {
            let sign = if side == 0 { -1.0 } else { 1.0 };
            let frames = ChainFrames::new(cfg.chain, Vector3::new(0.0, sign * cfg.pivot_half_width, 0.0))?;
            let bodies = if side == 0 {
                [cfg.bodies.bogie, cfg.bodies.cylinder, cfg.bodies.piston]
            } else {
                [cfg.bodies.bogie.mirrored(), cfg.bodies.cylinder.mirrored(), cfg.bodies.piston.mirrored()]
            };
            let poses = frames.poses(&nominal);
            let sz = MotionVector::unit_z_revolute();
            let i1 = tree.add_joint(&format!("B1_{name}"), Some(fb), frames.b1_home, sz, JointKind::Revolute)?;
            let i3 = tree.add_joint(&format!("B3_{name}"), Some(fb), frames.b3_home, sz, JointKind::Revolute)?;
            let i4 = tree.add_joint(
                &format!("B4_{name}"),
                Some(i3),
                frames.b4_offset,
                MotionVector::unit_x_prismatic(),
                JointKind::Prismatic,
            )?;
            let ic = tree.add_joint(&format!("Tc_{name}"), Some(i4), frames.tc_offset, sz, JointKind::Revolute)?;
            let ia = tree.add_fixed(&format!("TcA_{name}"), Some(i1), frames.tc_on_bogie)?;
            for (frame, pose, spec) in [(i1, poses.b1, bodies[0]), (i3, poses.b3, bodies[1]), (i4, poses.b4, bodies[2])]
            {
                tree.attach_body(frame, transform_inertia(&spec.spatial()?, &pose.inverse()), BodyGroup::Platform);
            }
            for (wheel, centre) in [(side, w.front), (side + 2, w.rear)] {
                let in_fb = Transform::new(wheel_rotation(), Vector3::new(centre[0], sign * w.half_track, centre[1]));
                let offset = poses.b1.inverse() * in_fb;
                let idx =
                    tree.add_joint(&format!("w{}", WHEEL_NAMES[wheel]), Some(i1), offset, sz, JointKind::Revolute)?;
                let spin_frame = Transform::from_rotation(wheel_rotation().transpose());
                tree.attach_body(
                    idx,
                    transform_inertia(&cfg.bodies.wheel.spatial()?, &spin_frame),
                    BodyGroup::Platform,
                );
                wheels[wheel] = idx;
            }
            b1[side] = i1;
            b3[side] = i3;
            b4[side] = i4;
            tc[side] = ic;
            tca[side] = ia;
            chains.push(frames);
        }

        let frames = FrameIndex {
            chassis,
            fb,
            m,
            tcp,
            arm,
            b1,
            b3,
            b4,
            tc,
            tca,
            wheels,
            floating: [fx, fy, fz, chassis, pitch, fb],
        };
        let pivot_height = w.radius - w.front[1];
        Ok(Self { chains: [chains[0], chains[1]], tree, frames, pivot_height, theta_nominal: nominal.theta[0], config })
    }

    pub fn arm_dof(&self) -> usize {
        self.frames.arm.len()
    }

    pub fn gravity(&self) -> f64 {
        self.config.gravity
    }

    pub fn wheel_radius(&self) -> f64 {
        self.config.wheels.radius
    }

    /// Zero state with the suspension at its nominal stroke, settled on the ground.
    pub fn nominal_state(&self) -> Result<PlatformState> {
        let mut s = PlatformState::zeros(self.arm_dof());
        s.x = [self.config.nominal_x; 2];
        self.settle(&mut s)?;
        Ok(s)
    }

    pub fn chain_states(&self, s: &PlatformState) -> Result<[ChainState; 2]> {
        let g = &self.config.chain;
        Ok([g.state(s.x[0], s.xd[0], s.xdd[0])?, g.state(s.x[1], s.xd[1], s.xdd[1])?])
    }

    /// Completes the floating-base coordinates for flat ground: pivot height
    /// fixed, bogies level (base pitch follows the mean bogie joint angle),
    /// zero roll, and planar velocity from the wheel rates (differential
    /// drive about the chassis origin). The planar pose `x, y, yaw` is kept.
    pub fn settle(&self, s: &mut PlatformState) -> Result<()> {
        let chains = self.chain_states(s)?;
        let r = self.wheel_radius();
        let track = 2.0 * self.config.wheels.half_track;
        let mean = |v: &[f64; 4], idx: [usize; 2]| 0.5 * (v[idx[0]] + v[idx[1]]);
        let (right, left) = ([0, 2], [1, 3]);
        let v = 0.5 * r * (mean(&s.qd_w, right) + mean(&s.qd_w, left));
        let dv = 0.5 * r * (mean(&s.qdd_w, right) + mean(&s.qdd_w, left));
        let omega = r * (mean(&s.qd_w, right) - mean(&s.qd_w, left)) / track;
        let domega = r * (mean(&s.qdd_w, right) - mean(&s.qdd_w, left)) / track;
        let yaw = s.q_fb[3];
        let (sy, cy) = yaw.sin_cos();

        let pitch = 0.5 * (chains[0].theta[0] + chains[1].theta[0]) - self.theta_nominal;
        let pitch_d = 0.5 * (chains[0].theta_dot()[0] + chains[1].theta_dot()[0]);
        let pitch_dd = 0.5 * (chains[0].theta_ddot()[0] + chains[1].theta_ddot()[0]);

        s.q_fb[2] = self.pivot_height;
        s.q_fb[4] = pitch;
        s.q_fb[5] = 0.0;
        s.qd_fb = [v * cy, v * sy, 0.0, omega, pitch_d, 0.0];
        s.qdd_fb = [dv * cy - v * omega * sy, dv * sy + v * omega * cy, 0.0, domega, pitch_dd, 0.0];
        Ok(())
    }

    /// Maps the platform state onto the tree's joint vector.
    pub fn joint_values(&self, s: &PlatformState) -> Result<JointValues> {
        let n = self.arm_dof();
        for (what, len) in [("q_arm", s.q_arm.len()), ("qd_arm", s.qd_arm.len()), ("qdd_arm", s.qdd_arm.len())] {
            if len != n {
                return Err(Error::DimensionMismatch { what, expected: n, got: len });
            }
        }
        let chains = self.chain_states(s)?;
        let mut v = JointValues::zeros(self.tree.len());
        let f = &self.frames;
        for (k, &idx) in f.floating.iter().enumerate() {
            v.set(idx, s.q_fb[k], s.qd_fb[k], s.qdd_fb[k]);
        }
        for (k, &idx) in f.arm.iter().enumerate() {
            v.set(idx, s.q_arm[k], s.qd_arm[k], s.qdd_arm[k]);
        }
        for (side, c) in chains.iter().enumerate() {
            let (td, tdd) = (c.theta_dot(), c.theta_ddot());
            v.set(f.b1[side], c.theta[0], td[0], tdd[0]);
            v.set(f.b3[side], c.theta[1], td[1], tdd[1]);
            v.set(f.b4[side], c.x, c.xd, c.xdd);
            v.set(f.tc[side], c.theta[2], td[2], tdd[2]);
        }
        for (k, &idx) in f.wheels.iter().enumerate() {
            v.set(idx, s.q_w[k], s.qd_w[k], s.qdd_w[k]);
        }
        Ok(v)
    }

    /// Poses, twists and accelerations of every frame, gravity included.
    pub fn kinematics(&self, s: &PlatformState) -> Result<TreeKinematics> {
        self.tree.propagate(&self.joint_values(s)?, &gravity_root(self.gravity()))
    }

    pub fn forward_kinematics(&self, s: &PlatformState) -> Result<Vec<Transform>> {
        self.tree.forward_kinematics(&self.joint_values(s)?)
    }

    /// World poses of the four wheel frames only.
    pub fn wheel_poses(&self, s: &PlatformState) -> Result<[Transform; 4]> {
        let chains = self.chain_states(s)?;
        let f = &self.frames;
        let joints = self.tree.joints();
        let mut base = Transform::identity();
        for (k, &idx) in f.floating.iter().enumerate() {
            base = base * joints[idx].local_transform(s.q_fb[k]);
        }
        let b1 = [0, 1].map(|side| base * joints[f.b1[side]].local_transform(chains[side].theta[0]));
        let mut out = [Transform::identity(); 4];
        for (k, &idx) in f.wheels.iter().enumerate() {
            out[k] = b1[k % 2] * joints[idx].local_transform(s.q_w[k]);
        }
        Ok(out)
    }

    /// Wheel contact points (wheel centre minus one radius along world z).
    pub fn contact_points(&self, poses: &[Transform]) -> [Vector3<f64>; 4] {
        let r = self.wheel_radius();
        self.frames.wheels.map(|i| poses[i].translation - Vector3::new(0.0, 0.0, r))
    }

    pub fn total_mass(&self, group: Option<BodyGroup>) -> f64 {
        self.tree.total_mass(group)
    }

    /// Base pitch for the given bogie joint angles on flat ground.
    pub fn theta_nominal(&self) -> f64 {
        self.theta_nominal
    }
}
