//! Analytic kinematics of the one-DOF four-joint suspension loop.
//!
//! Each side is a triangle with vertices at the bogie pivot `B1`, the
//! cylinder pivot `B3` (both on the base) and the piston-to-bogie joint
//! `Tc`. Side lengths are `|B1 Tc| = L_a`, `|B1 B3| = L_b` and the cylinder
//! length `|B3 Tc| = L_x = L_c0 + x + L_c`. The loop is opened into two
//! serial branches that both end at `Tc`:
//!
//! ```text
//! branch A: fb -> B1 (revolute θ) -> Tc
//! branch B: fb -> B3 (revolute θ1) -> B4 (prismatic x) -> Tc (revolute θ2)
//! ```
//!
//! Geometry lives in the plane frame `P` of each side: origin at `B1`,
//! x forward, y up, z = x × y (pointing to the right of the vehicle). `B1`
//! rotates about `+z_P`; `B3`, `B4` and `Tc` have their local z along
//! `−z_P` so that the closure `q + q1 + q2 + π = 0` holds with every joint
//! using the same screw `s_z`.
//!
//! Rate coefficients come from differentiating the law of cosines. With
//! `q_j = −acos(u_j(L_x))` and `s_j = √(1 − u_j²)`:
//!
//! ```text
//! k_j  = u_j' / s_j
//! k̇_j = (u_j'' / s_j + u_j u_j'² / s_j³) ẋ
//! u   = (La² + Lb² − Lx²) / (2 La Lb)     u'  = −Lx / (La Lb)
//! u1  = (Lx² + Lb² − La²) / (2 Lx Lb)     u1' = (Lx² − Lb² + La²) / (2 Lb Lx²)
//! u2  = (Lx² + La² − Lb²) / (2 Lx La)     u2' = (Lx² − La² + Lb²) / (2 La Lx²)
//! ```

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{inverse_transform_motion, lie_bracket, rot_x, rot_y, rot_z, MotionVector, Transform};

/// Margin kept from the flat-triangle limits when computing the admissible stroke.
pub const STROKE_MARGIN: f64 = 1e-3;

/// Planar geometry of one closed chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    /// |B1 Tc|, on the bogie.
    pub l_a: f64,
    /// Cylinder pivot B3 in plane coordinates (forward, up) relative to B1.
    pub b3: [f64; 2],
    pub l_c0: f64,
    pub l_c: f64,
    /// Constant offsets ψ, ψ1, ψ2 between inner angles and joint readings.
    pub psi: [f64; 3],
}

/// Inner triangle angles, all in (−π, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerAngles {
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
}

impl InnerAngles {
    pub fn closure_residual(&self) -> f64 {
        self.q + self.q1 + self.q2 + PI
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.q, self.q1, self.q2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCoefficients {
    pub k: [f64; 3],
    pub k_dot: [f64; 3],
}

/// Full second-order state of one chain for an actuator trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub x: f64,
    pub xd: f64,
    pub xdd: f64,
    pub angles: InnerAngles,
    /// Joint readings θ, θ1, θ2.
    pub theta: [f64; 3],
    pub rates: RateCoefficients,
}

impl ChainState {
    /// θ̇_j = k_j ẋ
    pub fn theta_dot(&self) -> [f64; 3] {
        self.rates.k.map(|k| k * self.xd)
    }

    /// θ̈_j = k̇_j ẋ + k_j ẍ
    pub fn theta_ddot(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.rates.k_dot[j] * self.xd + self.rates.k[j] * self.xdd;
        }
        out
    }
}

/// Poses relative to the floating base of the chain frames, both branches.
#[derive(Debug, Clone, Copy)]
pub struct ChainPoses {
    pub b1: Transform,
    pub b3: Transform,
    pub b4: Transform,
    /// Tc reached through B3 and B4.
    pub tc: Transform,
    /// Tc reached through B1.
    pub tc_via_b1: Transform,
}

#[derive(Debug, Clone, Copy)]
pub struct ChainMotion {
    pub b1: MotionVector,
    pub b3: MotionVector,
    pub b4: MotionVector,
    pub tc: MotionVector,
    pub tc_via_b1: MotionVector,
}

impl ChainGeometry {
    pub fn l_b(&self) -> f64 {
        Vector2::new(self.b3[0], self.b3[1]).norm()
    }

    /// Direction angle of B1→B3 in the plane.
    pub fn alpha(&self) -> f64 {
        self.b3[1].atan2(self.b3[0])
    }

    pub fn cylinder_length(&self, x: f64) -> f64 {
        self.l_c0 + x + self.l_c
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_a > 0.0) || !(self.l_b() > 0.0) {
            return Err(Error::Config("chain lengths L_a and L_b must be positive".into()));
        }
        if self.l_c0 < 0.0 || self.l_c < 0.0 {
            return Err(Error::Config("chain lengths L_c0 and L_c must be non-negative".into()));
        }
        Ok(())
    }

    /// Open interval of cylinder lengths for which the triangle exists.
    pub fn length_limits(&self) -> (f64, f64) {
        let (a, b) = (self.l_a, self.l_b());
        ((a - b).abs(), a + b)
    }

    /// Actuator positions keeping the triangle at least [`STROKE_MARGIN`]
    /// away from the flat limits.
    pub fn admissible_stroke(&self) -> (f64, f64) {
        let (lo, hi) = self.length_limits();
        let off = self.l_c0 + self.l_c;
        (lo - off + STROKE_MARGIN, hi - off - STROKE_MARGIN)
    }

    fn checked_length(&self, x: f64) -> Result<f64> {
        let lx = self.cylinder_length(x);
        let (lo, hi) = self.length_limits();
        if !(lx > lo && lx < hi) {
            return Err(Error::TriangleDegenerate { length: lx, lower: lo, upper: hi });
        }
        Ok(lx)
    }

    /// Cosines of the three inner angles with their first two derivatives
    /// with respect to `L_x`.
    fn cosines(&self, lx: f64) -> [(f64, f64, f64); 3] {
        let (la, lb) = (self.l_a, self.l_b());
        let (la2, lb2, lx2) = (la * la, lb * lb, lx * lx);
        let u = (la2 + lb2 - lx2) / (2.0 * la * lb);
        let du = -lx / (la * lb);
        let ddu = -1.0 / (la * lb);
        let u1 = (lx2 + lb2 - la2) / (2.0 * lx * lb);
        let du1 = (lx2 - lb2 + la2) / (2.0 * lb * lx2);
        let ddu1 = -(la2 - lb2) / (lb * lx2 * lx);
        let u2 = (lx2 + la2 - lb2) / (2.0 * lx * la);
        let du2 = (lx2 - la2 + lb2) / (2.0 * la * lx2);
        let ddu2 = -(lb2 - la2) / (la * lx2 * lx);
        [(u, du, ddu), (u1, du1, ddu1), (u2, du2, ddu2)]
    }

    /// Inner angles `q, q1, q2 = −acos(·)` from the law of cosines.
    pub fn inner_angles(&self, x: f64) -> Result<InnerAngles> {
        let lx = self.checked_length(x)?;
        let (la, lb) = (self.l_a, self.l_b());
        let q = -((lx * lx - lb * lb - la * la) / (-2.0 * lb * la)).clamp(-1.0, 1.0).acos();
        let q1 = -((la * la - lx * lx - lb * lb) / (-2.0 * lx * lb)).clamp(-1.0, 1.0).acos();
        let q2 = -((lb * lb - lx * lx - la * la) / (-2.0 * lx * la)).clamp(-1.0, 1.0).acos();
        Ok(InnerAngles { q, q1, q2 })
    }

    /// `θ = q + ψ`, `θ1 = q1 + ψ1`, `θ2 = q2 + ψ2`.
    pub fn passive_angles(&self, angles: &InnerAngles) -> [f64; 3] {
        [angles.q + self.psi[0], angles.q1 + self.psi[1], angles.q2 + self.psi[2]]
    }

    pub fn rate_coefficients(&self, x: f64, xd: f64) -> Result<RateCoefficients> {
        let lx = self.checked_length(x)?;
        let mut k = [0.0; 3];
        let mut k_dot = [0.0; 3];
        for (j, (u, du, ddu)) in self.cosines(lx).into_iter().enumerate() {
            let s = (1.0 - u * u).sqrt();
            k[j] = du / s;
            k_dot[j] = (ddu / s + u * du * du / (s * s * s)) * xd;
        }
        Ok(RateCoefficients { k, k_dot })
    }

    pub fn state(&self, x: f64, xd: f64, xdd: f64) -> Result<ChainState> {
        let angles = self.inner_angles(x)?;
        let theta = self.passive_angles(&angles);
        let rates = self.rate_coefficients(x, xd)?;
        Ok(ChainState { x, xd, xdd, angles, theta, rates })
    }
}

/// Fixed frame offsets of one chain relative to the floating base,
/// derived from [`ChainGeometry`] and the lateral position of the pivot.
#[derive(Debug, Clone, Copy)]
pub struct ChainFrames {
    pub geometry: ChainGeometry,
    /// Plane frame P in base coordinates.
    pub plane: Transform,
    /// Joint-zero pose of B1 in base coordinates.
    pub b1_home: Transform,
    /// Joint-zero pose of B3 in base coordinates.
    pub b3_home: Transform,
    /// B3 → B4 before the prismatic joint.
    pub b4_offset: Transform,
    /// B4 → Tc before the revolute joint.
    pub tc_offset: Transform,
    /// B1 → Tc, fixed on the bogie.
    pub tc_on_bogie: Transform,
}

/// Rotation of the plane frame: columns are base x, base z and −base y.
pub fn plane_rotation() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
}

impl ChainFrames {
    /// `pivot` is the position of B1 in base coordinates.
    pub fn new(geometry: ChainGeometry, pivot: Vector3<f64>) -> Result<Self> {
        geometry.validate()?;
        let plane = Transform::new(plane_rotation(), pivot);
        let alpha = geometry.alpha();
        let [psi, psi1, psi2] = geometry.psi;
        let b1_home = plane * Transform::from_rotation(rot_z(alpha - psi));
        let b3_home = plane
            * Transform::new(rot_z(alpha + PI + psi1) * rot_x(PI), Vector3::new(geometry.b3[0], geometry.b3[1], 0.0));
        let b4_offset = Transform::from_translation(Vector3::new(geometry.l_c0, 0.0, 0.0));
        let tc_offset = Transform::new(rot_z(PI - psi2), Vector3::new(geometry.l_c, 0.0, 0.0));
        let tc_on_bogie = Transform::new(rot_y(PI), Vector3::new(geometry.l_a, 0.0, 0.0));
        Ok(Self { geometry, plane, b1_home, b3_home, b4_offset, tc_offset, tc_on_bogie })
    }

    pub fn poses(&self, s: &ChainState) -> ChainPoses {
        let b1 = self.b1_home * Transform::from_rotation(rot_z(s.theta[0]));
        let b3 = self.b3_home * Transform::from_rotation(rot_z(s.theta[1]));
        let b4 = b3 * self.b4_offset * Transform::from_translation(Vector3::new(s.x, 0.0, 0.0));
        let tc = b4 * self.tc_offset * Transform::from_rotation(rot_z(s.theta[2]));
        ChainPoses { b1, b3, b4, tc, tc_via_b1: b1 * self.tc_on_bogie }
    }

    /// Twists of the chain frames given the base twist (both branches).
    pub fn twists(&self, s: &ChainState, base_twist: &MotionVector) -> ChainMotion {
        let p = self.poses(s);
        let sz = MotionVector::unit_z_revolute();
        let sx = MotionVector::unit_x_prismatic();
        let [qd, qd1, qd2] = s.theta_dot();
        let b1 = inverse_transform_motion(&p.b1, base_twist) + sz * qd;
        let tc_via_b1 = inverse_transform_motion(&self.tc_on_bogie, &b1);
        let b3 = inverse_transform_motion(&p.b3, base_twist) + sz * qd1;
        let b4 = inverse_transform_motion(&p.b3.inverse().compose(&p.b4), &b3) + sx * s.xd;
        let tc = inverse_transform_motion(&p.b4.inverse().compose(&p.tc), &b4) + sz * qd2;
        ChainMotion { b1, b3, b4, tc, tc_via_b1 }
    }

    /// Spatial accelerations of the chain frames (both branches). The
    /// velocity-product term at the prismatic joint uses the actuator rate ẋ.
    pub fn accels(&self, s: &ChainState, base_twist: &MotionVector, base_accel: &MotionVector) -> ChainMotion {
        let p = self.poses(s);
        let v = self.twists(s, base_twist);
        let sz = MotionVector::unit_z_revolute();
        let sx = MotionVector::unit_x_prismatic();
        let [qd, qd1, qd2] = s.theta_dot();
        let [qdd, qdd1, qdd2] = s.theta_ddot();
        let b1 = inverse_transform_motion(&p.b1, base_accel) + sz * qdd + lie_bracket(&v.b1, &(sz * qd));
        let tc_via_b1 = inverse_transform_motion(&self.tc_on_bogie, &b1);
        let b3 = inverse_transform_motion(&p.b3, base_accel) + sz * qdd1 + lie_bracket(&v.b3, &(sz * qd1));
        let b4 = inverse_transform_motion(&p.b3.inverse().compose(&p.b4), &b3)
            + sx * s.xdd
            + lie_bracket(&v.b4, &(sx * s.xd));
        let tc =
            inverse_transform_motion(&p.b4.inverse().compose(&p.tc), &b4) + sz * qdd2 + lie_bracket(&v.tc, &(sz * qd2));
        ChainMotion { b1, b3, b4, tc, tc_via_b1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_3;

    fn triangle(la: f64, lb: f64, lx: f64) -> ChainGeometry {
        ChainGeometry { l_a: la, b3: [lb, 0.0], l_c0: lx, l_c: 0.0, psi: [0.0; 3] }
    }

    pub(crate) fn reference_geometry() -> ChainGeometry {
        ChainGeometry { l_a: 1.128, b3: [0.9, 0.6], l_c0: 0.45, l_c: 0.5, psi: [0.2, -0.1, 0.3] }
    }

    fn random_twist(rng: &mut impl Rng) -> MotionVector {
        MotionVector::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn equilateral_triangle() {
        let a = triangle(1.0, 1.0, 1.0).inner_angles(0.0).unwrap();
        for q in a.as_array() {
            assert_relative_eq!(q, -FRAC_PI_3, epsilon = 1e-15);
        }
    }

    #[test]
    fn collinear_limit() {
        let g = triangle(1.0, 1.0, 0.0);
        let a = g.inner_angles(2.0 - 1e-9).unwrap();
        assert!(a.q < -PI + 1e-3);
        assert!(a.q1 < 0.0 && a.q1 > -1e-3);
        assert!(a.q2 < 0.0 && a.q2 > -1e-3);
        assert!(matches!(g.inner_angles(2.0), Err(Error::TriangleDegenerate { .. })));
        assert!(matches!(g.inner_angles(0.0), Err(Error::TriangleDegenerate { .. })));
    }

    #[test]
    fn law_of_sines_reconstruction() {
        let g = triangle(0.8, 0.5, 0.9);
        let a = g.inner_angles(0.0).unwrap();
        assert!(a.closure_residual().abs() < 1e-12);
        // side / sin(opposite angle) is the same for all three sides
        let ratio = 0.9 / (-a.q).sin();
        assert_relative_eq!(0.8 / (-a.q1).sin(), ratio, max_relative = 1e-12);
        assert_relative_eq!(0.5 / (-a.q2).sin(), ratio, max_relative = 1e-12);
        // and the sides rebuilt from two angles and L_x
        let la = ratio * (-a.q1).sin();
        let lb = ratio * (-a.q2).sin();
        assert!((la - 0.8).abs() < 1e-12 && (lb - 0.5).abs() < 1e-12);
    }

    #[test]
    fn passive_offsets() {
        let g = ChainGeometry { psi: [0.0; 3], ..reference_geometry() };
        let a = g.inner_angles(0.0).unwrap();
        assert_eq!(g.passive_angles(&a), a.as_array());
        let g = ChainGeometry { psi: [PI / 6.0, 0.0, 0.0], ..g };
        let t = g.passive_angles(&InnerAngles { q: -FRAC_PI_3, q1: -FRAC_PI_3, q2: -FRAC_PI_3 });
        assert_relative_eq!(t[0], -PI / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn assembled_chain_matches_geometric_construction() {
        let g = reference_geometry();
        let frames = ChainFrames::new(g, Vector3::new(0.0, -0.9, 0.0)).unwrap();
        let x = -0.1;
        let s = g.state(x, 0.0, 0.0).unwrap();
        let p = frames.poses(&s);
        // Tc by plain trigonometry: rotate B1→B3 by q and scale to L_a
        let dir = g.alpha() + s.angles.q;
        let tc_plane = Vector3::new(g.l_a * dir.cos(), g.l_a * dir.sin(), 0.0);
        let tc_base = frames.plane.transform_point(&tc_plane);
        assert!((p.tc.translation - tc_base).norm() < 1e-10);
        assert!(p.tc.max_abs_diff(&p.tc_via_b1) < 1e-10);
        // B3 pivot and the cylinder axis pointing at Tc
        let b3 = frames.plane.transform_point(&Vector3::new(g.b3[0], g.b3[1], 0.0));
        assert!((p.b3.translation - b3).norm() < 1e-12);
        let axis = p.b3.rotation.column(0).into_owned();
        assert!((axis - (tc_base - b3).normalize()).norm() < 1e-10);
        assert_relative_eq!((tc_base - b3).norm(), g.cylinder_length(x), epsilon = 1e-10);
    }

    #[test]
    fn closure_over_stroke() {
        let g = reference_geometry();
        let (lo, hi) = g.admissible_stroke();
        for i in 0..=1000 {
            let x = lo + (hi - lo) * i as f64 / 1000.0;
            let a = g.inner_angles(x).unwrap();
            assert!(a.closure_residual().abs() < 1e-12);
            assert!(a.q < 0.0 && a.q1 < 0.0 && a.q2 < 0.0);
        }
    }

    #[test]
    fn rate_coefficients_sum_and_finite_differences() {
        let g = reference_geometry();
        let (lo, hi) = g.admissible_stroke();
        let h = 1e-7;
        for i in 1..50 {
            let x = lo + (hi - lo) * i as f64 / 50.0;
            let r = g.rate_coefficients(x, 0.3).unwrap();
            assert!((r.k[0] + r.k[1] + r.k[2]).abs() < 1e-12);
            let a = g.inner_angles(x - h).unwrap().as_array();
            let b = g.inner_angles(x + h).unwrap().as_array();
            for j in 0..3 {
                let fd = (b[j] - a[j]) / (2.0 * h);
                assert!(((fd - r.k[j]) / r.k[j]).abs() < 1e-6, "k{j} at x={x}");
            }
            let ra = g.rate_coefficients(x - h, 1.0).unwrap();
            let rb = g.rate_coefficients(x + h, 1.0).unwrap();
            for j in 0..3 {
                let fd = (rb.k[j] - ra.k[j]) / (2.0 * h) * 0.3;
                assert!((fd - r.k_dot[j]).abs() < 1e-6 * (1.0 + r.k_dot[j].abs()));
            }
        }
        let still = g.rate_coefficients(-0.1, 0.0).unwrap();
        assert_eq!(still.k_dot, [0.0; 3]);
    }

    #[test]
    fn branch_twists_agree() {
        let g = reference_geometry();
        let frames = ChainFrames::new(g, Vector3::new(0.0, 0.9, 0.0)).unwrap();
        let s = g.state(-0.1, 0.05, 0.0).unwrap();
        let v = frames.twists(&s, &MotionVector::zeros());
        assert!((v.tc - v.tc_via_b1).max_abs() < 1e-10);

        let still = g.state(-0.1, 0.0, 0.0).unwrap();
        let v = frames.twists(&still, &MotionVector::zeros());
        assert_eq!(v.b1.max_abs() + v.b4.max_abs() + v.tc.max_abs(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let base = random_twist(&mut rng);
        let v = frames.twists(&still, &base);
        let p = frames.poses(&still);
        assert!((v.b4 - inverse_transform_motion(&p.b4, &base)).max_abs() < 1e-12);
        assert!((v.tc - inverse_transform_motion(&p.tc, &base)).max_abs() < 1e-12);
    }

    #[test]
    fn branch_accels_agree() {
        let g = reference_geometry();
        let frames = ChainFrames::new(g, Vector3::new(0.0, 0.9, 0.0)).unwrap();
        let s = g.state(-0.1, 0.05, 0.2).unwrap();
        let a = frames.accels(&s, &MotionVector::zeros(), &MotionVector::zeros());
        assert!((a.tc - a.tc_via_b1).max_abs() < 1e-8);

        // gravity only: adjoint-mapped root acceleration
        let still = g.state(-0.1, 0.0, 0.0).unwrap();
        let grav = MotionVector::from_array([0.0, 0.0, 9.81, 0.0, 0.0, 0.0]);
        let a = frames.accels(&still, &MotionVector::zeros(), &grav);
        let p = frames.poses(&still);
        assert!((a.b4 - inverse_transform_motion(&p.b4, &grav)).max_abs() < 1e-12);
    }

    #[test]
    fn accels_match_twist_derivative() {
        let g = reference_geometry();
        let frames = ChainFrames::new(g, Vector3::new(0.0, 0.9, 0.0)).unwrap();
        let (x0, v0, a0) = (-0.1, 0.05, 0.2);
        let h = 1e-5;
        let at = |t: f64| {
            let s = g.state(x0 + v0 * t + 0.5 * a0 * t * t, v0 + a0 * t, a0).unwrap();
            frames.twists(&s, &MotionVector::zeros())
        };
        let (m, p) = (at(-h), at(h));
        let acc = frames.accels(&g.state(x0, v0, a0).unwrap(), &MotionVector::zeros(), &MotionVector::zeros());
        for (fd, an) in [
            ((p.b1 - m.b1) * (0.5 / h), acc.b1),
            ((p.b4 - m.b4) * (0.5 / h), acc.b4),
            ((p.tc - m.tc) * (0.5 / h), acc.tc),
        ] {
            assert!((fd - an).norm() / an.norm() < 1e-4);
        }
    }

    #[test]
    fn mirrored_side_has_same_angles() {
        let g = reference_geometry();
        let right = ChainFrames::new(g, Vector3::new(0.0, -0.9, 0.0)).unwrap();
        let left = ChainFrames::new(g, Vector3::new(0.0, 0.9, 0.0)).unwrap();
        let s = g.state(-0.05, 0.0, 0.0).unwrap();
        let (pr, pl) = (right.poses(&s), left.poses(&s));
        let mirror = |v: Vector3<f64>| Vector3::new(v.x, -v.y, v.z);
        assert!((mirror(pr.tc.translation) - pl.tc.translation).norm() < 1e-12);
    }
}
