//! Spatial algebra on SE(3): rigid transforms, twists, wrenches and 6×6
//! spatial inertias.
//!
//! Every 6-vector in this crate uses the `[linear; angular]` ordering. For a
//! [`MotionVector`] that is `[v; ω]`, for a [`ForceVector`] it is `[f; τ]`.
//! With this ordering the unit screw along x is `[1 0 0 0 0 0]` and the unit
//! rotation about z is `[0 0 0 0 0 1]`.
//!
//! Twists are body twists: they are expressed in the coordinates of the
//! frame they belong to. A [`Transform`] `T_ab` is the pose of frame `b`
//! seen from frame `a`; `adjoint(T_ab)` maps a twist in `b` coordinates into
//! `a` coordinates and `coadjoint(T_ab)` does the same for wrenches.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this rotation angle `exp_screw` switches to truncated series.
const SERIES_ANGLE: f64 = 1e-6;
/// Tolerance used to accept a screw axis as unit length.
pub const UNIT_SCREW_TOL: f64 = 1e-9;
/// Orthonormality tolerance of a rotation matrix.
pub const ROTATION_TOL: f64 = 1e-10;

/// Skew-symmetric matrix `[a]` such that `[a] b = a × b`.
#[inline]
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Elementary rotation about x.
pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Elementary rotation about y.
pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Elementary rotation about z.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rigid-body pose, an element of SE(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Validating constructor: rejects rotations that are not proper
    /// orthonormal to [`ROTATION_TOL`].
    pub fn try_new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = Self { rotation, translation };
        if !t.is_valid(ROTATION_TOL) {
            return Err(Error::InvalidRotation);
        }
        Ok(t)
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self { rotation, translation: Vector3::zeros() }
    }

    /// Roll-pitch-yaw about fixed x, y, z axes (`R = Rz(yaw) Ry(pitch) Rx(roll)`).
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Self {
            rotation: rot_z(rpy[2]) * rot_y(rpy[1]) * rot_x(rpy[0]),
            translation: Vector3::new(xyz[0], xyz[1], xyz[2]),
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        ortho <= tol && (r.determinant() - 1.0).abs() <= tol
    }

    #[inline]
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    #[inline]
    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform { rotation: rt, translation: -(rt * self.translation) }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// 4×4 homogeneous matrix.
    pub fn to_homogeneous(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Largest absolute entry-wise difference of the homogeneous matrices.
    pub fn max_abs_diff(&self, other: &Transform) -> f64 {
        (self.rotation - other.rotation).abs().max().max((self.translation - other.translation).abs().max())
    }
}

impl Mul for Transform {
    type Output = Transform;
    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

impl Mul<&Transform> for &Transform {
    type Output = Transform;
    fn mul(self, rhs: &Transform) -> Transform {
        self.compose(rhs)
    }
}

macro_rules! six_vector {
    ($name:ident, $lin:ident, $ang:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name(pub Vector6<f64>);

        impl $name {
            pub fn zeros() -> Self {
                Self(Vector6::zeros())
            }

            pub fn from_parts($lin: Vector3<f64>, $ang: Vector3<f64>) -> Self {
                Self(Vector6::new($lin.x, $lin.y, $lin.z, $ang.x, $ang.y, $ang.z))
            }

            pub fn from_array(a: [f64; 6]) -> Self {
                Self(Vector6::from_column_slice(&a))
            }

            #[inline]
            pub fn $lin(&self) -> Vector3<f64> {
                self.0.fixed_rows::<3>(0).into_owned()
            }

            #[inline]
            pub fn $ang(&self) -> Vector3<f64> {
                self.0.fixed_rows::<3>(3).into_owned()
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn max_abs(&self) -> f64 {
                self.0.abs().max()
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: $name) {
                self.0 += rhs.0;
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(self.0 * rhs)
            }
        }
    };
}

six_vector!(MotionVector, linear, angular);
six_vector!(ForceVector, force, moment);

impl MotionVector {
    /// Unit prismatic screw along local x.
    pub fn unit_x_prismatic() -> Self {
        Self::from_array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// Unit revolute screw about local z.
    pub fn unit_z_revolute() -> Self {
        Self::from_array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    }

    pub fn revolute(axis: Vector3<f64>) -> Self {
        Self::from_parts(Vector3::zeros(), axis)
    }

    pub fn prismatic(axis: Vector3<f64>) -> Self {
        Self::from_parts(axis, Vector3::zeros())
    }

    /// Unit screw: unit angular part, or zero angular part with unit linear part.
    pub fn is_unit_screw(&self) -> bool {
        let w = self.angular().norm();
        if w > UNIT_SCREW_TOL {
            (w - 1.0).abs() <= UNIT_SCREW_TOL
        } else {
            (self.linear().norm() - 1.0).abs() <= UNIT_SCREW_TOL
        }
    }

    /// Power pairing `⟨F, ν⟩`.
    #[inline]
    pub fn dot_force(&self, f: &ForceVector) -> f64 {
        self.0.dot(&f.0)
    }
}

impl ForceVector {
    #[inline]
    pub fn dot_motion(&self, v: &MotionVector) -> f64 {
        self.0.dot(&v.0)
    }
}

/// Exponential map `e^{[s] q}` of a unit screw.
///
/// Panics when `s` is not a unit screw; that is a contract violation of the
/// caller, not a runtime condition.
pub fn exp_screw(s: &MotionVector, q: f64) -> Transform {
    assert!(s.is_unit_screw(), "exp_screw requires a unit screw, got {:?}", s.0.as_slice());
    let w = s.angular();
    let v = s.linear();
    if w.norm() <= UNIT_SCREW_TOL {
        return Transform::from_translation(v * q);
    }
    let wx = skew(&w);
    let wx2 = wx * wx;
    let (a, b, c) = if q.abs() < SERIES_ANGLE {
        let q2 = q * q;
        // sin q, 1 - cos q, q - sin q
        (q - q * q2 / 6.0, q2 / 2.0 - q2 * q2 / 24.0, q * q2 / 6.0 - q * q2 * q2 / 120.0)
    } else {
        let (sq, cq) = q.sin_cos();
        (sq, 1.0 - cq, q - sq)
    };
    let rotation = Matrix3::identity() + wx * a + wx2 * b;
    let translation = (Matrix3::identity() * q + wx * b + wx2 * c) * v;
    Transform { rotation, translation }
}

/// Adjoint `Ad_T = [[R, [p]R], [0, R]]`.
#[inline]
pub fn adjoint(t: &Transform) -> Matrix6<f64> {
    let r = t.rotation;
    let pr = skew(&t.translation) * r;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&pr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m
}

/// Coadjoint, `Ad_{T⁻¹}ᵀ = [[R, 0], [[p]R, R]]`: carries wrenches in the
/// same direction as [`adjoint`] carries twists.
#[inline]
pub fn coadjoint(t: &Transform) -> Matrix6<f64> {
    let r = t.rotation;
    let pr = skew(&t.translation) * r;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&pr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m
}

/// Twist of `b` in `a` coordinates given `T_ab`, without building the 6×6.
#[inline]
pub fn transform_motion(t: &Transform, v: &MotionVector) -> MotionVector {
    let w = t.rotation * v.angular();
    let lin = t.rotation * v.linear() + t.translation.cross(&w);
    MotionVector::from_parts(lin, w)
}

/// Twist of `a` expressed in `b` coordinates given `T_ab`, i.e. `Ad_{T⁻¹} v`.
#[inline]
pub fn inverse_transform_motion(t: &Transform, v: &MotionVector) -> MotionVector {
    let rt = t.rotation.transpose();
    let w = v.angular();
    let lin = rt * (v.linear() - t.translation.cross(&w));
    MotionVector::from_parts(lin, rt * w)
}

/// Wrench given in `b` coordinates carried to `a` coordinates, `T = T_ab`.
#[inline]
pub fn transform_force(t: &Transform, f: &ForceVector) -> ForceVector {
    let force = t.rotation * f.force();
    let moment = t.rotation * f.moment() + t.translation.cross(&force);
    ForceVector::from_parts(force, moment)
}

/// Matrix of the Lie bracket, `ad_ν = [[[ω], [v]], [0, [ω]]]`.
pub fn ad_matrix(nu: &MotionVector) -> Matrix6<f64> {
    let w = skew(&nu.angular());
    let v = skew(&nu.linear());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&v);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}

/// Lie bracket `ad_ν w = [ν, w]`.
#[inline]
pub fn lie_bracket(nu: &MotionVector, w: &MotionVector) -> MotionVector {
    let om = nu.angular();
    let v = nu.linear();
    let lin = om.cross(&w.linear()) + v.cross(&w.angular());
    MotionVector::from_parts(lin, om.cross(&w.angular()))
}

/// Dual bracket `ad*_ν F = ad_νᵀ F`, so that `⟨ad*_ν F, w⟩ = ⟨F, ad_ν w⟩`.
///
/// With this sign the Euler–Poincaré wrench is `F = M ν̇ − ad*_ν (M ν)`.
#[inline]
pub fn dual_bracket(nu: &MotionVector, f: &ForceVector) -> ForceVector {
    let om = nu.angular();
    let v = nu.linear();
    let fl = f.force();
    let tau = f.moment();
    // ad_νᵀ = [[-[ω], 0], [-[v], -[ω]]]
    let force = -om.cross(&fl);
    let moment = -v.cross(&fl) - om.cross(&tau);
    ForceVector::from_parts(force, moment)
}

/// Symmetric 6×6 spatial inertia
/// `[[m I, -m[r]], [m[r], 𝓘 - m[r]²]]` about the frame origin, with `𝓘` the
/// rotational inertia about the centre of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialInertia(pub Matrix6<f64>);

impl Default for SpatialInertia {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for SpatialInertia {
    type Output = SpatialInertia;
    fn add(self, rhs: SpatialInertia) -> SpatialInertia {
        SpatialInertia(self.0 + rhs.0)
    }
}

impl AddAssign for SpatialInertia {
    fn add_assign(&mut self, rhs: SpatialInertia) {
        self.0 += rhs.0;
    }
}

/// Mass, centre of mass and inertia tensor about the centre of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertialParameters {
    pub mass: f64,
    pub com: Vector3<f64>,
    pub inertia: Matrix3<f64>,
}

impl SpatialInertia {
    pub fn zero() -> Self {
        Self(Matrix6::zeros())
    }

    pub fn mass(&self) -> f64 {
        self.0[(0, 0)]
    }

    pub fn momentum(&self, nu: &MotionVector) -> ForceVector {
        ForceVector(self.0 * nu.0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0 - self.0.transpose()).abs().max() <= tol
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.0 + self.0.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol * self.0.abs().max().max(1.0)
    }
}

/// Builds `M` from mass, centre of mass and the inertia tensor about the
/// centre of mass.
pub fn build_inertia(mass: f64, com: Vector3<f64>, inertia: Matrix3<f64>) -> Result<SpatialInertia> {
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    let rx = skew(&com);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * mass));
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-rx * mass));
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(rx * mass));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(inertia - rx * rx * mass));
    Ok(SpatialInertia(m))
}

/// Left inverse of [`build_inertia`]: mass from entry (1,1), centre of mass
/// from the lower-left skew block, tensor by adding back `m[r]²`.
pub fn extract_inertia(m: &SpatialInertia) -> Result<InertialParameters> {
    let mat = &m.0;
    let mass = mat[(0, 0)];
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    // 1-based (6,2), (4,3), (5,1)
    let com = Vector3::new(mat[(5, 1)], mat[(3, 2)], mat[(4, 0)]) / mass;
    let rx = skew(&com);
    let inertia = mat.fixed_view::<3, 3>(3, 3).into_owned() + rx * rx * mass;
    Ok(InertialParameters { mass, com, inertia })
}

/// Re-expresses a body inertia given in its own frame `b` in frame `a`,
/// where `t = T_ab` is the pose of the body frame in `a`:
/// `M_a = Ad_{T⁻¹}ᵀ M_b Ad_{T⁻¹}`.
///
/// A point mass at the body origin placed by a pure translation `d` ends up
/// with centre of mass `+d` in the new frame.
pub fn transform_inertia(m: &SpatialInertia, t: &Transform) -> SpatialInertia {
    let x = adjoint(&t.inverse());
    SpatialInertia(x.transpose() * m.0 * x)
}
