//! Screws, the exponential map and the twist/wrench pairing.

use std::f64::consts::FRAC_PI_2;

use articulated_suspension::spatial::{
    adjoint, build_inertia, exp_screw, lie_bracket, transform_force, transform_inertia, transform_motion, ForceVector,
    MotionVector, Transform,
};
use nalgebra::{Matrix3, Vector3};

fn main() -> articulated_suspension::Result<()> {
    let s = MotionVector::unit_z_revolute();
    let t = exp_screw(&s, FRAC_PI_2).compose(&Transform::from_translation(Vector3::new(1.0, 0.0, 0.0)));
    println!("exp(z, pi/2) * trans(1,0,0):{:.3}", t.to_homogeneous());

    let nu = MotionVector::from_array([0.1, 0.2, 0.3, 0.0, 0.0, 1.0]);
    let f = ForceVector::from_array([0.0, 0.0, -9.81, 0.3, 0.0, 0.0]);
    let power = nu.dot_force(&f);
    let power_moved = transform_motion(&t, &nu).dot_force(&transform_force(&t, &f));
    println!("power {power:.6} in both frames: {power_moved:.6}");

    let w = MotionVector::from_array([0.0, 1.0, 0.0, 0.5, 0.0, 0.0]);
    println!("[nu, w] = {:?}", lie_bracket(&nu, &w).0.as_slice());
    println!("Ad(T) det = {:.3}", adjoint(&t).determinant());

    let m = build_inertia(2.0, Vector3::new(0.1, 0.0, 0.0), Matrix3::from_diagonal_element(0.05))?;
    let moved = transform_inertia(&m, &t);
    println!(
        "inertia moved: mass {:.1}, symmetric {}, psd {}",
        moved.mass(),
        moved.is_symmetric(1e-12),
        moved.is_psd(1e-12)
    );
    Ok(())
}
