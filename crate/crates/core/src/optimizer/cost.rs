//! Stability angles, smooth rate/acceleration bounds and the multiobjective
//! cost.

use std::f64::consts::FRAC_2_PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Support-polygon edges in counter-clockwise order (seen from above), as
/// `(from, to)` wheel indices: front FR→FL, left FL→RL, rear RL→RR, right RR→FR.
pub const EDGES: [(usize, usize); 4] = [(0, 1), (1, 3), (3, 2), (2, 0)];

/// Tip-over angle about each support edge: the angle, in the vertical plane
/// normal to the edge, between the upward vertical and the perpendicular
/// from the edge to the centre of mass, positive towards the polygon
/// interior. It reaches zero when the ground projection of the centre of
/// mass reaches the edge.
pub fn stability_angles(com: &Vector3<f64>, contacts: &[Vector3<f64>; 4]) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, &(i, j)) in EDGES.iter().enumerate() {
        let a = (contacts[j] - contacts[i]).normalize();
        let d = com - contacts[i];
        let l = d - a * a.dot(&d);
        let up = (Vector3::z() - a * a.z).normalize();
        let inward = up.cross(&a);
        let eta = l.dot(&inward).atan2(l.dot(&up));
        if !(eta > 0.0) {
            return Err(Error::NonPositiveAngle { edge: k, angle: eta });
        }
        out[k] = eta;
    }
    Ok(out)
}

/// Caps and steepness of the arctan-shaped rate and acceleration bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundShape {
    pub v_cap: f64,
    pub a_cap: f64,
    pub gamma_v: f64,
    pub gamma_a: f64,
}

impl Default for BoundShape {
    fn default() -> Self {
        Self { v_cap: 0.1, a_cap: 0.5, gamma_v: 20.0, gamma_a: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub xd_min: f64,
    pub xd_max: f64,
    pub xdd_min: f64,
    pub xdd_max: f64,
}

/// `ẋ_max = v_cap (2/π) atan(γ_v (x_max − x))`, `ẋ_min = −v_cap (2/π) atan(γ_v (x − x_min))`,
/// and the same forms for the acceleration with `a_cap`, `γ_a`.
pub fn smooth_bounds(x: f64, x_min: f64, x_max: f64, shape: &BoundShape) -> RateBounds {
    let s = |cap: f64, gamma: f64, gap: f64| cap * FRAC_2_PI * (gamma * gap).atan();
    RateBounds {
        xd_min: -s(shape.v_cap, shape.gamma_v, x - x_min),
        xd_max: s(shape.v_cap, shape.gamma_v, x_max - x),
        xdd_min: -s(shape.a_cap, shape.gamma_a, x - x_min),
        xdd_max: s(shape.a_cap, shape.gamma_a, x_max - x),
    }
}

/// Pair weights `ψ_ij` (symmetric, diagonal unused) and angle weights `ψ_κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub pairs: [[f64; 4]; 4],
    pub angles: [f64; 4],
}

impl Weights {
    /// Unit weight on front/rear and diagonal pairs, `lateral` on the two
    /// same-axle pairs.
    pub fn axle_weighted(lateral: f64, angles: [f64; 4]) -> Self {
        let mut pairs = [[1.0; 4]; 4];
        for (i, row) in pairs.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for (i, j) in [(0, 1), (2, 3)] {
            pairs[i][j] = lateral;
            pairs[j][i] = lateral;
        }
        Self { pairs, angles }
    }

    pub fn uniform(pair: f64, angle: f64) -> Self {
        let mut pairs = [[pair; 4]; 4];
        for (i, row) in pairs.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Self { pairs, angles: [angle; 4] }
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::axle_weighted(1e-3, [100.0, 10.0, 100.0, 10.0])
    }
}

/// `½ Σ_{i≠j} ψ_ij (f_i − f_j)²`, i.e. each unordered pair counted once.
pub fn force_term(forces: &[f64; 4], w: &Weights) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = forces[i] - forces[j];
            sum += w.pairs[i][j] * d * d;
        }
    }
    sum
}

pub fn angle_term(angles: &[f64; 4], w: &Weights) -> f64 {
    angles.iter().zip(w.angles).map(|(eta, psi)| psi / eta).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub total: f64,
    pub force: f64,
    pub angle: f64,
    /// `None` when the centre of mass left the support polygon; `total` is then `+∞`.
    pub angles: Option<[f64; 4]>,
}

impl CostBreakdown {
    pub fn is_stable(&self) -> bool {
        self.angles.is_some()
    }
}

pub fn evaluate_cost(
    forces: &[f64; 4],
    com: &Vector3<f64>,
    contacts: &[Vector3<f64>; 4],
    w: &Weights,
) -> CostBreakdown {
    let force = force_term(forces, w);
    match stability_angles(com, contacts) {
        Ok(eta) => {
            let angle = angle_term(&eta, w);
            CostBreakdown { total: force + angle, force, angle, angles: Some(eta) }
        }
        Err(_) => CostBreakdown { total: f64::INFINITY, force, angle: f64::INFINITY, angles: None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rectangle(l: f64, w: f64) -> [Vector3<f64>; 4] {
        [Vector3::new(l, -w, 0.0), Vector3::new(l, w, 0.0), Vector3::new(-l, -w, 0.0), Vector3::new(-l, w, 0.0)]
    }

    #[test]
    fn square_support_equal_angles() {
        let eta = stability_angles(&Vector3::new(0.0, 0.0, 1.3), &rectangle(1.0, 1.0)).unwrap();
        for e in eta {
            assert_relative_eq!(e, eta[0], epsilon = 1e-15);
        }
    }

    #[test]
    fn rectangle_right_triangle_oracle() {
        let (l, w, h) = (1.2, 0.9, 1.4);
        let eta = stability_angles(&Vector3::new(0.0, 0.0, h), &rectangle(l, w)).unwrap();
        assert_relative_eq!(eta[0], (l / h).atan(), epsilon = 1e-14);
        assert_relative_eq!(eta[2], (l / h).atan(), epsilon = 1e-14);
        assert_relative_eq!(eta[1], (w / h).atan(), epsilon = 1e-14);
        assert_relative_eq!(eta[3], (w / h).atan(), epsilon = 1e-14);
    }

    #[test]
    fn angle_vanishes_on_edge() {
        let c = rectangle(1.0, 0.8);
        match stability_angles(&Vector3::new(1.0, 0.1, 1.0), &c) {
            Err(Error::NonPositiveAngle { edge, angle }) => {
                assert_eq!(edge, 0);
                assert!(angle.abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let eta = stability_angles(&Vector3::new(1.0 - 1e-6, 0.0, 1.0), &c).unwrap();
        assert!(eta[0] > 0.0 && eta[0] < 2e-6);
        assert!(stability_angles(&Vector3::new(0.0, -0.9, 1.0), &c).is_err());
    }

    #[test]
    fn bounds_saturate_and_pinch() {
        let s = BoundShape { v_cap: 0.1, a_cap: 0.5, gamma_v: 1e4, gamma_a: 1e4 };
        let b = smooth_bounds(0.0, -0.2, 0.2, &s);
        assert_relative_eq!(b.xd_max, 0.1, max_relative = 1e-3);
        assert_relative_eq!(b.xd_min, -0.1, max_relative = 1e-3);
        assert_relative_eq!(b.xdd_max, 0.5, max_relative = 1e-3);
        let edge = smooth_bounds(0.2, -0.2, 0.2, &s);
        assert_eq!(edge.xd_max, 0.0);
        assert_eq!(edge.xdd_max, 0.0);
        let edge = smooth_bounds(-0.2, -0.2, 0.2, &s);
        assert_eq!(edge.xd_min, 0.0);
    }

    #[test]
    fn bound_monotone_in_gap() {
        let s = BoundShape::default();
        let mut previous = f64::INFINITY;
        for i in 0..=400 {
            let x = -0.2 + 0.4 * i as f64 / 400.0;
            let b = smooth_bounds(x, -0.2, 0.2, &s);
            assert!(b.xd_max < previous);
            previous = b.xd_max;
        }
    }

    #[test]
    fn symmetric_cost() {
        let w = Weights::uniform(1.0, 2.0);
        let h = 1.0;
        let c = evaluate_cost(&[5.0; 4], &Vector3::new(0.0, 0.0, h), &rectangle(1.0, 1.0), &w);
        assert_eq!(c.force, 0.0);
        assert_relative_eq!(c.angle, 4.0 * 2.0 / (1.0f64).atan(), epsilon = 1e-13);
    }

    #[test]
    fn zero_angle_weights_isolate_force_term() {
        let w = Weights::uniform(1.0, 0.0);
        let c = evaluate_cost(&[1.0, 2.0, 3.0, 4.0], &Vector3::new(0.0, 0.0, 1.0), &rectangle(1.0, 1.0), &w);
        assert_eq!(c.total, c.force);
    }

    #[test]
    fn pair_enumeration() {
        // four unordered pairs differ by 10 kN
        let f = [10e3, 10e3, 20e3, 20e3];
        assert_relative_eq!(force_term(&f, &Weights::uniform(1.0, 0.0)), 4.0e8, max_relative = 1e-15);
        let mut ordered = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    ordered += (f[i] - f[j]) * (f[i] - f[j]);
                }
            }
        }
        assert_relative_eq!(force_term(&f, &Weights::uniform(1.0, 0.0)), 0.5 * ordered);
    }

    #[test]
    fn reference_weights() {
        let w = Weights::default();
        assert_eq!(w.pairs[0][1], 1e-3);
        assert_eq!(w.pairs[2][3], 1e-3);
        assert_eq!(w.pairs[0][2], 1.0);
        assert_eq!(w.pairs[1][2], 1.0);
        assert_eq!(w.angles, [100.0, 10.0, 100.0, 10.0]);
    }

    #[test]
    fn unstable_cost_is_infinite() {
        let c = evaluate_cost(&[1.0; 4], &Vector3::new(3.0, 0.0, 1.0), &rectangle(1.0, 1.0), &Weights::default());
        assert!(c.total.is_infinite());
        assert!(!c.is_stable());
    }

    proptest! {
        #[test]
        fn force_term_permutation_invariant(f in prop::array::uniform4(-1e4f64..1e4), perm in Just([2usize, 0, 3, 1])) {
            let w = Weights::uniform(1.0, 0.0);
            let g = [f[perm[0]], f[perm[1]], f[perm[2]], f[perm[3]]];
            prop_assert!((force_term(&f, &w) - force_term(&g, &w)).abs() <= 1e-9 * force_term(&f, &w).max(1.0));
        }

        #[test]
        fn interior_points_have_positive_angles(x in -0.99f64..0.99, y in -0.79f64..0.79, h in 0.1f64..3.0) {
            let eta = stability_angles(&Vector3::new(x, y, h), &rectangle(1.0, 0.8)).unwrap();
            prop_assert!(eta.iter().all(|e| *e > 0.0));
        }
    }
}
