//! Dense convex QP for a handful of variables:
//!
//! ```text
//! minimize ½ dᵀ H d + gᵀ d   subject to  G d ≤ h
//! ```
//!
//! with `H` positive definite. The active set at the optimum has at most `n`
//! linearly independent members, so every candidate working set of size ≤ n
//! is solved through its KKT system and the one that is primal and dual
//! feasible is returned. Intended for n ≤ 3.

use nalgebra::{DMatrix, DVector};

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub d: DVector<f64>,
    /// One multiplier per inequality (zero when inactive).
    pub lambda: DVector<f64>,
    pub objective: f64,
}

fn objective(h: &DMatrix<f64>, g: &DVector<f64>, d: &DVector<f64>) -> f64 {
    0.5 * d.dot(&(h * d)) + g.dot(d)
}

fn subsets(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..m {
        cur.push(i);
        subsets(m, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Returns `None` when the constraints admit no point.
pub fn solve_qp(h: &DMatrix<f64>, g: &DVector<f64>, gm: &DMatrix<f64>, hv: &DVector<f64>) -> Option<QpSolution> {
    let n = g.len();
    let m = hv.len();
    let mut best: Option<QpSolution> = None;
    for k in 0..=n.min(m) {
        let mut sets = Vec::new();
        subsets(m, k, 0, &mut Vec::new(), &mut sets);
        for set in sets {
            let dim = n + k;
            let mut kkt = DMatrix::zeros(dim, dim);
            let mut rhs = DVector::zeros(dim);
            kkt.view_mut((0, 0), (n, n)).copy_from(h);
            for i in 0..n {
                rhs[i] = -g[i];
            }
            for (r, &c) in set.iter().enumerate() {
                for j in 0..n {
                    kkt[(n + r, j)] = gm[(c, j)];
                    kkt[(j, n + r)] = gm[(c, j)];
                }
                rhs[n + r] = hv[c];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            if sol.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let d = sol.rows(0, n).into_owned();
            let slack = gm * &d - hv;
            let feasible = (0..m).all(|i| slack[i] <= FEAS_TOL * (1.0 + hv[i].abs()));
            if !feasible {
                continue;
            }
            let mut lambda = DVector::zeros(m);
            for (r, &c) in set.iter().enumerate() {
                lambda[c] = sol[n + r];
            }
            let obj = objective(h, g, &d);
            let dual_ok = lambda.iter().all(|l| *l >= -1e-10 * (1.0 + g.norm()));
            if dual_ok {
                return Some(QpSolution { d, lambda, objective: obj });
            }
            if best.as_ref().is_none_or(|b| obj < b.objective) {
                best = Some(QpSolution { d, lambda: lambda.map(|l| l.max(0.0)), objective: obj });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn boxed(n: usize, lo: f64, hi: f64) -> (DMatrix<f64>, DVector<f64>) {
        let mut gm = DMatrix::zeros(2 * n, n);
        let mut hv = DVector::zeros(2 * n);
        for i in 0..n {
            gm[(2 * i, i)] = 1.0;
            hv[2 * i] = hi;
            gm[(2 * i + 1, i)] = -1.0;
            hv[2 * i + 1] = -lo;
        }
        (gm, hv)
    }

    #[test]
    fn unconstrained_minimum_inside_box() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = DVector::from_vec(vec![-0.1, 0.2]);
        let (gm, hv) = boxed(2, -10.0, 10.0);
        let s = solve_qp(&h, &g, &gm, &hv).unwrap();
        let newton = h.clone().lu().solve(&(-&g)).unwrap();
        assert_relative_eq!(s.d, newton, epsilon = 1e-14);
        assert!(s.lambda.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn box_clips_one_coordinate() {
        let h = DMatrix::identity(2, 2);
        let g = DVector::from_vec(vec![-5.0, 0.3]);
        let (gm, hv) = boxed(2, -1.0, 1.0);
        let s = solve_qp(&h, &g, &gm, &hv).unwrap();
        assert_relative_eq!(s.d[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.d[1], -0.3, epsilon = 1e-14);
        assert_relative_eq!(s.lambda[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_returns_none() {
        let h = DMatrix::identity(1, 1);
        let g = DVector::from_vec(vec![0.0]);
        let gm = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let hv = DVector::from_vec(vec![-1.0, -1.0]);
        assert!(solve_qp(&h, &g, &gm, &hv).is_none());
    }

    #[test]
    fn matches_projected_gradient_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let a = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
            let h = &a * a.transpose() + DMatrix::identity(2, 2) * 0.1;
            let g = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
            let mut gm = DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
            gm.row_mut(4).copy_from(&nalgebra::RowDVector::from_vec(vec![1.0, 1.0]));
            let hv = DVector::from_fn(5, |_, _| rng.gen_range(0.1..1.0));
            let s = solve_qp(&h, &g, &gm, &hv).unwrap();
            // KKT: H d + g + Gᵀ λ = 0, λ ≥ 0, complementarity
            let stat = &h * &s.d + &g + gm.transpose() * &s.lambda;
            assert!(stat.norm() < 1e-9);
            let slack = &gm * &s.d - &hv;
            for i in 0..5 {
                assert!(slack[i] < 1e-10);
                assert!(s.lambda[i] >= -1e-10);
                assert!((s.lambda[i] * slack[i]).abs() < 1e-9);
            }
            // no feasible sample does better
            for _ in 0..200 {
                let d = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
                if (&gm * &d - &hv).iter().all(|v| *v <= 0.0) {
                    assert!(objective(&h, &g, &d) >= s.objective - 1e-12);
                }
            }
        }
    }
}
