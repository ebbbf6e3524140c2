//! One stability-optimizer step from the nominal stroke with the arm
//! reaching forward, then the same problem iterated to rest.

use articulated_suspension::model::PlatformModel;
use articulated_suspension::optimizer::{solve_step, ActuatorState, OptimizerConfig, PlatformStability};

fn main() -> articulated_suspension::Result<()> {
    let model = PlatformModel::reference()?;
    let mut s = model.nominal_state()?;
    s.q_arm = vec![1.57, 0.9, -0.2, 0.1, 0.0, 1.57, 0.0];
    let stab = PlatformStability::new(&model, s);
    let config = OptimizerConfig::default();
    let mut cur = ActuatorState { x: [model.config.nominal_x; 2], ..Default::default() };
    for k in 0..8 {
        let sol = solve_step(&stab, &cur, model.config.stroke, 0.25, &config)?;
        println!(
            "step {k}: x {:+.4} m, xd {:+.4}, cost {:.4e} (forces {:.3e}, angles {:.3e}), {:?} in {} iterations",
            sol.next.x[0], sol.next.xd[0], sol.cost.total, sol.cost.force, sol.cost.angle, sol.status, sol.iterations
        );
        cur = sol.next;
    }
    Ok(())
}
