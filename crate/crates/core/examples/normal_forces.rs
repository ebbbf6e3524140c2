//! Wheel normal forces for a static pose and for the arm swinging.

use articulated_suspension::model::{PlatformModel, WHEEL_NAMES};
use articulated_suspension::pipeline::evaluate;
use articulated_suspension::sim::force_distribution_metric;

fn main() -> articulated_suspension::Result<()> {
    let model = PlatformModel::reference()?;
    let mut s = model.nominal_state()?;
    s.q_arm = vec![1.57, 0.5, -0.5, 0.1, 0.0, 1.57, 0.0];
    for (label, qd) in [("static", 0.0), ("arm swinging", 2.0)] {
        s.qd_arm[0] = qd;
        s.qdd_arm[1] = 3.0 * qd;
        model.settle(&mut s)?;
        let e = evaluate(&model, &s)?;
        print!("{label:>13}:");
        for (n, f) in WHEEL_NAMES.iter().zip(e.forces.f) {
            print!(" {n} {f:>8.0} N");
        }
        println!(
            "  sum {:.0} N, spread {:.0} N, residual {:.1e}",
            e.forces.sum(),
            force_distribution_metric(&e.forces.f),
            e.inputs.residual(&e.forces)
        );
    }
    println!("weight {:.0} N", model.total_mass(None) * model.gravity());
    Ok(())
}
