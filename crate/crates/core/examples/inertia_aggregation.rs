//! Whole-machine mass, centre of mass and inertia in the chassis frame as
//! the suspension strokes.

use articulated_suspension::dynamics::{com_sensitivity, machine_inertia};
use articulated_suspension::model::PlatformModel;

fn main() -> articulated_suspension::Result<()> {
    let model = PlatformModel::reference()?;
    let mut s = model.nominal_state()?;
    s.q_arm[0] = std::f64::consts::FRAC_PI_2;
    let [lo, hi] = model.config.stroke;
    for i in 0..=4 {
        let x = lo + (hi - lo) * i as f64 / 4.0;
        s.x = [x; 2];
        model.settle(&mut s)?;
        let agg = machine_inertia(&model, &model.kinematics(&s)?)?;
        let c = agg.com();
        let d = agg.params.inertia.diagonal();
        println!(
            "x {x:+.3}: mass {:.1} kg, com ({:+.4}, {:+.4}, {:.4}) m, Ixx/Iyy/Izz {:.0}/{:.0}/{:.0} kg m^2",
            agg.mass(),
            c.x,
            c.y,
            c.z,
            d.x,
            d.y,
            d.z
        );
    }
    println!("d com / d x at the last stroke:{:.5}", com_sensitivity(&model, &s)?);
    Ok(())
}
