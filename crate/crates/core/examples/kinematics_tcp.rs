//! Forward kinematics of the whole machine: tool pose, wheel contacts and
//! how the chassis pitches with the stroke.

use articulated_suspension::model::{PlatformModel, WHEEL_NAMES};

fn main() -> articulated_suspension::Result<()> {
    let model = PlatformModel::reference()?;
    let mut s = model.nominal_state()?;
    s.q_arm = vec![1.2, 0.5, -0.5, 0.1, 0.0, 1.0, 0.0];
    for x in [model.config.stroke[0], model.config.nominal_x, model.config.stroke[1]] {
        s.x = [x; 2];
        model.settle(&mut s)?;
        let poses = model.forward_kinematics(&s)?;
        let tcp = poses[model.frames.tcp].translation;
        println!("x = {x:+.3} m: pitch {:+.4} rad, tcp ({:.3}, {:.3}, {:.3})", s.q_fb[4], tcp.x, tcp.y, tcp.z);
        for (name, p) in WHEEL_NAMES.iter().zip(model.contact_points(&poses)) {
            println!("    {name} contact ({:+.3}, {:+.3}, {:+.4})", p.x, p.y, p.z);
        }
    }
    Ok(())
}
