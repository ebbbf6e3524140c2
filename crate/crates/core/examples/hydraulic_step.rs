//! Step response of one valve-controlled cylinder under a constant load.

use articulated_suspension::hydraulics::{AxisLoad, HydraulicParams, ServoAxis};

fn main() -> articulated_suspension::Result<()> {
    let load = 9000.0;
    let mut axis = ServoAxis::at_rest(
        HydraulicParams::default(),
        AxisLoad { mass: 12_000.0, damping: 5e4 },
        10.0,
        -0.1,
        load,
        2e6,
    )?;
    let target = -0.05;
    println!("{:>5} {:>9} {:>9} {:>8} {:>8} {:>7}", "t", "x", "xd", "p_a MPa", "p_b MPa", "u");
    for i in 1..=3000 {
        axis.step(target, |_| load, 1e-3)?;
        if i % 250 == 0 {
            println!(
                "{:>5.2} {:>9.5} {:>9.5} {:>8.3} {:>8.3} {:>7.3}",
                i as f64 * 1e-3,
                axis.x,
                axis.xd,
                axis.hydraulic.p_a / 1e6,
                axis.hydraulic.p_b / 1e6,
                axis.hydraulic.u
            );
        }
    }
    println!("final error {:.2e} m, clamp events {}", target - axis.x, axis.clamp_events);
    Ok(())
}
