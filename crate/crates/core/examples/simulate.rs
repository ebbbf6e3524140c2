//! Fixed against optimized suspension under the default arm and wheel
//! commands. Writes both metric CSVs to `out/example`.
//!
//! `cargo run --release --example simulate -- [seconds]`

use articulated_suspension::model::PlatformModel;
use articulated_suspension::sim::{run_scenario, write_csv, Scenario, SuspensionMode};

fn main() -> articulated_suspension::Result<()> {
    let seconds: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let model = PlatformModel::reference()?;
    let mut results = Vec::new();
    for mode in [SuspensionMode::Fixed, SuspensionMode::Optimized] {
        let mut s = Scenario { duration: seconds, ..Default::default() };
        s.name = format!("{mode:?}").to_lowercase();
        s.suspension.mode = mode;
        let (rows, summary) = run_scenario(&model, &s)?;
        write_csv(&std::path::Path::new("out/example").join(format!("{}.csv", s.name)), &rows, 10)?;
        println!(
            "{:>9}: rms spread {:.0} N, rms com x {:.4} m, min force {:.0} N, {:.2} s",
            s.name, summary.rms_metric, summary.rms_com_x, summary.min_force, summary.wall_time_s
        );
        results.push(summary);
    }
    println!(
        "optimized vs fixed: spread {:+.0}%, com x {:+.0}%",
        100.0 * (results[1].rms_metric / results[0].rms_metric - 1.0),
        100.0 * (results[1].rms_com_x / results[0].rms_com_x - 1.0)
    );
    Ok(())
}
