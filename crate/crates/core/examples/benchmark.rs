//! Timing of the core operations. Run with `--release`.

use articulated_suspension::model::PlatformModel;
use articulated_suspension::sim::bench::benchmark;

fn main() -> articulated_suspension::Result<()> {
    let calls = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let report = benchmark(&PlatformModel::reference()?, calls)?;
    print!("{}", report.table());
    Ok(())
}
