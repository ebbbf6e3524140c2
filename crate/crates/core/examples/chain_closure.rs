//! Sweeps one suspension chain over its stroke: inner angles, closure and
//! the rate coefficients.

use articulated_suspension::model::PlatformModel;

fn main() -> articulated_suspension::Result<()> {
    let model = PlatformModel::reference()?;
    let g = &model.config.chain;
    let (lo, hi) = g.admissible_stroke();
    println!("admissible stroke [{lo:.4}, {hi:.4}] m, cylinder length limits {:?}", g.length_limits());
    println!("{:>8} {:>9} {:>9} {:>9} {:>10} {:>9} {:>9} {:>9}", "x", "q", "q1", "q2", "closure", "k", "k1", "k2");
    for i in 0..=10 {
        let x = lo + (hi - lo) * i as f64 / 10.0;
        let a = g.inner_angles(x)?;
        let r = g.rate_coefficients(x, 0.0)?;
        println!(
            "{x:>8.4} {:>9.4} {:>9.4} {:>9.4} {:>10.1e} {:>9.4} {:>9.4} {:>9.4}",
            a.q,
            a.q1,
            a.q2,
            a.closure_residual(),
            r.k[0],
            r.k[1],
            r.k[2]
        );
    }
    Ok(())
}
