//! CSV rows and the JSON run summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{MetricsRow, RunSummary};
use crate::error::Result;

pub const CSV_COLUMNS: [&str; 30] = [
    "t",
    "f_FR",
    "f_FL",
    "f_RR",
    "f_RL",
    "metric",
    "com_x",
    "x_R",
    "x_L",
    "xd_R",
    "xd_L",
    "xdd_R",
    "xdd_L",
    "x_ref_R",
    "x_ref_L",
    "p_a_R",
    "p_a_L",
    "p_b_R",
    "p_b_L",
    "u_R",
    "u_L",
    "f_p_R",
    "f_p_L",
    "err_R",
    "err_L",
    "liftoff",
    "cost",
    "iterations",
    "side_R",
    "side_L",
];

fn write_row(out: &mut impl Write, r: &MetricsRow) -> std::io::Result<()> {
    let a = &r.actuator;
    let [h0, h1] = &r.axes;
    let values = [
        r.t,
        r.forces[0],
        r.forces[1],
        r.forces[2],
        r.forces[3],
        r.metric,
        r.com_x,
        a.x[0],
        a.x[1],
        a.xd[0],
        a.xd[1],
        a.xdd[0],
        a.xdd[1],
        r.x_ref[0],
        r.x_ref[1],
        h0.p_a,
        h1.p_a,
        h0.p_b,
        h1.p_b,
        h0.u,
        h1.u,
        h0.f_p,
        h1.f_p,
        r.tracking_error[0],
        r.tracking_error[1],
    ];
    for v in values {
        write!(out, "{v},")?;
    }
    // per-side forces summed over the bogie's two wheels
    let side = [r.forces[0] + r.forces[2], r.forces[1] + r.forces[3]];
    writeln!(out, "{},{},{},{},{}", r.liftoff as u8, r.cost, r.iterations, side[0], side[1])
}

/// Writes the header and every `every`-th row. Floats use the shortest
/// representation that round-trips, so equal runs give identical files.
pub fn write_csv(path: &Path, rows: &[MetricsRow], every: usize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in rows.iter().step_by(every.max(1)) {
        write_row(&mut out, r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::ActuatorState;
    use crate::sim::AxisRow;

    #[test]
    fn header_and_row_have_same_width() {
        let r = MetricsRow {
            t: 0.5,
            forces: [1.0, 2.0, 3.0, 4.0],
            metric: 10.0,
            com_x: 0.1,
            actuator: ActuatorState::default(),
            x_ref: [0.0; 2],
            axes: [AxisRow::ABSENT; 2],
            tracking_error: [0.0; 2],
            liftoff: false,
            cost: f64::NAN,
            iterations: 0,
        };
        let mut buf = Vec::new();
        write_row(&mut buf, &r).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim_end().split(',').count(), CSV_COLUMNS.len());
        assert!(line.starts_with("0.5,1,2,3,4,10,0.1,"));
        assert!(line.trim_end().ends_with(",4,6"));
    }
}
