//! CSV emitters for paths, trajectories, sweeps and figure tables.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::io::Write;

use crate::arbitrage::PortfolioTrajectory;
use crate::bounds::{CellOutcome, SweepResult};
use crate::sim::PathSample;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

/// Writes a header and rows of floats.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_f64(x))).map_err(io_err)?;
    }
    w.flush()
}

/// `time,s,l,reflected`, one row per grid point; `reflected` is 0 or 1.
pub fn write_path_csv<W: Write>(out: W, path: &PathSample) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "s", "l", "reflected"]).map_err(io_err)?;
    for i in 0..path.s.len() {
        w.write_record([
            fmt_f64(path.times[i]),
            fmt_f64(path.s[i]),
            fmt_f64(path.l[i]),
            (path.reflected[i] as u8).to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()
}

/// `time,value,position`.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &PortfolioTrajectory) -> std::io::Result<()> {
    write_table(
        out,
        &["time", "value", "position"],
        (0..traj.value.len()).map(|i| vec![traj.times[i], traj.value[i], traj.position[i]]),
    )
}

/// One row per cell: axis values, then `price,bound,margin,violated`.
/// Undefined cells leave the numeric columns empty and put the error code in
/// `violated`.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = sweep.axes.iter().map(|a| a.param.name().to_string()).collect();
    header.extend(["price", "bound", "margin", "violated"].map(String::from));
    w.write_record(&header).map_err(io_err)?;
    for cell in &sweep.cells {
        let mut rec: Vec<String> = cell.coords.iter().map(|&x| fmt_f64(x)).collect();
        match &cell.outcome {
            CellOutcome::Priced { price, bound, margin, violated } => {
                rec.extend([fmt_f64(*price), fmt_f64(*bound), fmt_f64(*margin), (*violated as u8).to_string()]);
            }
            CellOutcome::Undefined { code } => {
                rec.extend([String::new(), String::new(), String::new(), code.clone()]);
            }
        }
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::sim::{simulate_rgbm_path, TimeGrid};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, 123456.789, -0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn path_csv_parses_back() {
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let path = simulate_rgbm_path(&ModelParams { s0: 1.0, ..ModelParams::figure1() }, &grid, 1).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap(), vec!["time", "s", "l", "reflected"]);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.unwrap();
            assert_eq!(rec[1].parse::<f64>().unwrap(), path.s[i]);
            assert_eq!(rec[2].parse::<f64>().unwrap(), path.l[i]);
            assert_eq!(&rec[3] == "1", path.reflected[i]);
        }
    }
}
