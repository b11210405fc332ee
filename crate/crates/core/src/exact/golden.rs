use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::enumerate::Observable;
use crate::error::{Error, Result};
use crate::lattice::MedialGraph;

/// One line of the golden observable table. Midpoint coordinates are in
/// quarter lattice units (sum of the doubled endpoint coordinates).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct GoldenRow {
    pub edge_midpoint_x2: i32,
    pub edge_midpoint_y2: i32,
    pub direction: String,
    pub re_F: f64,
    pub im_F: f64,
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(format!("golden file: {e}"))
}

/// Writes the observable as CSV with 17 significant digits, rows sorted by
/// midpoint then direction.
pub fn write_golden<W: Write>(out: W, medial: &MedialGraph, obs: &Observable) -> Result<()> {
    let mut rows: Vec<(i32, i32, &str, f64, f64)> = Vec::new();
    for (e, edge) in medial.edges().iter().enumerate() {
        let v = obs.get(e).ok_or_else(|| Error::MissingValue(format!("edge {e}")))?;
        let (mx, my) = edge.midpoint_x2();
        rows.push((mx, my, edge.dir.label(), v.re, v.im));
    }
    rows.sort_by(|a, b| (a.1, a.0, a.2).cmp(&(b.1, b.0, b.2)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge_midpoint_x2", "edge_midpoint_y2", "direction", "re_F", "im_F"])
        .map_err(io_err)?;
    for (mx, my, dir, re, im) in rows {
        w.write_record([
            mx.to_string(),
            my.to_string(),
            dir.to_string(),
            format!("{re:.16e}"),
            format!("{im:.16e}"),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_golden<R: Read>(input: R) -> Result<Vec<GoldenRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(io_err))
        .collect()
}
