//! Per-control-tick trace records and their CSV form.
//!
//! Floats are written with 9 significant digits in plain decimal notation;
//! `inf`/`NaN` are written as Rust prints them and missing values as an empty
//! field.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    pub steering: f64,
    pub roll: f64,
    /// Raw readings held at this tick, order (c, l, r).
    pub d_meas: [f64; 3],
    pub d_filt: [f64; 3],
    pub d_crit: f64,
    pub v_cmd: f64,
    pub steering_cmd: f64,
    pub v_safe: f64,
    /// Noise-free wedge distance per sensor.
    pub true_wedge: [Option<f64>; 3],
    /// Ground-truth distance from the vehicle centreline segment to the
    /// nearest active obstacle; infinite when there is none.
    pub true_min_distance: f64,
    pub collision: bool,
}

pub const TRACE_HEADER: [&str; 24] = [
    "t",
    "x",
    "y",
    "yaw",
    "speed",
    "steering",
    "roll",
    "d_meas_c",
    "d_meas_l",
    "d_meas_r",
    "d_filt_c",
    "d_filt_l",
    "d_filt_r",
    "d_crit",
    "v_cmd",
    "steering_cmd",
    "v_safe",
    "true_wedge_c",
    "true_wedge_l",
    "true_wedge_r",
    "true_min_distance",
    "collision",
    "mode",
    "beta",
];

/// Formats a float with 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

/// Safety-filter mode implied by `beta`: 1 (inactive), 2 (scaling), 3 (stop).
pub fn mode_of(d_crit: f64, stop_distance: f64, max_distance: f64) -> u8 {
    if d_crit > max_distance {
        1
    } else if d_crit < stop_distance {
        3
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Safety thresholds used for the derived `mode` and `beta` columns.
    pub stop_distance: f64,
    pub max_distance: f64,
}

impl Trace {
    pub fn new(stop_distance: f64, max_distance: f64) -> Self {
        Self {
            records: Vec::new(),
            stop_distance,
            max_distance,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(TRACE_HEADER)?;
        let span = self.max_distance - self.stop_distance;
        for r in &self.records {
            let beta = if r.d_crit > self.max_distance {
                1.0
            } else if r.d_crit < self.stop_distance {
                0.0
            } else {
                (r.d_crit - self.stop_distance) / span
            };
            let mut row: Vec<String> = vec![
                format_sig9(r.t),
                format_sig9(r.x),
                format_sig9(r.y),
                format_sig9(r.yaw),
                format_sig9(r.speed),
                format_sig9(r.steering),
                format_sig9(r.roll),
            ];
            row.extend(r.d_meas.iter().map(|&v| format_sig9(v)));
            row.extend(r.d_filt.iter().map(|&v| format_sig9(v)));
            row.push(format_sig9(r.d_crit));
            row.push(format_sig9(r.v_cmd));
            row.push(format_sig9(r.steering_cmd));
            row.push(format_sig9(r.v_safe));
            row.extend(r.true_wedge.iter().map(|&v| format_opt(v)));
            row.push(format_sig9(r.true_min_distance));
            row.push(u8::from(r.collision).to_string());
            row.push(mode_of(r.d_crit, self.stop_distance, self.max_distance).to_string());
            row.push(format_sig9(beta));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Trace(e.to_string()))
    }

    /// Parses a trace written by [`Trace::write_csv`]. The thresholds are
    /// not stored in the file and must be supplied.
    pub fn read_csv<R: Read>(input: R, stop_distance: f64, max_distance: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(Error::Trace("unexpected trace header".into()));
        }
        let mut trace = Trace::new(stop_distance, max_distance);
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let num = |i: usize| -> Result<f64> {
                row[i].parse::<f64>().map_err(|e| {
                    Error::Trace(format!("row {}, column {}: {e}", line + 1, TRACE_HEADER[i]))
                })
            };
            let opt = |i: usize| -> Result<Option<f64>> {
                if row[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            };
            trace.records.push(TraceRecord {
                t: num(0)?,
                x: num(1)?,
                y: num(2)?,
                yaw: num(3)?,
                speed: num(4)?,
                steering: num(5)?,
                roll: num(6)?,
                d_meas: [num(7)?, num(8)?, num(9)?],
                d_filt: [num(10)?, num(11)?, num(12)?],
                d_crit: num(13)?,
                v_cmd: num(14)?,
                steering_cmd: num(15)?,
                v_safe: num(16)?,
                true_wedge: [opt(17)?, opt(18)?, opt(19)?],
                true_min_distance: num(20)?,
                collision: match &row[21] {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Trace(format!("bad collision flag {other:?}"))),
                },
            });
        }
        Ok(trace)
    }

    /// Copy with every float rounded to what the CSV form keeps.
    pub fn quantized(&self) -> Self {
        let q = |x: f64| -> f64 { format_sig9(x).parse().unwrap_or(x) };
        let mut out = self.clone();
        for r in &mut out.records {
            *r = TraceRecord {
                t: q(r.t),
                x: q(r.x),
                y: q(r.y),
                yaw: q(r.yaw),
                speed: q(r.speed),
                steering: q(r.steering),
                roll: q(r.roll),
                d_meas: r.d_meas.map(q),
                d_filt: r.d_filt.map(q),
                d_crit: q(r.d_crit),
                v_cmd: q(r.v_cmd),
                steering_cmd: q(r.steering_cmd),
                v_safe: q(r.v_safe),
                true_wedge: r.true_wedge.map(|v| v.map(q)),
                true_min_distance: q(r.true_min_distance),
                collision: r.collision,
            };
        }
        out
    }

    /// Plot export: time, the velocity columns smoothed with a centred
    /// moving average of `window` samples, and the unsmoothed critical
    /// distance.
    pub fn write_plot_csv<W: Write>(&self, out: W, window: usize) -> Result<()> {
        use super::smoothing::moving_average;
        let col = |f: fn(&TraceRecord) -> f64| -> Vec<f64> { self.records.iter().map(f).collect() };
        let speed = moving_average(&col(|r| r.speed), window)?;
        let v_cmd = moving_average(&col(|r| r.v_cmd), window)?;
        let v_safe = moving_average(&col(|r| r.v_safe), window)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["t", "speed_avg", "v_cmd_avg", "v_safe_avg", "d_crit"])?;
        for (i, r) in self.records.iter().enumerate() {
            w.write_record([
                format_sig9(r.t),
                format_sig9(speed[i]),
                format_sig9(v_cmd[i]),
                format_sig9(v_safe[i]),
                format_sig9(r.d_crit),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
