use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::RunMetrics;
use super::sim::run;
use super::trace::format_sig9;
use super::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::List(Vec::new())
    }
}

impl SeedSpec {
    fn values(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

/// Cartesian grid over the base scenario. Empty axes keep the base value.
/// `v_cmd` replaces the velocity of every forward segment of the command
/// profile.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub dropout_prob: Vec<f64>,
    pub v_cmd: Vec<f64>,
    pub seeds: SeedSpec,
}

impl SweepGrid {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Grid points in row-major order: dropout, then v_cmd, then seed.
    pub fn points(&self, base: &Scenario) -> Vec<SweepPoint> {
        fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
            if values.is_empty() {
                vec![None]
            } else {
                values.iter().copied().map(Some).collect()
            }
        }
        let seeds = self.seeds.values();
        let seeds = if seeds.is_empty() {
            vec![base.fault.seed]
        } else {
            seeds
        };
        let mut out = Vec::new();
        for p in axis(&self.dropout_prob) {
            for v in axis(&self.v_cmd) {
                for &seed in &seeds {
                    out.push(SweepPoint {
                        index: out.len(),
                        dropout_prob: p,
                        v_cmd: v,
                        seed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub dropout_prob: Option<f64>,
    pub v_cmd: Option<f64>,
    pub seed: u64,
}

impl SweepPoint {
    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        s.fault.seed = self.seed;
        if let Some(p) = self.dropout_prob {
            s.fault.dropout_prob = p;
        }
        if let Some(v) = self.v_cmd {
            for c in &mut s.command_profile {
                if c.v_cmd > 0.0 {
                    c.v_cmd = v;
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub metrics: RunMetrics,
    /// Failure message for aborted or invalid runs.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub runs: usize,
    pub failed: usize,
    pub collisions: usize,
    pub worst_min_true_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

fn run_point(base: &Scenario, point: SweepPoint) -> SweepRow {
    let scenario = point.apply(base);
    match run(&scenario) {
        Ok(out) => SweepRow {
            point,
            failure: out.failure.map(|e| e.to_string()),
            metrics: out.metrics,
        },
        Err(e) => SweepRow {
            point,
            metrics: RunMetrics::default(),
            failure: Some(e.to_string()),
        },
    }
}

/// Runs every grid point in parallel. Rows come back in grid order, so the
/// report does not depend on scheduling.
pub fn sweep(base: &Scenario, grid: &SweepGrid) -> Result<SweepReport> {
    base.validate()?;
    if grid.dropout_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Config(
            "grid dropout_prob values must be in [0, 1]".into(),
        ));
    }
    let points = grid.points(base);
    let rows: Vec<SweepRow> = points.into_par_iter().map(|p| run_point(base, p)).collect();
    let summary = SweepSummary {
        runs: rows.len(),
        failed: rows.iter().filter(|r| r.failure.is_some()).count(),
        collisions: rows.iter().filter(|r| r.metrics.collided).count(),
        worst_min_true_distance: rows
            .iter()
            .filter(|r| r.failure.is_none())
            .filter_map(|r| r.metrics.min_true_distance)
            .min_by(f64::total_cmp),
    };
    Ok(SweepReport { rows, summary })
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record([
            "index",
            "dropout_prob",
            "v_cmd",
            "seed",
            "status",
            "collided",
            "min_true_distance",
            "standstill_distance",
            "time_to_stop",
            "recovery_time",
            "stop_events",
        ])?;
        for r in &self.rows {
            let m = &r.metrics;
            w.write_record([
                r.point.index.to_string(),
                opt(r.point.dropout_prob),
                opt(r.point.v_cmd),
                r.point.seed.to_string(),
                if r.failure.is_some() {
                    "failed".into()
                } else {
                    "ok".into()
                },
                u8::from(m.collided).to_string(),
                opt(m.min_true_distance),
                opt(m.standstill_distance),
                opt(m.time_to_stop),
                opt(m.recovery_time),
                m.stop_events().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
