use serde::{Deserialize, Serialize};

use super::trace::Trace;
use super::Scenario;

/// Speed below which the vehicle counts as standing [m/s].
pub const STOP_SPEED: f64 = 0.01;
/// How long the speed must stay below [`STOP_SPEED`] for a stop [s].
pub const STOP_HOLD: f64 = 0.5;
/// Speed the vehicle must exceed before another stop can be counted [m/s].
pub const MOVING_SPEED: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Smallest ground-truth distance to any active obstacle; `None` if no
    /// obstacle was ever active.
    pub min_true_distance: Option<f64>,
    /// Ground-truth distance at the start of the first stop.
    pub standstill_distance: Option<f64>,
    /// From the first limiter intervention (after start-up) to the first stop [s].
    pub time_to_stop: Option<f64>,
    /// From the first obstacle removal after the first stop until the speed
    /// is back to 95 % of the command [s].
    pub recovery_time: Option<f64>,
    /// Start times of all stop events [s].
    pub stop_times: Vec<f64>,
    pub collided: bool,
    pub control_ticks: usize,
}

impl RunMetrics {
    pub fn stop_events(&self) -> usize {
        self.stop_times.len()
    }
}

/// Start indices of the stop events in `trace`.
///
/// A stop starts when the speed drops below [`STOP_SPEED`] after having
/// exceeded [`MOVING_SPEED`], and counts once it has stayed there for
/// [`STOP_HOLD`].
fn stop_starts(trace: &Trace) -> Vec<usize> {
    let mut stops = Vec::new();
    let mut moving = false;
    let mut slow_since: Option<usize> = None;
    for (i, r) in trace.records.iter().enumerate() {
        let speed = r.speed.abs();
        if !moving {
            if speed >= MOVING_SPEED {
                moving = true;
                slow_since = None;
            }
            continue;
        }
        if speed < STOP_SPEED {
            let start = *slow_since.get_or_insert(i);
            if r.t - trace.records[start].t >= STOP_HOLD - 1e-9 {
                stops.push(start);
                moving = false;
                slow_since = None;
            }
        } else {
            slow_since = None;
        }
    }
    stops
}

pub fn compute_metrics(trace: &Trace, scenario: &Scenario) -> RunMetrics {
    let records = &trace.records;
    let min_true = records
        .iter()
        .map(|r| r.true_min_distance)
        .filter(|d| d.is_finite())
        .min_by(f64::total_cmp);
    let stops = stop_starts(trace);
    let first_stop = stops.first().map(|&i| &records[i]);

    // First limiter intervention after the filter has once reported a free path.
    let max_distance = scenario.safety.max_distance;
    let free = records.iter().position(|r| r.d_crit > max_distance);
    let intervention = free.and_then(|f| {
        records[f..]
            .iter()
            .find(|r| r.d_crit <= max_distance && r.v_cmd > 0.0)
    });
    let time_to_stop = match (intervention, first_stop) {
        (Some(a), Some(b)) if b.t >= a.t => Some(b.t - a.t),
        _ => None,
    };

    let recovery_time = first_stop.and_then(|stop| {
        let removed = scenario
            .obstacles
            .iter()
            .filter_map(|o| o.active_until)
            .filter(|&t| t >= stop.t)
            .min_by(f64::total_cmp)?;
        records
            .iter()
            .find(|r| r.t >= removed && r.v_cmd > 0.0 && r.speed >= 0.95 * r.v_cmd)
            .map(|r| r.t - removed)
    });

    RunMetrics {
        min_true_distance: min_true,
        standstill_distance: first_stop
            .map(|r| r.true_min_distance)
            .filter(|d| d.is_finite()),
        time_to_stop,
        recovery_time,
        stop_times: stops.iter().map(|&i| records[i].t).collect(),
        collided: min_true.is_some_and(|d| d <= 0.0),
        control_ticks: records.len(),
    }
}
