use crate::dynamics::{actuator_step, integrate_step};
use crate::error::{Error, Result};
use crate::filter::{weighted_critical_distance, DistanceFilter};
use crate::sensor::{sample_all, wedge_distance, Point};

use super::metrics::{compute_metrics, RunMetrics};
use super::trace::{Trace, TraceRecord};
use super::Scenario;

#[derive(Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub metrics: RunMetrics,
    /// Set when the run was aborted; the trace then ends at the failure.
    pub failure: Option<Error>,
}

impl RunOutput {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

fn true_min_distance(scenario: &Scenario, front: Point, rear: Point, t: f64) -> f64 {
    scenario
        .obstacles
        .iter()
        .filter(|o| o.is_active(t))
        .map(|o| o.distance_to_segment(rear, front, t))
        .fold(f64::INFINITY, f64::min)
}

/// Runs the closed loop.
///
/// Time advances on the dynamics grid. On each tick, in order: sensors fire
/// if a sensor sample is due, the filter and limiter run if a control tick
/// is due (one trace record per control tick), then the actuators, the
/// balancing feedback and one RK4 step advance the vehicle. Between sensor
/// samples the filters see the last reading (zero-order hold).
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let rates = scenario.rates;
    let dyn_hz = rates.dynamics_hz as u64;
    let sensor_hz = rates.sensor_hz as u64;
    let per_control = dyn_hz / rates.control_hz as u64;
    let dt = 1.0 / dyn_hz as f64;
    let ticks = (scenario.duration * dyn_hz as f64).round() as u64;

    let params = scenario.physical;
    let balance = scenario.balance.controller(&params)?;
    let mut filters = [
        DistanceFilter::new(&scenario.filter)?,
        DistanceFilter::new(&scenario.filter)?,
        DistanceFilter::new(&scenario.filter)?,
    ];
    let mut rng = scenario.fault.rng();
    let mut state = scenario.initial_state;
    let mut readings = [scenario.sensors[0].range_max; 3];
    let mut targets = (0.0, 0.0);
    let mut trace = Trace::new(scenario.safety.stop_distance, scenario.safety.max_distance);
    let mut failure = None;

    for i in 0..ticks {
        let t = i as f64 / dyn_hz as f64;
        if (i * sensor_hz) % dyn_hz < sensor_hz {
            readings = sample_all(
                &state,
                &scenario.sensors,
                &scenario.obstacles,
                &scenario.fault,
                t,
                &mut rng,
            );
        }
        if i % per_control == 0 {
            let mut d_filt = [0.0; 3];
            for k in 0..3 {
                d_filt[k] = filters[k].step(readings[k])?;
            }
            let d_crit = weighted_critical_distance(d_filt, &scenario.sensors, &scenario.fusion);
            let (v_cmd, steering_cmd) = scenario.command_at(t);
            let v_safe = scenario.safety.safe_velocity(v_cmd, d_crit);
            targets = (v_safe, steering_cmd);

            let front = Point::new(state.x, state.y);
            let (rx, ry) = state.rear_axle(params.wheelbase);
            let true_min = true_min_distance(scenario, front, Point::new(rx, ry), t);
            trace.records.push(TraceRecord {
                t,
                x: state.x,
                y: state.y,
                yaw: state.yaw,
                speed: state.speed,
                steering: state.steering,
                roll: state.roll,
                d_meas: readings,
                d_filt,
                d_crit,
                v_cmd,
                steering_cmd,
                v_safe,
                true_wedge: scenario
                    .sensors
                    .map(|m| wedge_distance(&state, &m, &scenario.obstacles, t)),
                true_min_distance: true_min,
                collision: true_min <= 0.0,
            });
        }

        let (speed, steering) = actuator_step(
            &state,
            targets.0,
            targets.1,
            dt,
            &params,
            &scenario.actuator,
        );
        state.speed = speed;
        state.steering = steering;
        let torque = balance.feedback(state.roll, state.roll_rate, state.wheel_rate);
        match integrate_step(&state, torque, &params, dt) {
            Ok(next) => state = next,
            Err(e) => {
                failure = Some(match e {
                    Error::Divergence { reason, .. } => Error::Divergence { time: t, reason },
                    other => Error::Divergence {
                        time: t,
                        reason: other.to_string(),
                    },
                });
                break;
            }
        }
    }

    let metrics = compute_metrics(&trace, scenario);
    Ok(RunOutput {
        trace,
        metrics,
        failure,
    })
}
