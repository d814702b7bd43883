//! Built-in scenarios: straight driving towards a static obstacle, driving a
//! circle with an obstacle stepping onto the path, and straight driving with
//! crossing pedestrians.
//!
//! Obstacle placement and timing are free choices picked to give the
//! detect / stop / resume sequence of each experiment.

use crate::dynamics::VehicleState;
use crate::sensor::{FaultModel, Obstacle, Shape, Waypoint};

use super::{CommandSegment, Scenario};

pub const BUILTIN_NAMES: [&str; 3] = ["straight", "curve", "crossing"];

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "straight" => Some(scenario_straight()),
        "curve" => Some(scenario_curve()),
        "crossing" => Some(scenario_crossing()),
        _ => None,
    }
}

const PEDESTRIAN: Shape = Shape::Circle { radius: 0.25 };
const INITIAL_ROLL: f64 = 0.02;

fn base(name: &str, duration: f64, v_cmd: f64, steering_cmd: f64) -> Scenario {
    Scenario {
        name: name.to_string(),
        duration,
        command_profile: vec![CommandSegment {
            t: 0.0,
            v_cmd,
            steering_cmd,
        }],
        initial_state: VehicleState {
            steering: steering_cmd,
            roll: INITIAL_ROLL,
            ..Default::default()
        },
        obstacles: Vec::new(),
        fault: FaultModel {
            dropout_prob: 0.0,
            seed: 7,
        },
        physical: Default::default(),
        actuator: Default::default(),
        balance: Default::default(),
        filter: Default::default(),
        fusion: Default::default(),
        safety: Default::default(),
        sensors: crate::sensor::SensorMount::default_cluster(),
        rates: Default::default(),
    }
}

/// Drive straight at 1 m/s towards an obstacle 6 m ahead that is removed
/// once the vehicle has been standing for about 8 s.
pub fn scenario_straight() -> Scenario {
    let mut s = base("straight", 26.0, 1.0, 0.0);
    let mut obstacle = Obstacle::fixed(PEDESTRIAN, 6.25, 0.0);
    obstacle.active_until = Some(STRAIGHT_REMOVAL);
    s.obstacles.push(obstacle);
    s
}

// First standstill of the default straight run is at about 11 s.
const STRAIGHT_REMOVAL: f64 = 19.0;

/// Drive a circle at 0.8 m/s with 0.4 rad steering. A pedestrian walks onto
/// the path ahead, waits, then walks out of the circle.
pub fn scenario_curve() -> Scenario {
    let mut s = base("curve", 30.0, 0.8, 0.4);
    s.fault.dropout_prob = 0.1;
    let wheelbase = s.physical.wheelbase;
    let steering: f64 = 0.4;
    let rear_radius = wheelbase / steering.tan();
    let front_radius = wheelbase / steering.sin();
    let center = (-wheelbase, rear_radius);
    // Angular position of the front point about the turning centre.
    let front_angle0 = (0.0 - center.1).atan2(0.0 - center.0);
    let on_circle = |radius: f64, extra_angle: f64| {
        let a = front_angle0 + extra_angle;
        (center.0 + radius * a.cos(), center.1 + radius * a.sin())
    };
    // Stand on the path at roughly the point reached after 13 s of driving.
    let yaw_rate = 0.8 * steering.tan() / wheelbase;
    let stand_angle = yaw_rate * 13.0;
    let (ox, oy) = on_circle(front_radius + 4.0, stand_angle);
    let (px, py) = on_circle(front_radius, stand_angle);
    let (fx, fy) = on_circle(front_radius + 5.0, stand_angle);
    s.obstacles.push(Obstacle {
        shape: PEDESTRIAN,
        trajectory: vec![
            Waypoint {
                t: 0.0,
                x: ox,
                y: oy,
            },
            Waypoint {
                t: 1.0,
                x: ox,
                y: oy,
            },
            Waypoint {
                t: 9.0,
                x: px,
                y: py,
            },
            Waypoint {
                t: 19.0,
                x: px,
                y: py,
            },
            Waypoint {
                t: 29.0,
                x: fx,
                y: fy,
            },
        ],
        active_from: 0.0,
        active_until: None,
    });
    s
}

/// Drive straight at 0.8 m/s. One pedestrian crosses close ahead from the
/// left at 0.5 m/s; after the vehicle has resumed, a second one steps in
/// from the right and stays on the path.
pub fn scenario_crossing() -> Scenario {
    let mut s = base("crossing", 30.0, 0.8, 0.0);
    let cross_x = 4.0;
    s.obstacles.push(Obstacle {
        shape: PEDESTRIAN,
        trajectory: vec![
            Waypoint {
                t: 0.4,
                x: cross_x,
                y: 3.0,
            },
            Waypoint {
                t: 12.4,
                x: cross_x,
                y: -3.0,
            },
        ],
        active_from: 0.0,
        active_until: None,
    });
    let second_x = 13.0;
    s.obstacles.push(Obstacle {
        shape: PEDESTRIAN,
        trajectory: vec![
            Waypoint {
                t: 0.0,
                x: second_x,
                y: -4.0,
            },
            Waypoint {
                t: 10.0,
                x: second_x,
                y: -4.0,
            },
            Waypoint {
                t: 18.0,
                x: second_x,
                y: 0.0,
            },
        ],
        active_from: 0.0,
        active_until: None,
    });
    s
}
