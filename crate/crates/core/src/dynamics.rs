//! Vehicle model: planar single-track kinematics plus the reaction-wheel
//! roll pendulum, integrated together with a fixed-step RK4 scheme.
//!
//! The planar position `(x, y)` evolves with speed `v / cos(delta)` along
//! `yaw + delta`, which makes it the front-wheel contact point. The rear
//! contact point sits one wheelbase behind it along the yaw direction and
//! moves with speed `v` along `yaw`; see [`VehicleState::rear_axle`].

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Largest step accepted by [`integrate_step`] (1 kHz inner loop).
pub const MAX_DYNAMICS_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleState {
    /// Front contact point, east [m].
    pub x: f64,
    /// Front contact point, north [m].
    pub y: f64,
    /// Yaw [rad].
    pub yaw: f64,
    /// Rear-wheel linear velocity [m/s].
    pub speed: f64,
    /// Steering angle [rad].
    pub steering: f64,
    /// Roll angle [rad].
    pub roll: f64,
    /// Roll rate [rad/s].
    pub roll_rate: f64,
    /// Reaction-wheel velocity [rad/s].
    pub wheel_rate: f64,
    /// Reaction-wheel angle [rad], the integral of `wheel_rate`.
    pub wheel_angle: f64,
}

impl VehicleState {
    pub fn is_finite(&self) -> bool {
        [
            self.x,
            self.y,
            self.yaw,
            self.speed,
            self.steering,
            self.roll,
            self.roll_rate,
            self.wheel_rate,
            self.wheel_angle,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Rear-wheel contact point.
    pub fn rear_axle(&self, wheelbase: f64) -> (f64, f64) {
        (
            self.x - wheelbase * self.yaw.cos(),
            self.y - wheelbase * self.yaw.sin(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommandInput {
    /// Commanded rear-wheel velocity [m/s].
    pub v_cmd: f64,
    /// Commanded steering angle [rad].
    pub steering_cmd: f64,
    /// Reaction-wheel torque [N m].
    pub torque: f64,
}

/// Model parameters and actuator limits.
///
/// `com_height`, `roll_inertia` and `wheel_inertia` are placeholder values;
/// only the mass and wheelbase of the real vehicle are known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalParams {
    pub mass: f64,
    pub com_height: f64,
    pub gravity: f64,
    pub roll_inertia: f64,
    pub wheel_inertia: f64,
    pub wheelbase: f64,
    pub v_max: f64,
    pub steering_max: f64,
    pub wheel_rate_max: f64,
    pub torque_max: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 34.0,
            com_height: 0.5,
            gravity: 9.81,
            roll_inertia: 8.0,
            wheel_inertia: 0.05,
            wheelbase: 0.9,
            v_max: 1.5,
            steering_max: 0.7,
            wheel_rate_max: 600.0,
            torque_max: 10.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("com_height", self.com_height),
            ("gravity", self.gravity),
            ("roll_inertia", self.roll_inertia),
            ("wheel_inertia", self.wheel_inertia),
            ("wheelbase", self.wheelbase),
            ("v_max", self.v_max),
            ("steering_max", self.steering_max),
            ("wheel_rate_max", self.wheel_rate_max),
            ("torque_max", self.torque_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(config_err(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if self.roll_inertia <= self.wheel_inertia {
            return Err(config_err("roll_inertia must exceed wheel_inertia"));
        }
        if self.steering_max >= FRAC_PI_2 {
            return Err(config_err("steering_max must be below pi/2"));
        }
        Ok(())
    }

    /// Gravity torque coefficient `m g z_m`.
    pub fn gravity_torque(&self) -> f64 {
        self.mass * self.gravity * self.com_height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarRates {
    pub dx: f64,
    pub dy: f64,
    pub dyaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollRates {
    pub droll: f64,
    pub droll_rate: f64,
    pub dwheel_rate: f64,
}

/// Kinematic bicycle model.
pub fn bicycle_derivative(state: &VehicleState, params: &PhysicalParams) -> Result<PlanarRates> {
    planar_rates(state.yaw, state.speed, state.steering, params.wheelbase)
}

fn planar_rates(yaw: f64, speed: f64, steering: f64, wheelbase: f64) -> Result<PlanarRates> {
    if !(steering.abs() < FRAC_PI_2) {
        return Err(Error::SingularSteering(steering));
    }
    let cos_steer = steering.cos();
    let heading = yaw + steering;
    Ok(PlanarRates {
        dx: speed * heading.cos() / cos_steer,
        dy: speed * heading.sin() / cos_steer,
        dyaw: speed * steering.tan() / wheelbase,
    })
}

/// Roll pendulum with reaction wheel. `torque` is used as given (no saturation).
pub fn roll_derivative(state: &VehicleState, torque: f64, params: &PhysicalParams) -> RollRates {
    roll_rates(state.roll, state.roll_rate, torque, params)
}

fn roll_rates(roll: f64, roll_rate: f64, torque: f64, params: &PhysicalParams) -> RollRates {
    let gravity = params.gravity_torque() * roll.sin();
    RollRates {
        droll: roll_rate,
        droll_rate: (gravity - torque) / params.roll_inertia,
        dwheel_rate: -gravity / params.roll_inertia + torque / params.wheel_inertia,
    }
}

/// Undriven roll energy `J_e/2 * roll_rate^2 + m g z_m cos(roll)`.
pub fn roll_energy(state: &VehicleState, params: &PhysicalParams) -> f64 {
    0.5 * params.roll_inertia * state.roll_rate * state.roll_rate
        + params.gravity_torque() * state.roll.cos()
}

/// Coefficients `[c2, c1, c0]` of the closed-loop characteristic polynomial
/// `s^3 + c2 s^2 + c1 s + c0` of the roll pendulum linearized about upright
/// under `torque = -(k1 roll + k2 roll_rate + k3 wheel_rate)`.
pub fn closed_loop_characteristic(gains: [f64; 3], params: &PhysicalParams) -> [f64; 3] {
    let [k1, k2, k3] = gains;
    let a = params.gravity_torque() / params.roll_inertia;
    let je = params.roll_inertia;
    let jd = params.wheel_inertia;
    [
        k3 / jd - k2 / je,
        -a - k1 / je,
        -a * k3 * (1.0 / jd - 1.0 / je),
    ]
}

/// Linear state feedback that keeps the roll angle at the upright equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceController {
    gains: [f64; 3],
    torque_max: f64,
}

impl BalanceController {
    /// Rejects gains whose linearized closed loop is not Hurwitz.
    pub fn new(gains: [f64; 3], params: &PhysicalParams) -> Result<Self> {
        if gains.iter().any(|k| !k.is_finite()) {
            return Err(config_err("balance gains must be finite"));
        }
        let [c2, c1, c0] = closed_loop_characteristic(gains, params);
        // Routh-Hurwitz for a monic cubic.
        let stable = c2 > 0.0 && c1 > 0.0 && c0 > 0.0 && c2 * c1 > c0;
        if !stable {
            return Err(config_err(format!(
                "balance gains {gains:?} do not stabilize the roll dynamics"
            )));
        }
        Ok(Self {
            gains,
            torque_max: params.torque_max,
        })
    }

    /// Gains placing the linearized closed-loop poles at `poles`.
    pub fn from_poles(poles: [f64; 3], params: &PhysicalParams) -> Result<Self> {
        let [p1, p2, p3] = poles;
        let c2 = -(p1 + p2 + p3);
        let c1 = p1 * p2 + p1 * p3 + p2 * p3;
        let c0 = -p1 * p2 * p3;
        let a = params.gravity_torque() / params.roll_inertia;
        let je = params.roll_inertia;
        let jd = params.wheel_inertia;
        let k3 = -c0 / (a * (1.0 / jd - 1.0 / je));
        let k1 = -je * (c1 + a);
        let k2 = je * (k3 / jd - c2);
        Self::new([k1, k2, k3], params)
    }

    pub fn gains(&self) -> [f64; 3] {
        self.gains
    }

    pub fn feedback(&self, roll: f64, roll_rate: f64, wheel_rate: f64) -> f64 {
        let [k1, k2, k3] = self.gains;
        let torque = -(k1 * roll + k2 * roll_rate + k3 * wheel_rate);
        torque.clamp(-self.torque_max, self.torque_max)
    }
}

/// First-order lag model of the low-level velocity and steering loops.
///
/// A lag of zero means exact tracking. Rate limits are optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuatorConfig {
    pub velocity_lag: f64,
    pub steering_lag: f64,
    pub accel_limit: Option<f64>,
    pub steering_rate_limit: Option<f64>,
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        Self {
            velocity_lag: 0.15,
            steering_lag: 0.1,
            accel_limit: None,
            steering_rate_limit: None,
        }
    }
}

impl ActuatorConfig {
    pub fn exact() -> Self {
        Self {
            velocity_lag: 0.0,
            steering_lag: 0.0,
            accel_limit: None,
            steering_rate_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.velocity_lag >= 0.0 && self.steering_lag >= 0.0) {
            return Err(config_err("actuator lags must be >= 0"));
        }
        for limit in [self.accel_limit, self.steering_rate_limit]
            .into_iter()
            .flatten()
        {
            if !(limit > 0.0) {
                return Err(config_err("actuator rate limits must be > 0"));
            }
        }
        Ok(())
    }
}

fn track(current: f64, target: f64, lag: f64, rate_limit: Option<f64>, dt: f64) -> f64 {
    let mut next = if lag <= 0.0 {
        target
    } else {
        current + (dt / lag).min(1.0) * (target - current)
    };
    if let Some(rate) = rate_limit {
        let max_change = rate * dt;
        next = current + (next - current).clamp(-max_change, max_change);
    }
    next
}

/// Advances the speed and steering actuators toward their targets.
/// Returns the new `(speed, steering)`.
pub fn actuator_step(
    state: &VehicleState,
    v_target: f64,
    steering_target: f64,
    dt: f64,
    params: &PhysicalParams,
    actuator: &ActuatorConfig,
) -> (f64, f64) {
    let speed = track(
        state.speed,
        v_target,
        actuator.velocity_lag,
        actuator.accel_limit,
        dt,
    )
    .clamp(-params.v_max, params.v_max);
    let steering = track(
        state.steering,
        steering_target,
        actuator.steering_lag,
        actuator.steering_rate_limit,
        dt,
    )
    .clamp(-params.steering_max, params.steering_max);
    (speed, steering)
}

// Integrated components: x, y, yaw, roll, roll_rate, wheel_rate, wheel_angle.
type OdeState = [f64; 7];

fn ode(
    y: &OdeState,
    speed: f64,
    steering: f64,
    torque: f64,
    params: &PhysicalParams,
) -> Result<OdeState> {
    let planar = planar_rates(y[2], speed, steering, params.wheelbase)?;
    let roll = roll_rates(y[3], y[4], torque, params);
    Ok([
        planar.dx,
        planar.dy,
        planar.dyaw,
        roll.droll,
        roll.droll_rate,
        roll.dwheel_rate,
        y[5],
    ])
}

fn axpy(y: &OdeState, k: &OdeState, h: f64) -> OdeState {
    let mut out = *y;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += h * ki;
    }
    out
}

/// One classical RK4 step of the combined model. Speed and steering are
/// held constant over the step; the torque is saturated before use and
/// speed, steering and wheel rate are saturated after the step.
pub fn integrate_step(
    state: &VehicleState,
    torque: f64,
    params: &PhysicalParams,
    dt: f64,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt <= MAX_DYNAMICS_DT * (1.0 + 1e-9)) {
        return Err(Error::Input(format!(
            "dynamics step must be in (0, {MAX_DYNAMICS_DT}] s, got {dt}"
        )));
    }
    let torque = torque.clamp(-params.torque_max, params.torque_max);
    let speed = state.speed.clamp(-params.v_max, params.v_max);
    let steering = state
        .steering
        .clamp(-params.steering_max, params.steering_max);

    let y0: OdeState = [
        state.x,
        state.y,
        state.yaw,
        state.roll,
        state.roll_rate,
        state.wheel_rate,
        state.wheel_angle,
    ];
    let k1 = ode(&y0, speed, steering, torque, params)?;
    let k2 = ode(&axpy(&y0, &k1, 0.5 * dt), speed, steering, torque, params)?;
    let k3 = ode(&axpy(&y0, &k2, 0.5 * dt), speed, steering, torque, params)?;
    let k4 = ode(&axpy(&y0, &k3, dt), speed, steering, torque, params)?;
    let mut y = y0;
    for i in 0..7 {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    let next = VehicleState {
        x: y[0],
        y: y[1],
        yaw: y[2],
        speed,
        steering,
        roll: y[3],
        roll_rate: y[4],
        wheel_rate: y[5].clamp(-params.wheel_rate_max, params.wheel_rate_max),
        wheel_angle: y[6],
    };
    if !next.is_finite() {
        return Err(Error::Divergence {
            time: f64::NAN,
            reason: "non-finite vehicle state".into(),
        });
    }
    Ok(next)
}
