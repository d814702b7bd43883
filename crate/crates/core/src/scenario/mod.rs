//! Scenario definitions, the multi-rate simulation executive, metrics,
//! plot post-processing and seeded sweeps.

mod builtin;
mod metrics;
mod sim;
mod smoothing;
mod sweep;
mod trace;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActuatorConfig, BalanceController, PhysicalParams, VehicleState};
use crate::error::{config_err, Error, Result};
use crate::filter::{FilterConfig, FusionConfig};
use crate::safety::SafetyConfig;
use crate::sensor::{FaultModel, Obstacle, SensorMount};

pub use builtin::{builtin, scenario_crossing, scenario_curve, scenario_straight, BUILTIN_NAMES};
pub use metrics::{compute_metrics, RunMetrics, MOVING_SPEED, STOP_HOLD, STOP_SPEED};
pub use sim::{run, RunOutput};
pub use smoothing::moving_average;
pub use sweep::{sweep, SeedSpec, SweepGrid, SweepPoint, SweepReport, SweepRow, SweepSummary};
pub use trace::{format_sig9, mode_of, Trace, TraceRecord, TRACE_HEADER};

/// Command held from `t` until the next segment starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandSegment {
    pub t: f64,
    pub v_cmd: f64,
    #[serde(default)]
    pub steering_cmd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rates {
    pub dynamics_hz: u32,
    pub control_hz: u32,
    pub sensor_hz: u32,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            dynamics_hz: 1000,
            control_hz: 50,
            sensor_hz: 10,
        }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        if self.control_hz == 0 || self.sensor_hz == 0 {
            return Err(config_err("rates must be > 0"));
        }
        if (self.dynamics_hz as f64) < 1.0 / crate::dynamics::MAX_DYNAMICS_DT {
            return Err(config_err("dynamics_hz must be at least 1000"));
        }
        if !self.dynamics_hz.is_multiple_of(self.control_hz) {
            return Err(config_err("dynamics_hz must be a multiple of control_hz"));
        }
        if self.sensor_hz > self.dynamics_hz {
            return Err(config_err("sensor_hz must not exceed dynamics_hz"));
        }
        Ok(())
    }
}

/// Balancing feedback, given either as closed-loop poles or as raw gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceConfig {
    Poles([f64; 3]),
    Gains([f64; 3]),
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig::Poles([-3.0, -4.0, -5.0])
    }
}

impl BalanceConfig {
    pub fn controller(&self, params: &PhysicalParams) -> Result<BalanceController> {
        match *self {
            BalanceConfig::Poles(p) => BalanceController::from_poles(p, params),
            BalanceConfig::Gains(k) => BalanceController::new(k, params),
        }
    }
}

fn default_sensors() -> [SensorMount; 3] {
    SensorMount::default_cluster()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Simulated time [s].
    pub duration: f64,
    pub command_profile: Vec<CommandSegment>,
    #[serde(default)]
    pub initial_state: VehicleState,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub fault: FaultModel,
    #[serde(default)]
    pub physical: PhysicalParams,
    #[serde(default)]
    pub actuator: ActuatorConfig,
    #[serde(default)]
    pub balance: BalanceConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub safety: SafetyConfig,
    #[serde(default = "default_sensors")]
    pub sensors: [SensorMount; 3],
    #[serde(default)]
    pub rates: Rates,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(config_err("duration must be > 0"));
        }
        if self.command_profile.is_empty() {
            return Err(config_err("command_profile must not be empty"));
        }
        if self.command_profile.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(config_err(
                "command_profile times must be strictly increasing",
            ));
        }
        if self
            .command_profile
            .iter()
            .any(|c| !(c.t.is_finite() && c.v_cmd.is_finite() && c.steering_cmd.is_finite()))
        {
            return Err(config_err("command_profile values must be finite"));
        }
        if !self.initial_state.is_finite() {
            return Err(config_err("initial_state must be finite"));
        }
        self.physical.validate()?;
        self.actuator.validate()?;
        self.balance.controller(&self.physical)?;
        self.filter.validate()?;
        self.fusion.validate()?;
        self.safety.validate()?;
        self.fault.validate()?;
        self.rates.validate()?;
        for s in &self.sensors {
            s.validate()?;
        }
        let ids: Vec<_> = self.sensors.iter().map(|s| s.id).collect();
        if ids != crate::sensor::SensorId::ALL {
            return Err(config_err(
                "sensors must be listed in the order center, left, right",
            ));
        }
        for o in &self.obstacles {
            o.validate()?;
        }
        let control_dt = 1.0 / self.rates.control_hz as f64;
        if (self.filter.dt - control_dt).abs() > 1e-9 {
            return Err(config_err(format!(
                "filter dt {} does not match the control period {control_dt}",
                self.filter.dt
            )));
        }
        Ok(())
    }

    /// Command in force at time `t` (zero before the first segment).
    pub fn command_at(&self, t: f64) -> (f64, f64) {
        let i = self.command_profile.partition_point(|c| c.t <= t);
        if i == 0 {
            (0.0, 0.0)
        } else {
            let c = self.command_profile[i - 1];
            (c.v_cmd, c.steering_cmd)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides to the JSON form, then revalidates.
    /// Keys are dotted paths (`safety.stop_distance`, `obstacles.0.active_until`);
    /// values are parsed as JSON and fall back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for o in overrides {
            apply_override(&mut value, o.as_ref())?;
        }
        let s: Scenario = serde_json::from_value(value)?;
        s.validate()?;
        Ok(s)
    }
}

/// Sets one dotted-path key inside a JSON document.
pub fn apply_override(doc: &mut serde_json::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Input(format!("override {assignment:?} is not key=value")))?;
    let value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            serde_json::Value::Object(map) => {
                if last {
                    map.insert((*part).to_string(), value);
                    return Ok(());
                }
                map.get_mut(*part).ok_or_else(|| {
                    Error::Input(format!("override key {key:?}: no field {part:?}"))
                })?
            }
            serde_json::Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| {
                    Error::Input(format!("override key {key:?}: {part:?} is not an index"))
                })?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    Error::Input(format!("override key {key:?}: index {idx} >= {len}"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(Error::Input(format!(
                    "override key {key:?}: {part:?} is not a container"
                )))
            }
        };
    }
    Err(Error::Input(format!(
        "empty override key in {assignment:?}"
    )))
}
