//! Gain-scheduled velocity limiter.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyConfig {
    /// Distance at which the vehicle must be at rest [m].
    pub stop_distance: f64,
    /// Distance beyond which obstacles are ignored [m].
    pub max_distance: f64,
    /// Also zero negative commands when an obstacle is inside the stopping
    /// distance. Off by default: reverse commands pass through unchanged.
    pub block_reverse_inside_stop: bool,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            stop_distance: 0.5,
            max_distance: 2.0,
            block_reverse_inside_stop: false,
        }
    }
}

impl SafetyConfig {
    pub fn new(stop_distance: f64, max_distance: f64) -> Result<Self> {
        let cfg = Self {
            stop_distance,
            max_distance,
            block_reverse_inside_stop: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stop_distance >= 0.0
            && self.stop_distance < self.max_distance
            && self.max_distance.is_finite())
        {
            return Err(config_err(format!(
                "need 0 <= stop_distance < max_distance, got {} and {}",
                self.stop_distance, self.max_distance
            )));
        }
        Ok(())
    }

    /// Velocity scaling factor in [0, 1] for a critical distance.
    ///
    /// 1 beyond `max_distance`, 0 inside `stop_distance`, linear in between.
    /// Both breakpoints take the value of the linear ramp.
    pub fn beta(&self, critical: f64) -> f64 {
        if critical > self.max_distance {
            1.0
        } else if critical < self.stop_distance {
            0.0
        } else {
            (critical - self.stop_distance) / (self.max_distance - self.stop_distance)
        }
    }

    /// Limits `v_cmd` to `min(beta * v_cmd, v_cmd)`.
    pub fn safe_velocity(&self, v_cmd: f64, critical: f64) -> f64 {
        if self.block_reverse_inside_stop && critical < self.stop_distance && v_cmd < 0.0 {
            return 0.0;
        }
        (self.beta(critical) * v_cmd).min(v_cmd)
    }
}

/// Free-function form of [`SafetyConfig::beta`] with config validation.
pub fn beta_safe(critical: f64, cfg: &SafetyConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.beta(critical))
}

pub fn safe_velocity(v_cmd: f64, critical: f64, cfg: &SafetyConfig) -> f64 {
    cfg.safe_velocity(v_cmd, critical)
}
