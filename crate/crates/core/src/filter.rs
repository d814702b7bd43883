//! Per-sensor distance filtering and fusion into a single critical distance.
//!
//! Each sensor runs an exponential smoothing filter fed with the minimum of
//! its last `memory_len` raw readings. The smoothing factor depends on the
//! direction of change: rising readings use the slow time constant so that a
//! missed echo (which reads as full range) cannot quickly inflate the
//! distance, while falling readings are followed almost immediately.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::sensor::SensorMount;

/// Smoothing factor of a first-order filter with time constant `time_constant`
/// sampled every `dt`.
pub fn alpha_from_time_constant(time_constant: f64, dt: f64) -> Result<f64> {
    if !(time_constant > 0.0 && dt > 0.0) {
        return Err(config_err(format!(
            "time constant and period must be > 0, got T = {time_constant}, dt = {dt}"
        )));
    }
    Ok(-(-dt / time_constant).exp_m1())
}

/// Inverse of [`alpha_from_time_constant`].
pub fn time_constant_from_alpha(alpha: f64, dt: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0 && dt > 0.0) {
        return Err(config_err(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(-dt / (-alpha).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Time constant for rising readings [s].
    pub rise_time_constant: f64,
    /// Time constant for falling readings [s].
    pub fall_time_constant: f64,
    /// Memory length in filter ticks. The default of 10 spans two 10 Hz
    /// sensor periods at 50 Hz, so the window always holds at least one
    /// earlier reading and a single dropped echo is masked on every tick.
    pub memory_len: usize,
    /// Filter period [s].
    pub dt: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            rise_time_constant: 0.79,
            fall_time_constant: 0.03,
            memory_len: 10,
            dt: 0.02,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fall_time_constant > 0.0 && self.rise_time_constant > self.fall_time_constant) {
            return Err(config_err(
                "filter time constants must satisfy rise > fall > 0",
            ));
        }
        if self.memory_len < 1 {
            return Err(config_err("filter memory_len must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(config_err("filter dt must be > 0"));
        }
        Ok(())
    }
}

/// Sliding-window minimum over the last `len` pushed values.
///
/// Keeps a monotone deque of candidates, so each push is amortized O(1).
#[derive(Debug, Clone)]
pub struct MinMemory {
    len: usize,
    pushed: u64,
    candidates: VecDeque<(u64, f64)>,
}

impl MinMemory {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "memory length must be >= 1");
        Self {
            len,
            pushed: 0,
            candidates: VecDeque::with_capacity(len),
        }
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    /// Number of samples currently inside the window.
    pub fn len(&self) -> usize {
        (self.pushed as usize).min(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    /// Pushes `value`, drops samples older than the window and returns the
    /// window minimum.
    pub fn push(&mut self, value: f64) -> f64 {
        let idx = self.pushed;
        self.pushed += 1;
        while self.candidates.back().is_some_and(|&(_, v)| v >= value) {
            self.candidates.pop_back();
        }
        self.candidates.push_back((idx, value));
        let oldest = self.pushed.saturating_sub(self.len as u64);
        while self.candidates.front().is_some_and(|&(i, _)| i < oldest) {
            self.candidates.pop_front();
        }
        self.candidates[0].1
    }

    pub fn min(&self) -> Option<f64> {
        self.candidates.front().map(|&(_, v)| v)
    }
}

/// Asymmetric exponential smoothing with memory-min preprocessing for one
/// sensor.
#[derive(Debug, Clone)]
pub struct DistanceFilter {
    rise_alpha: f64,
    fall_alpha: f64,
    memory: MinMemory,
    filtered: f64,
}

impl DistanceFilter {
    /// Starts from a filtered distance of zero.
    pub fn new(cfg: &FilterConfig) -> Result<Self> {
        Self::with_initial(cfg, 0.0)
    }

    pub fn with_initial(cfg: &FilterConfig, filtered: f64) -> Result<Self> {
        cfg.validate()?;
        if !(filtered >= 0.0 && filtered.is_finite()) {
            return Err(Error::Input(format!(
                "initial distance must be >= 0, got {filtered}"
            )));
        }
        Ok(Self {
            rise_alpha: alpha_from_time_constant(cfg.rise_time_constant, cfg.dt)?,
            fall_alpha: alpha_from_time_constant(cfg.fall_time_constant, cfg.dt)?,
            memory: MinMemory::new(cfg.memory_len),
            filtered,
        })
    }

    /// Starts at `filtered` with the memory already full of that value.
    pub fn settled(cfg: &FilterConfig, filtered: f64) -> Result<Self> {
        let mut f = Self::with_initial(cfg, filtered)?;
        for _ in 0..cfg.memory_len {
            f.memory.push(filtered);
        }
        Ok(f)
    }

    pub fn value(&self) -> f64 {
        self.filtered
    }

    pub fn memory(&self) -> &MinMemory {
        &self.memory
    }

    /// Processes one raw reading and returns the new filtered distance.
    pub fn step(&mut self, measured: f64) -> Result<f64> {
        if !(measured >= 0.0 && measured.is_finite()) {
            return Err(Error::Input(format!(
                "measured distance must be finite and >= 0, got {measured}"
            )));
        }
        // The direction test uses the raw reading, not the memory minimum.
        let alpha = if measured > self.filtered {
            self.rise_alpha
        } else {
            self.fall_alpha
        };
        let windowed = self.memory.push(measured);
        self.filtered = alpha * windowed + (1.0 - alpha) * self.filtered;
        Ok(self.filtered)
    }
}

/// Smallest of the three filtered distances.
pub fn critical_distance(center: f64, left: f64, right: f64) -> f64 {
    center.min(left).min(right)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Weight on the minimum; 1 gives the plain minimum.
    pub blend_lambda: f64,
    /// Angular width of the Gaussian sensor weighting [rad].
    pub weight_kernel_width: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            blend_lambda: 1.0,
            weight_kernel_width: 0.35,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.blend_lambda) {
            return Err(config_err("blend_lambda must be in [0, 1]"));
        }
        if !(self.weight_kernel_width > 0.0 && self.weight_kernel_width.is_finite()) {
            return Err(config_err("weight_kernel_width must be > 0"));
        }
        Ok(())
    }
}

/// Blend of the minimum and a Gaussian-weighted average of the three
/// filtered distances. The mounts turn with the handlebar, so the weights
/// only depend on each mount's yaw offset from the travel direction.
pub fn weighted_critical_distance(
    filtered: [f64; 3],
    mounts: &[SensorMount; 3],
    fusion: &FusionConfig,
) -> f64 {
    let min = critical_distance(filtered[0], filtered[1], filtered[2]);
    if fusion.blend_lambda == 1.0 {
        return min;
    }
    let width2 = fusion.weight_kernel_width * fusion.weight_kernel_width;
    let weights = mounts.map(|m| (-(m.yaw_offset * m.yaw_offset) / (2.0 * width2)).exp());
    let total: f64 = weights.iter().sum();
    let average: f64 = weights
        .iter()
        .zip(filtered)
        .map(|(w, d)| w / total * d)
        .sum();
    fusion.blend_lambda * min + (1.0 - fusion.blend_lambda) * average
}
