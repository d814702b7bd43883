//! Collision avoidance safety filter for a self-balancing e-scooter with
//! three handlebar-mounted ultrasonic sensors, and a deterministic
//! multi-rate simulation harness around it.
//!
//! Dataflow per control tick: raw readings ([`sensor`]) are smoothed per
//! sensor and fused into a critical distance ([`filter`]), which schedules
//! the velocity limit applied to the planner's command ([`safety`]). The
//! limited command drives the vehicle model ([`dynamics`]). [`scenario`]
//! wires these together at their respective rates.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod filter;
pub mod safety;
pub mod scenario;
pub mod sensor;

pub use error::{Error, Result};
