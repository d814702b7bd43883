//! Ultrasonic sensor model: planar wedge field of view, range clipping,
//! Gaussian accuracy noise and missed echoes that read as full range.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleState;
use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorId {
    Center,
    Left,
    Right,
}

impl SensorId {
    /// Fixed sampling order.
    pub const ALL: [SensorId; 3] = [SensorId::Center, SensorId::Left, SensorId::Right];

    pub fn suffix(self) -> &'static str {
        match self {
            SensorId::Center => "c",
            SensorId::Left => "l",
            SensorId::Right => "r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMount {
    pub id: SensorId,
    /// Mounting yaw relative to the handlebar normal [rad], positive to the left.
    pub yaw_offset: f64,
    /// Offset along the handlebar from the steering head [m], positive to the left.
    pub lateral_offset: f64,
    pub half_angle: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub accuracy_sigma: f64,
    /// Height above ground [m]. Not used by the planar geometry.
    pub height: f64,
}

impl SensorMount {
    fn handlebar(id: SensorId, yaw_offset: f64, lateral_offset: f64, height: f64) -> Self {
        Self {
            id,
            yaw_offset,
            lateral_offset,
            half_angle: 15f64.to_radians(),
            range_min: 0.02,
            range_max: 4.0,
            accuracy_sigma: 0.003,
            height,
        }
    }

    /// Center, left and right sensors of the handlebar cluster.
    pub fn default_cluster() -> [SensorMount; 3] {
        [
            Self::handlebar(SensorId::Center, 0.0, 0.0, 0.56),
            Self::handlebar(SensorId::Left, 24f64.to_radians(), 0.037, 0.50),
            Self::handlebar(SensorId::Right, -24f64.to_radians(), -0.037, 0.50),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_angle > 0.0 && self.half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(config_err("sensor half_angle must be in (0, pi/2)"));
        }
        if !(self.range_min > 0.0 && self.range_min < self.range_max && self.range_max.is_finite())
        {
            return Err(config_err(
                "sensor range must satisfy 0 < range_min < range_max",
            ));
        }
        if !(self.accuracy_sigma >= 0.0 && self.accuracy_sigma.is_finite()) {
            return Err(config_err("sensor accuracy_sigma must be >= 0"));
        }
        if !(self.yaw_offset.is_finite() && self.lateral_offset.is_finite()) {
            return Err(config_err("sensor offsets must be finite"));
        }
        Ok(())
    }

    /// Sensor origin and boresight heading in the world frame. The cluster
    /// sits on the steering head at the front contact point and turns with
    /// the handlebar.
    pub fn pose(&self, vehicle: &VehicleState) -> (Point, f64) {
        let bar = vehicle.yaw + vehicle.steering;
        let origin = Point::new(
            vehicle.x - self.lateral_offset * bar.sin(),
            vehicle.y + self.lateral_offset * bar.cos(),
        );
        (origin, bar + self.yaw_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Circle {
        radius: f64,
    },
    /// Axis-aligned rectangle centred on the obstacle position.
    Rect {
        half_width: f64,
        half_height: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub shape: Shape,
    /// Piecewise-linear position schedule; held constant outside its span.
    pub trajectory: Vec<Waypoint>,
    #[serde(default)]
    pub active_from: f64,
    #[serde(default)]
    pub active_until: Option<f64>,
}

impl Obstacle {
    pub fn fixed(shape: Shape, x: f64, y: f64) -> Self {
        Self {
            shape,
            trajectory: vec![Waypoint { t: 0.0, x, y }],
            active_from: 0.0,
            active_until: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            Shape::Circle { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return Err(config_err("circle radius must be > 0"))
            }
            Shape::Rect {
                half_width,
                half_height,
            } if !(half_width > 0.0
                && half_height > 0.0
                && half_width.is_finite()
                && half_height.is_finite()) =>
            {
                return Err(config_err("rectangle must be non-degenerate"))
            }
            _ => {}
        }
        if self.trajectory.is_empty() {
            return Err(config_err(
                "obstacle trajectory needs at least one waypoint",
            ));
        }
        if self.trajectory.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(config_err("waypoint times must be strictly increasing"));
        }
        if let Some(until) = self.active_until {
            if !(until > self.active_from) {
                return Err(config_err("active_until must be after active_from"));
            }
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.active_from && self.active_until.is_none_or(|until| t < until)
    }

    pub fn position(&self, t: f64) -> Point {
        let wps = &self.trajectory;
        let first = wps[0];
        let last = wps[wps.len() - 1];
        if t <= first.t {
            return Point::new(first.x, first.y);
        }
        if t >= last.t {
            return Point::new(last.x, last.y);
        }
        let i = wps.partition_point(|w| w.t <= t);
        let (a, b) = (wps[i - 1], wps[i]);
        let s = (t - a.t) / (b.t - a.t);
        Point::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y))
    }

    /// Distance from `p` to the obstacle; zero if `p` is inside.
    pub fn distance_from(&self, p: Point, t: f64) -> f64 {
        let c = self.position(t);
        match self.shape {
            Shape::Circle { radius } => (p.distance(c) - radius).max(0.0),
            Shape::Rect {
                half_width,
                half_height,
            } => {
                let dx = ((p.x - c.x).abs() - half_width).max(0.0);
                let dy = ((p.y - c.y).abs() - half_height).max(0.0);
                dx.hypot(dy)
            }
        }
    }

    /// Distance from the segment `a`-`b` to the obstacle; zero on contact.
    pub fn distance_to_segment(&self, a: Point, b: Point, t: f64) -> f64 {
        let c = self.position(t);
        match self.shape {
            Shape::Circle { radius } => (point_segment_distance(c, a, b) - radius).max(0.0),
            Shape::Rect {
                half_width,
                half_height,
            } => {
                let len = a.distance(b);
                if len > 0.0 {
                    let dir = ((b.x - a.x) / len, (b.y - a.y) / len);
                    if self.ray_hit(a, dir, t).is_some_and(|s| s <= len) {
                        return 0.0;
                    }
                }
                let corners = [
                    Point::new(c.x - half_width, c.y - half_height),
                    Point::new(c.x + half_width, c.y - half_height),
                    Point::new(c.x + half_width, c.y + half_height),
                    Point::new(c.x - half_width, c.y + half_height),
                ];
                corners
                    .iter()
                    .map(|&q| point_segment_distance(q, a, b))
                    .chain([self.distance_from(a, t), self.distance_from(b, t)])
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn closest_point(&self, p: Point, t: f64) -> Point {
        let c = self.position(t);
        match self.shape {
            Shape::Circle { radius } => {
                let d = p.distance(c);
                if d <= radius {
                    p
                } else {
                    Point::new(
                        c.x + (p.x - c.x) * radius / d,
                        c.y + (p.y - c.y) * radius / d,
                    )
                }
            }
            Shape::Rect {
                half_width,
                half_height,
            } => Point::new(
                p.x.clamp(c.x - half_width, c.x + half_width),
                p.y.clamp(c.y - half_height, c.y + half_height),
            ),
        }
    }

    /// Distance along the unit ray `origin + s * dir` to the first point of
    /// the obstacle, if any.
    fn ray_hit(&self, origin: Point, dir: (f64, f64), t: f64) -> Option<f64> {
        let c = self.position(t);
        match self.shape {
            Shape::Circle { radius } => {
                let (ox, oy) = (origin.x - c.x, origin.y - c.y);
                let b = ox * dir.0 + oy * dir.1;
                let cc = ox * ox + oy * oy - radius * radius;
                if cc <= 0.0 {
                    return Some(0.0);
                }
                let disc = b * b - cc;
                if disc < 0.0 {
                    return None;
                }
                let s = -b - disc.sqrt();
                (s >= 0.0).then_some(s)
            }
            Shape::Rect {
                half_width,
                half_height,
            } => {
                let mut enter = 0.0f64;
                let mut exit = f64::INFINITY;
                for (o, d, lo, hi) in [
                    (origin.x, dir.0, c.x - half_width, c.x + half_width),
                    (origin.y, dir.1, c.y - half_height, c.y + half_height),
                ] {
                    if d == 0.0 {
                        if o < lo || o > hi {
                            return None;
                        }
                    } else {
                        let (t0, t1) = ((lo - o) / d, (hi - o) / d);
                        enter = enter.max(t0.min(t1));
                        exit = exit.min(t0.max(t1));
                    }
                }
                (enter <= exit).then_some(enter)
            }
        }
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let s = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + s * dx, a.y + s * dy))
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w < -std::f64::consts::PI {
        w + two_pi
    } else {
        w
    }
}

/// True distance seen by one sensor: the nearest active obstacle point
/// inside its wedge, or `None` if nothing lies inside within `range_max`.
pub fn wedge_distance(
    vehicle: &VehicleState,
    mount: &SensorMount,
    obstacles: &[Obstacle],
    t: f64,
) -> Option<f64> {
    let (origin, heading) = mount.pose(vehicle);
    obstacles
        .iter()
        .filter(|o| o.is_active(t))
        .filter_map(|o| obstacle_in_wedge(o, origin, heading, mount.half_angle, t))
        .filter(|&d| d <= mount.range_max)
        .min_by(f64::total_cmp)
}

// Both the obstacle and the wedge (half-angle < pi/2) are convex, so the
// nearest point of their intersection is either the unconstrained nearest
// point or lies on one of the two bounding rays.
fn obstacle_in_wedge(
    obstacle: &Obstacle,
    origin: Point,
    heading: f64,
    half_angle: f64,
    t: f64,
) -> Option<f64> {
    let nearest = obstacle.closest_point(origin, t);
    let d = origin.distance(nearest);
    if d == 0.0 {
        return Some(0.0);
    }
    let bearing = (nearest.y - origin.y).atan2(nearest.x - origin.x);
    if wrap_angle(bearing - heading).abs() <= half_angle {
        return Some(d);
    }
    [heading - half_angle, heading + half_angle]
        .into_iter()
        .filter_map(|a| obstacle.ray_hit(origin, (a.cos(), a.sin()), t))
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultModel {
    pub dropout_prob: f64,
    pub seed: u64,
}

impl Default for FaultModel {
    fn default() -> Self {
        Self {
            dropout_prob: 0.0,
            seed: 0,
        }
    }
}

impl FaultModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(config_err("dropout_prob must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// One raw reading. Consumes exactly two draws from `rng` regardless of the
/// outcome so that sequences stay aligned across scenes.
pub fn measure<R: Rng + ?Sized>(
    true_distance: Option<f64>,
    mount: &SensorMount,
    fault: &FaultModel,
    rng: &mut R,
) -> f64 {
    let missed = rng.random::<f64>() < fault.dropout_prob;
    let z: f64 = rng.sample(StandardNormal);
    match true_distance {
        Some(d) if !missed => {
            (d + mount.accuracy_sigma * z).clamp(mount.range_min, mount.range_max)
        }
        _ => mount.range_max,
    }
}

/// Readings of all three sensors in the order of `mounts`.
pub fn sample_all<R: Rng + ?Sized>(
    vehicle: &VehicleState,
    mounts: &[SensorMount; 3],
    obstacles: &[Obstacle],
    fault: &FaultModel,
    t: f64,
    rng: &mut R,
) -> [f64; 3] {
    mounts.map(|m| measure(wedge_distance(vehicle, &m, obstacles, t), &m, fault, rng))
}
