//! Kinematic bicycle and pedestrian models.

use crate::geom::{wrap_angle, OrientedRect, Vec2};
use crate::scenario::{ObjectKind, Pose};
use crate::trace::AgentSnapshot;
use serde::{Deserialize, Serialize};

pub const MAX_SPEED: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub kind: ObjectKind,
}

impl AgentState {
    pub fn at_rest(kind: ObjectKind, pose: Pose) -> Self {
        Self {
            position: pose.position,
            heading: pose.heading,
            speed: 0.0,
            kind,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.heading)
    }

    pub fn footprint(&self) -> OrientedRect {
        footprint(self.kind, self.position, self.heading)
    }

    pub fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            position: self.position,
            heading: self.heading,
            speed: self.speed,
        }
    }
}

pub fn footprint(kind: ObjectKind, position: Vec2, heading: f64) -> OrientedRect {
    let (l, w) = kind.footprint();
    OrientedRect::new(position, heading, l, w)
}

/// Semi-implicit Euler step of the kinematic bicycle: speed first, then
/// heading with the new speed, then position along the new heading. Speed is
/// clamped to `[0, MAX_SPEED]`.
pub fn step_bicycle(state: &AgentState, accel: f64, steer: f64, dt: f64, wheelbase: f64) -> AgentState {
    let speed = (state.speed + accel * dt).clamp(0.0, MAX_SPEED);
    let heading = state.heading + speed / wheelbase * steer.tan() * dt;
    let position = state.position + Vec2::from_heading(heading) * (speed * dt);
    AgentState {
        position,
        heading: wrap_angle(heading),
        speed,
        kind: state.kind,
    }
}

/// Jacobian of [`step_bicycle`]'s `(x, y, heading)` with respect to `(accel, steer)`.
pub fn step_bicycle_jacobian(state: &AgentState, accel: f64, steer: f64, dt: f64, wheelbase: f64) -> [[f64; 2]; 3] {
    let raw = state.speed + accel * dt;
    let speed = raw.clamp(0.0, MAX_SPEED);
    let dv_da = if (0.0..=MAX_SPEED).contains(&raw) { dt } else { 0.0 };
    let tan = steer.tan();
    let heading = state.heading + speed / wheelbase * tan * dt;
    let dpsi_da = dv_da * tan * dt / wheelbase;
    let dpsi_dd = speed * dt / (wheelbase * steer.cos().powi(2));
    let (s, c) = heading.sin_cos();
    [
        [dv_da * dt * c - speed * dt * s * dpsi_da, -speed * dt * s * dpsi_dd],
        [dv_da * dt * s + speed * dt * c * dpsi_da, speed * dt * c * dpsi_dd],
        [dpsi_da, dpsi_dd],
    ]
}

/// Clamps a displacement to the walking-speed ball `‖d‖ ≤ max_speed·dt`.
pub fn clamp_step(d: Vec2, max_speed: f64, dt: f64) -> Vec2 {
    let cap = max_speed * dt;
    let n = d.norm();
    if n > cap {
        d * (cap / n)
    } else {
        d
    }
}

/// Moves a pedestrian by the (clamped) world-frame displacement and faces it
/// along the motion.
pub fn step_pedestrian(state: &AgentState, dx: f64, dy: f64, dt: f64, max_speed: f64) -> AgentState {
    let d = clamp_step(Vec2::new(dx, dy), max_speed, dt);
    let n = d.norm();
    AgentState {
        position: state.position + d,
        heading: if n > 0.0 { d.angle() } else { state.heading },
        speed: n / dt,
        kind: state.kind,
    }
}
