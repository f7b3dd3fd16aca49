//! Online testers that drive the dynamic objects, and the stand-in ego policy.

use super::kinematics::{clamp_step, footprint, step_bicycle, step_bicycle_jacobian, AgentState};
use crate::geom::{self, Vec2};
use crate::hazard::{grad_x, HazardModel};
use crate::map::{Lane, Omega, Route};
use crate::scenario::{relative_state, ObjectKind};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

/// Per-step control of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Control {
    /// Longitudinal acceleration (m/s²) and steering angle (rad).
    Drive { accel: f64, steer: f64 },
    /// World-frame displacement for this step (m).
    Walk { dx: f64, dy: f64 },
}

impl Control {
    pub fn zero(kind: ObjectKind) -> Self {
        match kind {
            ObjectKind::Pedestrian => Control::Walk { dx: 0.0, dy: 0.0 },
            _ => Control::Drive { accel: 0.0, steer: 0.0 },
        }
    }
}

/// Bounds on object controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlLimits {
    pub accel: f64,
    pub steer: f64,
    /// Pedestrian walking speed cap; the per-step displacement is capped at `walk_speed·dt`.
    pub walk_speed: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            accel: 3.0,
            steer: 0.5,
            walk_speed: 1.5,
        }
    }
}

impl ControlLimits {
    pub fn clamp(&self, c: Control, dt: f64) -> Control {
        match c {
            Control::Drive { accel, steer } => Control::Drive {
                accel: accel.clamp(-self.accel, self.accel),
                steer: steer.clamp(-self.steer, self.steer),
            },
            Control::Walk { dx, dy } => {
                let d = clamp_step(Vec2::new(dx, dy), self.walk_speed, dt);
                Control::Walk { dx: d.x, dy: d.y }
            }
        }
    }

    pub fn contains(&self, c: Control, dt: f64) -> bool {
        match c {
            Control::Drive { accel, steer } => accel.abs() <= self.accel && steer.abs() <= self.steer,
            Control::Walk { dx, dy } => dx.hypot(dy) <= self.walk_speed * dt * (1.0 + 1e-12),
        }
    }
}

/// Applies a control to an agent for one step.
pub fn apply_control(state: &AgentState, control: Control, dt: f64, limits: &ControlLimits) -> AgentState {
    match (control, state.kind.wheelbase()) {
        (Control::Drive { accel, steer }, Some(l)) => step_bicycle(state, accel, steer, dt, l),
        (Control::Walk { dx, dy }, None) => super::kinematics::step_pedestrian(state, dx, dy, dt, limits.walk_speed),
        _ => *state,
    }
}

/// Everything a tester may look at when choosing controls.
pub struct SceneView<'a> {
    pub ego: &'a AgentState,
    pub objects: &'a [AgentState],
    pub ego_lane: &'a Lane,
    pub omega: &'a Omega,
    pub model: &'a HazardModel,
    pub dt: f64,
}

/// An online tester chooses each object's control every frame.
pub trait OnlineTester {
    fn controls(&mut self, view: &SceneView<'_>, rng: &mut dyn RngCore) -> Vec<Control>;
}

/// Normalized gradient ascent on the hazard of each object's next state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientTester {
    pub iterations: usize,
    pub step: f64,
    pub limits: ControlLimits,
}

impl Default for GradientTester {
    fn default() -> Self {
        Self {
            iterations: 3,
            step: 0.5,
            limits: ControlLimits::default(),
        }
    }
}

impl GradientTester {
    /// `∂h/∂u` of the object's hazard after one step under control `u`.
    pub fn control_gradient(&self, obj: &AgentState, u: [f64; 2], view: &SceneView<'_>) -> [f64; 2] {
        let ego = view.ego.pose();
        let dt = view.dt;
        // d(next x, y, heading)/du, plus the next pose
        let (next, jac) = match obj.kind.wheelbase() {
            Some(l) => (
                step_bicycle(obj, u[0], u[1], dt, l),
                step_bicycle_jacobian(obj, u[0], u[1], dt, l),
            ),
            None => {
                let next = super::kinematics::step_pedestrian(obj, u[0], u[1], dt, self.limits.walk_speed);
                let n2 = u[0] * u[0] + u[1] * u[1];
                let dpsi = if n2 > 1e-18 {
                    [-u[1] / n2, u[0] / n2]
                } else {
                    [0.0, 0.0]
                };
                (next, [[1.0, 0.0], [0.0, 1.0], dpsi])
            }
        };
        let x = relative_state(ego, next.pose());
        let g = grad_x(view.model, ego, x, view.ego_lane, view.omega);
        let (s, c) = ego.heading.sin_cos();
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let dxk = jac[0][k];
            let dyk = jac[1][k];
            *o = g[0] * (c * dxk + s * dyk) + g[1] * (-s * dxk + c * dyk) + g[2] * jac[2][k];
        }
        out
    }

    fn bounds(&self, kind: ObjectKind, dt: f64) -> [f64; 2] {
        match kind {
            ObjectKind::Pedestrian => [self.limits.walk_speed * dt; 2],
            _ => [self.limits.accel, self.limits.steer],
        }
    }

    fn ascend(&self, obj: &AgentState, view: &SceneView<'_>) -> Control {
        let b = self.bounds(obj.kind, view.dt);
        let mut u = [0.0; 2];
        for _ in 0..self.iterations {
            let g = self.control_gradient(obj, u, view);
            // normalize in range-scaled coordinates so both channels move comparably
            let scaled = [g[0] * b[0], g[1] * b[1]];
            let n = scaled[0].hypot(scaled[1]);
            if n.is_nan() || n <= 1e-12 {
                break;
            }
            for k in 0..2 {
                u[k] += self.step * b[k] * scaled[k] / n;
            }
            let clamped = self.limits.clamp(to_control(obj.kind, u), view.dt);
            u = from_control(clamped);
        }
        to_control(obj.kind, u)
    }
}

fn to_control(kind: ObjectKind, u: [f64; 2]) -> Control {
    match kind {
        ObjectKind::Pedestrian => Control::Walk { dx: u[0], dy: u[1] },
        _ => Control::Drive {
            accel: u[0],
            steer: u[1],
        },
    }
}

fn from_control(c: Control) -> [f64; 2] {
    match c {
        Control::Drive { accel, steer } => [accel, steer],
        Control::Walk { dx, dy } => [dx, dy],
    }
}

impl OnlineTester for GradientTester {
    fn controls(&mut self, view: &SceneView<'_>, _rng: &mut dyn RngCore) -> Vec<Control> {
        view.objects.iter().map(|o| self.ascend(o, view)).collect()
    }
}

/// Uniform random controls within the limits.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RandomTester {
    pub limits: ControlLimits,
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, half: f64) -> f64 {
    half * (2.0 * rng.gen::<f64>() - 1.0)
}

/// Draws one uniform control per object.
pub fn random_controls<R: Rng + ?Sized>(
    objects: &[AgentState],
    limits: &ControlLimits,
    dt: f64,
    rng: &mut R,
) -> Vec<Control> {
    objects
        .iter()
        .map(|o| match o.kind {
            ObjectKind::Pedestrian => {
                // uniform over the disc
                let r = limits.walk_speed * dt * rng.gen::<f64>().sqrt();
                let a = symmetric(rng, std::f64::consts::PI);
                Control::Walk {
                    dx: r * a.cos(),
                    dy: r * a.sin(),
                }
            }
            _ => Control::Drive {
                accel: symmetric(rng, limits.accel),
                steer: symmetric(rng, limits.steer),
            },
        })
        .collect()
}

impl OnlineTester for RandomTester {
    fn controls(&mut self, view: &SceneView<'_>, rng: &mut dyn RngCore) -> Vec<Control> {
        random_controls(view.objects, &self.limits, view.dt, rng)
    }
}

/// Stand-in driving policy under test: pure pursuit along the route, a
/// proportional speed loop, and full braking for anything in a forward cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoPolicy {
    pub lookahead: f64,
    pub target_speed: f64,
    pub speed_gain: f64,
    pub max_accel: f64,
    pub max_brake: f64,
    pub max_steer: f64,
    /// Deceleration used to plan the stop at the destination.
    pub comfort_decel: f64,
    pub cone_range: f64,
    pub cone_half_angle: f64,
    pub wheelbase: f64,
}

impl Default for EgoPolicy {
    fn default() -> Self {
        Self {
            lookahead: 8.0,
            target_speed: 10.0,
            speed_gain: 1.0,
            max_accel: 3.0,
            max_brake: 8.0,
            max_steer: 0.5,
            comfort_decel: 2.0,
            cone_range: 12.0,
            cone_half_angle: 20f64.to_radians(),
            wheelbase: 2.7,
        }
    }
}

/// Distance from the goal below which the route counts as complete.
pub const ROUTE_DONE_TOL: f64 = 2.0;

/// Arc length of the route remaining after the ego's projection onto it.
pub fn route_remaining(route: &Route, position: Vec2) -> f64 {
    let total = geom::polyline_length(&route.points);
    if route.points.len() < 2 {
        return 0.0;
    }
    total - geom::project_polyline(position, &route.points).arc
}

pub fn route_complete(route: &Route, position: Vec2) -> bool {
    route_remaining(route, position) <= ROUTE_DONE_TOL
}

impl EgoPolicy {
    /// Whether any object footprint reaches into the forward braking cone.
    pub fn obstacle_ahead(&self, ego: &AgentState, objects: &[AgentState]) -> bool {
        let fwd = Vec2::from_heading(ego.heading);
        let left = fwd.perp();
        let tan = self.cone_half_angle.tan();
        objects.iter().any(|o| {
            let fp = footprint(o.kind, o.position, o.heading);
            fp.corners().iter().chain(std::iter::once(&o.position)).any(|p| {
                let d = *p - ego.position;
                let lon = d.dot(fwd);
                let lat = d.dot(left);
                lon > 0.0 && d.norm() <= self.cone_range && lat.abs() <= lon * tan
            })
        })
    }

    pub fn control(&self, ego: &AgentState, route: &Route, objects: &[AgentState]) -> (f64, f64) {
        let remaining = route_remaining(route, ego.position);
        let steer = if route.points.len() >= 2 {
            let progress = geom::project_polyline(ego.position, &route.points).arc;
            let (target, _) = geom::point_at_arc(&route.points, progress + self.lookahead);
            let d = target - ego.position;
            let fwd = Vec2::from_heading(ego.heading);
            let lx = d.dot(fwd);
            let ly = d.dot(fwd.perp());
            let l2 = lx * lx + ly * ly;
            if l2 > 1e-9 {
                (self.wheelbase * 2.0 * ly / l2)
                    .atan()
                    .clamp(-self.max_steer, self.max_steer)
            } else {
                0.0
            }
        } else {
            0.0
        };
        let accel = if self.obstacle_ahead(ego, objects) {
            -self.max_brake
        } else {
            let v_goal = if remaining <= ROUTE_DONE_TOL {
                0.0
            } else {
                self.target_speed.min((2.0 * self.comfort_decel * remaining).sqrt())
            };
            (self.speed_gain * (v_goal - ego.speed)).clamp(-self.max_brake, self.max_accel)
        };
        (accel, steer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_limits_give_zero_controls() {
        let limits = ControlLimits {
            accel: 0.0,
            steer: 0.0,
            walk_speed: 0.0,
        };
        let objs = [
            AgentState::at_rest(ObjectKind::Vehicle, crate::scenario::Pose::new(Vec2::ZERO, 0.0)),
            AgentState::at_rest(ObjectKind::Pedestrian, crate::scenario::Pose::new(Vec2::ZERO, 0.0)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in random_controls(&objs, &limits, 0.1, &mut rng) {
            match c {
                Control::Drive { accel, steer } => assert_eq!((accel, steer), (0.0, 0.0)),
                Control::Walk { dx, dy } => assert_eq!((dx.abs(), dy.abs()), (0.0, 0.0)),
            }
        }
    }

    #[test]
    fn random_controls_repeat_with_seed() {
        let objs = [AgentState::at_rest(ObjectKind::Bicycle, crate::scenario::Pose::new(Vec2::ZERO, 0.0)); 4];
        let l = ControlLimits::default();
        let a = random_controls(&objs, &l, 0.1, &mut ChaCha8Rng::seed_from_u64(8));
        let b = random_controls(&objs, &l, 0.1, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
    }
}
