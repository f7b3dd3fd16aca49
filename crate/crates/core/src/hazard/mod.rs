//! Ego-centric features, near-miss labels, and the learned hazard surrogate.

mod buffer;
mod model;

pub use buffer::{ReplayBuffer, DEFAULT_CAPACITY};
pub use model::{HazardModel, DEFAULT_LEARNING_RATE, DIMS, INPUT_DIM, PARAM_COUNT};

use crate::geom::Vec2;
use crate::map::{lane_overlap, lane_overlap_grad, Lane, Omega};
use crate::scenario::{absolute_pose, relative_state, Particle, Pose};
use crate::trace::{AgentSnapshot, EpisodeTrace};
use serde::{Deserialize, Serialize};

/// Half-width of the label window around closest approach (5 frames total).
pub const DEFAULT_WINDOW: usize = 2;
/// Cue clamp used before taking logs.
pub const CUE_EPS: f64 = 1e-6;
pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_STEPS_PER_EPISODE: usize = 4;

/// `[Δs/D_s, Δd/D_d, cos Δψ, sin Δψ, λ]`, each clipped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; INPUT_DIM]);

fn clip1(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Derivative of `clip1(v / scale)` in `v`; zero on and beyond the boundary.
fn clip1_slope(v: f64, scale: f64) -> f64 {
    if (v / scale).abs() < 1.0 {
        1.0 / scale
    } else {
        0.0
    }
}

fn features_from_parts(p: Particle, lambda: f64, omega: &Omega) -> FeatureVector {
    let (sin, cos) = p.delta_psi.sin_cos();
    FeatureVector([
        clip1(p.delta_s / omega.d_s),
        clip1(p.delta_d / omega.d_d),
        clip1(cos),
        clip1(sin),
        lambda,
    ])
}

/// Features of `object` seen from `ego`.
pub fn features(ego: Pose, object: Pose, ego_lane: &Lane, omega: &Omega) -> FeatureVector {
    features_from_parts(
        relative_state(ego, object),
        lane_overlap(object.position, ego_lane),
        omega,
    )
}

/// Features of the object the particle `x` places relative to `ego`.
pub fn particle_features(ego: Pose, x: Particle, ego_lane: &Lane, omega: &Omega) -> FeatureVector {
    let pos = absolute_pose(ego, x).position;
    features_from_parts(x, lane_overlap(pos, ego_lane), omega)
}

/// Hazard at the particle `x`.
pub fn particle_hazard(model: &HazardModel, ego: Pose, x: Particle, ego_lane: &Lane, omega: &Omega) -> f64 {
    model.forward(&particle_features(ego, x, ego_lane, omega).0)
}

/// `∂h/∂(Δs, Δd, Δψ)` through the feature map.
pub fn grad_x(model: &HazardModel, ego: Pose, x: Particle, ego_lane: &Lane, omega: &Omega) -> [f64; 3] {
    let z = particle_features(ego, x, ego_lane, omega);
    let dz = model.input_grad(&z.0);
    let pos = absolute_pose(ego, x).position;
    let dlam = lane_overlap_grad(pos, ego_lane);
    let fwd = Vec2::from_heading(ego.heading);
    let left = fwd.perp();
    let (sin, cos) = x.delta_psi.sin_cos();
    [
        dz[0] * clip1_slope(x.delta_s, omega.d_s) + dz[4] * dlam.dot(fwd),
        dz[1] * clip1_slope(x.delta_d, omega.d_d) + dz[4] * dlam.dot(left),
        -dz[2] * sin + dz[3] * cos,
    ]
}

/// Rate at which the range between two agents shrinks along the line of sight.
/// Coincident agents have no bearing and report zero.
pub fn closing_speed(ego: &AgentSnapshot, object: &AgentSnapshot) -> f64 {
    let Some(bearing) = (object.position - ego.position).normalized() else {
        return 0.0;
    };
    -bearing.dot(object.velocity() - ego.velocity())
}

/// Dense near-miss score for object `i`: one minus the probability of no
/// hazard, aggregated in log space over the window around closest approach.
pub fn near_miss_label(trace: &EpisodeTrace, i: usize, w: usize, collided: bool) -> f64 {
    assert!(!trace.is_empty(), "label needs at least one frame");
    if collided {
        return 1.0;
    }
    let dist = |t: usize| {
        let f = &trace.frames[t];
        f.ego.position.dist(f.objects[i].position)
    };
    let mut t_star = 0;
    let mut best = f64::INFINITY;
    for t in 0..trace.len() {
        let d = dist(t);
        if d < best {
            best = d;
            t_star = t;
        }
    }
    let lo = t_star.saturating_sub(w);
    let hi = (t_star + w).min(trace.len() - 1);
    let window = lo..=hi;
    let n = (hi - lo + 1) as f64;

    let d_bar = window.clone().map(dist).sum::<f64>() / n;
    let v_bar = window
        .clone()
        .map(|t| {
            let f = &trace.frames[t];
            closing_speed(&f.ego, &f.objects[i])
        })
        .sum::<f64>()
        / n;
    let v_max = trace.max_speed();

    let cue = |s: f64| s.clamp(CUE_EPS, 1.0 - CUE_EPS);
    let s_dist = cue((-d_bar).exp());
    let s_close = cue(if v_max > 0.0 {
        (v_bar / v_max).clamp(0.0, 1.0)
    } else {
        0.0
    });

    let log_s: f64 = window
        .map(|t| {
            let f = &trace.frames[t];
            let dpsi = f.objects[i].heading - f.ego.heading;
            let s_head = cue((1.0 - dpsi.cos()) / 2.0);
            (1.0 - s_dist).ln() + (1.0 - s_head).ln() + (1.0 - s_close).ln()
        })
        .sum();
    1.0 - log_s.exp()
}

/// One `(features at frame 0, label)` sample per object.
pub fn harvest(trace: &EpisodeTrace, collided: &[bool], ego_lane: &Lane, omega: &Omega) -> Vec<(FeatureVector, f64)> {
    let f0 = &trace.frames[0];
    (0..trace.object_count())
        .map(|i| {
            let z = features(f0.ego.pose(), f0.objects[i].pose(), ego_lane, omega);
            (z, near_miss_label(trace, i, DEFAULT_WINDOW, collided[i]))
        })
        .collect()
}
