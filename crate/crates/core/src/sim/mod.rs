//! Desk-scale closed-loop simulator: kinematics, online testers, the ego
//! stand-in, the interaction recorder and violation detection.

pub mod control;
pub mod kinematics;
pub mod violations;

pub use control::{
    apply_control, random_controls, Control, ControlLimits, EgoPolicy, GradientTester, OnlineTester, RandomTester,
    SceneView,
};
pub use kinematics::{step_bicycle, step_bicycle_jacobian, step_pedestrian, AgentState};
pub use violations::{collided_objects, detect_violations, ViolationKind, ViolationRecord};

use crate::error::Result;
use crate::hazard::HazardModel;
use crate::map::RoadNetwork;
use crate::scenario::{Chromosome, ObjectKind};
use crate::trace::{EpisodeTrace, Frame};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use violations::{overlapping_objects, SolidMarkings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// Frames to simulate after the initial one.
    pub horizon: usize,
    pub dt: f64,
    pub motionless_seconds: f64,
    pub ego: EgoPolicy,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            horizon: 300,
            dt: 0.1,
            motionless_seconds: violations::DEFAULT_MOTIONLESS_SECONDS,
            ego: EgoPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: Chromosome,
    pub trace: EpisodeTrace,
    pub violations: Vec<ViolationRecord>,
    pub wall_time: f64,
}

impl EpisodeResult {
    pub fn violated(&self) -> bool {
        !self.violations.is_empty()
    }
}

/// Runs `seed` for up to `config.horizon` frames. Each frame the tester picks
/// object controls, objects and ego advance, and the recorder appends a
/// snapshot. The episode stops at the first collision.
pub fn run_episode(
    seed: &Chromosome,
    tester: &mut dyn OnlineTester,
    network: &RoadNetwork,
    model: &HazardModel,
    config: &EpisodeConfig,
    rng: &mut dyn RngCore,
) -> Result<EpisodeResult> {
    let started = Instant::now();
    let dt = config.dt;
    let limits = ControlLimits::default();
    let ego_pose = seed.ego_pose();
    let route = network.route(ego_pose.position, ego_pose.heading)?;
    let mut ego = AgentState::at_rest(ObjectKind::Vehicle, ego_pose);
    let mut objects: Vec<AgentState> = seed
        .dynamics_gene
        .iter()
        .map(|o| AgentState::at_rest(o.kind, o.pose()))
        .collect();
    let kinds: Vec<ObjectKind> = seed.dynamics_gene.iter().map(|o| o.kind).collect();
    let mut trace = EpisodeTrace::new(dt, kinds.clone());
    let snapshot = |ego: &AgentState, objects: &[AgentState]| Frame {
        ego: ego.snapshot(),
        objects: objects.iter().map(AgentState::snapshot).collect(),
    };
    trace.push(snapshot(&ego, &objects));

    if overlapping_objects(&trace.frames[0], &kinds).next().is_none() {
        for _ in 0..config.horizon {
            let lane = &network.lanes[network.lane_at(ego.position, ego.heading)];
            let view = SceneView {
                ego: &ego,
                objects: &objects,
                ego_lane: lane,
                omega: &network.omega,
                model,
                dt,
            };
            let controls = tester.controls(&view, rng);
            let (accel, steer) = config.ego.control(&ego, &route, &objects);
            for (o, c) in objects.iter_mut().zip(controls) {
                *o = apply_control(o, limits.clamp(c, dt), dt, &limits);
            }
            ego = step_bicycle(&ego, accel, steer, dt, config.ego.wheelbase);
            trace.push(snapshot(&ego, &objects));
            if overlapping_objects(trace.frames.last().unwrap(), &kinds)
                .next()
                .is_some()
            {
                break;
            }
        }
    }

    let violations = violations::detect_with(
        &trace,
        &SolidMarkings::new(network),
        Some(&route),
        config.motionless_seconds,
    );
    Ok(EpisodeResult {
        seed: seed.clone(),
        trace,
        violations,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
