//! Per-frame interaction records written by the simulator.

use crate::geom::Vec2;
use crate::scenario::{ObjectKind, Pose};
use serde::{Deserialize, Serialize};

/// Recorded state of one agent in one frame. Velocity is along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct AgentSnapshot {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
}

impl AgentSnapshot {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading(self.heading) * self.speed
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite() && self.speed.is_finite()
    }
}

impl From<[f64; 4]> for AgentSnapshot {
    fn from(a: [f64; 4]) -> Self {
        Self {
            position: Vec2::new(a[0], a[1]),
            heading: a[2],
            speed: a[3],
        }
    }
}

impl From<AgentSnapshot> for [f64; 4] {
    fn from(s: AgentSnapshot) -> Self {
        [s.position.x, s.position.y, s.heading, s.speed]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub ego: AgentSnapshot,
    pub objects: Vec<AgentSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    /// Seconds per frame.
    pub dt: f64,
    pub kinds: Vec<ObjectKind>,
    pub frames: Vec<Frame>,
}

impl EpisodeTrace {
    pub fn new(dt: f64, kinds: Vec<ObjectKind>) -> Self {
        Self {
            dt,
            kinds,
            frames: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn object_count(&self) -> usize {
        self.kinds.len()
    }

    /// Fastest speed of any agent in any frame.
    pub fn max_speed(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|f| std::iter::once(&f.ego).chain(&f.objects))
            .map(|a| a.speed)
            .fold(0.0, f64::max)
    }

    pub fn push(&mut self, frame: Frame) {
        debug_assert_eq!(frame.objects.len(), self.kinds.len());
        self.frames.push(frame);
    }
}
