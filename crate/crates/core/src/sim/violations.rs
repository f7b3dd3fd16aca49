//! Safety-violation detection over recorded traces.

use super::control::route_complete;
use super::kinematics::footprint;
use crate::geom::{OrientedRect, Vec2};
use crate::map::{Marking, RoadNetwork, Route};
use crate::scenario::ObjectKind;
use crate::trace::{EpisodeTrace, Frame};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MOTIONLESS_SECONDS: f64 = 15.0;
/// Below this speed the ego counts as stationary.
pub const STATIONARY_SPEED: f64 = 0.1;
/// Length of the clear corridor ahead of the ego front that makes a stop a violation.
pub const CLEAR_CORRIDOR: f64 = 10.0;
const CORRIDOR_WIDTH: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    LaneDeparture,
    Motionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub kind: ViolationKind,
    pub frame: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<usize>,
}

pub fn ego_footprint(frame: &Frame) -> OrientedRect {
    footprint(ObjectKind::Vehicle, frame.ego.position, frame.ego.heading)
}

/// Objects whose footprint overlaps the ego in `frame`.
pub fn overlapping_objects<'a>(frame: &'a Frame, kinds: &'a [ObjectKind]) -> impl Iterator<Item = usize> + 'a {
    let ego = ego_footprint(frame);
    frame
        .objects
        .iter()
        .zip(kinds)
        .enumerate()
        .filter(move |(_, (o, k))| ego.intersects(&footprint(**k, o.position, o.heading)))
        .map(|(i, _)| i)
}

/// Per-object flag: did the object ever touch the ego?
pub fn collided_objects(trace: &EpisodeTrace) -> Vec<bool> {
    let mut hit = vec![false; trace.object_count()];
    for f in &trace.frames {
        for i in overlapping_objects(f, &trace.kinds) {
            hit[i] = true;
        }
    }
    hit
}

/// Solid lane markings, cached for repeated departure checks.
#[derive(Debug, Clone)]
pub struct SolidMarkings {
    lines: Vec<Vec<Vec2>>,
}

impl SolidMarkings {
    pub fn new(network: &RoadNetwork) -> Self {
        let mut lines = Vec::new();
        for lane in &network.lanes {
            if lane.left_marking == Marking::Solid {
                lines.push(lane.boundary(true));
            }
            if lane.right_marking == Marking::Solid {
                lines.push(lane.boundary(false));
            }
        }
        Self { lines }
    }

    pub fn crossed_by(&self, rect: &OrientedRect) -> bool {
        let reach = rect.length.hypot(rect.width) / 2.0;
        self.lines.iter().any(|line| {
            line.windows(2).any(|w| {
                // cheap reject on the segment's bounding box
                let (lo, hi) = (
                    Vec2::new(w[0].x.min(w[1].x) - reach, w[0].y.min(w[1].y) - reach),
                    Vec2::new(w[0].x.max(w[1].x) + reach, w[0].y.max(w[1].y) + reach),
                );
                rect.center.x >= lo.x
                    && rect.center.x <= hi.x
                    && rect.center.y >= lo.y
                    && rect.center.y <= hi.y
                    && rect.crosses_polyline(w)
            })
        })
    }
}

/// Whether an object footprint blocks the corridor ahead of the ego.
pub fn path_blocked(frame: &Frame, kinds: &[ObjectKind]) -> bool {
    let (ego_len, _) = ObjectKind::Vehicle.footprint();
    let fwd = Vec2::from_heading(frame.ego.heading);
    let corridor = OrientedRect::new(
        frame.ego.position + fwd * (ego_len / 2.0 + CLEAR_CORRIDOR / 2.0),
        frame.ego.heading,
        CLEAR_CORRIDOR,
        CORRIDOR_WIDTH,
    );
    frame
        .objects
        .iter()
        .zip(kinds)
        .any(|(o, k)| corridor.intersects(&footprint(*k, o.position, o.heading)))
}

/// Detects collisions, solid-marking departures and unjustified stops; the
/// earliest frame is reported per kind. The route is re-derived from the first
/// frame, so this is a pure function of the trace and the map.
pub fn detect_violations(trace: &EpisodeTrace, network: &RoadNetwork, motionless_seconds: f64) -> Vec<ViolationRecord> {
    let route = trace
        .frames
        .first()
        .and_then(|f| network.route(f.ego.position, f.ego.heading).ok());
    detect_with(trace, &SolidMarkings::new(network), route.as_ref(), motionless_seconds)
}

pub fn detect_with(
    trace: &EpisodeTrace,
    markings: &SolidMarkings,
    route: Option<&Route>,
    motionless_seconds: f64,
) -> Vec<ViolationRecord> {
    let mut out = Vec::new();
    let mut collision = None;
    let mut departure = None;
    let mut motionless = None;
    let mut done = false;
    let mut still = 0usize;
    for (t, f) in trace.frames.iter().enumerate() {
        if collision.is_none() {
            if let Some(i) = overlapping_objects(f, &trace.kinds).next() {
                collision = Some(ViolationRecord {
                    kind: ViolationKind::Collision,
                    frame: t,
                    object: Some(i),
                });
            }
        }
        if departure.is_none() && markings.crossed_by(&ego_footprint(f)) {
            departure = Some(ViolationRecord {
                kind: ViolationKind::LaneDeparture,
                frame: t,
                object: None,
            });
        }
        if motionless.is_none() {
            done = done || route.is_none_or(|r| route_complete(r, f.ego.position));
            if !done && f.ego.speed < STATIONARY_SPEED && !path_blocked(f, &trace.kinds) {
                still += 1;
                if still as f64 * trace.dt > motionless_seconds + 1e-9 {
                    motionless = Some(ViolationRecord {
                        kind: ViolationKind::Motionless,
                        frame: t,
                        object: None,
                    });
                }
            } else {
                still = 0;
            }
        }
    }
    out.extend(collision);
    out.extend(departure);
    out.extend(motionless);
    out
}
