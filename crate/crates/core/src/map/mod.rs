//! Road network model and the geometric queries used by seeding, labeling and metrics.
//!
//! Lanes are directed: the centerline runs in the direction of travel, so "left"
//! and "right" markings are relative to that direction.

mod builtin;

pub use builtin::BuiltinMap;

use crate::error::{Error, Result};
use crate::geom::{self, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Minimum admissible lane width in meters.
pub const MIN_LANE_WIDTH: f64 = 2.0;
/// Spacing of generated spawn points and waypoints along centerlines.
pub const DEFAULT_SPACING: f64 = 5.0;
/// Maximum arc distance to the route destination.
pub const ROUTE_HORIZON: f64 = 200.0;

const SUCCESSOR_MAX_GAP: f64 = 10.0;
const SUCCESSOR_MAX_LATERAL: f64 = 0.5;
const SUCCESSOR_MAX_TURN: f64 = 0.3;
const WAYPOINT_ON_LANE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marking {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub centerline: Vec<Vec2>,
    pub width: f64,
    pub left_marking: Marking,
    pub right_marking: Marking,
}

impl Lane {
    pub fn length(&self) -> f64 {
        geom::polyline_length(&self.centerline)
    }

    /// Distance from `p` to the closest centerline point.
    pub fn lateral_offset(&self, p: Vec2) -> f64 {
        geom::project_polyline(p, &self.centerline).distance
    }

    /// Boundary polyline on the given side (`left = true` for the left edge).
    pub fn boundary(&self, left: bool) -> Vec<Vec2> {
        let off = if left { self.width / 2.0 } else { -self.width / 2.0 };
        geom::offset_polyline(&self.centerline, off)
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let field = |f: &str| format!("lanes[{idx}].{f}");
        if !(self.width.is_finite() && self.width >= MIN_LANE_WIDTH) {
            return Err(Error::Validation(format!(
                "{} = {} (must be >= {MIN_LANE_WIDTH} m)",
                field("width"),
                self.width
            )));
        }
        if self.centerline.len() < 2 {
            return Err(Error::Validation(format!(
                "{} needs at least 2 points",
                field("centerline")
            )));
        }
        if self.centerline.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation(format!(
                "{} has non-finite points",
                field("centerline")
            )));
        }
        if self.centerline.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!(
                "{} has a zero-length segment",
                field("centerline")
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnPoint {
    pub pos: Vec2,
    pub heading: f64,
}

/// Box of admissible ego-relative object states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub d_s: f64,
    pub d_d: f64,
    #[serde(skip, default = "default_psi_max")]
    pub psi_max: f64,
}

fn default_psi_max() -> f64 {
    PI
}

impl Omega {
    pub fn new(d_s: f64, d_d: f64) -> Self {
        Self { d_s, d_d, psi_max: PI }
    }

    /// Per-axis half-widths `(D_s, D_d, Ψ_max)`.
    pub fn scales(&self) -> [f64; 3] {
        [self.d_s, self.d_d, self.psi_max]
    }
}

/// The on-disk map document. Spawn points and waypoints are generated along
/// every centerline when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub lanes: Vec<Lane>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn_points: Option<Vec<SpawnPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<Vec2>>,
    pub omega: Omega,
}

/// Axis-aligned bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn size(&self) -> Vec2 {
        self.max - self.min
    }
}

/// Lane connectivity: `(next lane, gap in meters)`.
type Successor = Option<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub lanes: Vec<Lane>,
    pub spawn_points: Vec<SpawnPoint>,
    pub waypoints: Vec<Vec2>,
    pub omega: Omega,
    bounds: Bounds,
    lane_lengths: Vec<f64>,
    successors: Vec<Successor>,
    /// Per lane, `(arc, waypoint index)` sorted by arc.
    lane_waypoints: Vec<Vec<(f64, usize)>>,
}

/// A route along lanes from a start point to its destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub points: Vec<Vec2>,
    pub destination: Vec2,
    pub destination_index: usize,
    pub length: f64,
}

/// Loads a map from its JSON text.
pub fn load_map(source: &str) -> Result<RoadNetwork> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let doc: MapDocument = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    RoadNetwork::from_document(doc)
}

impl RoadNetwork {
    pub fn from_document(doc: MapDocument) -> Result<Self> {
        for (i, lane) in doc.lanes.iter().enumerate() {
            lane.validate(i)?;
        }
        if doc.lanes.is_empty() {
            return Err(Error::Validation("lanes is empty".into()));
        }
        let om = doc.omega;
        if !(om.d_s.is_finite() && om.d_s > 0.0 && om.d_d.is_finite() && om.d_d > 0.0) {
            return Err(Error::Validation(format!(
                "omega must have d_s > 0 and d_d > 0 (got {}, {})",
                om.d_s, om.d_d
            )));
        }
        let omega = Omega::new(om.d_s, om.d_d);
        let spawn_points = doc
            .spawn_points
            .unwrap_or_else(|| generate_spawn_points(&doc.lanes, DEFAULT_SPACING));
        let waypoints = doc
            .waypoints
            .unwrap_or_else(|| generate_waypoints(&doc.lanes, DEFAULT_SPACING));

        let bounds = compute_bounds(&doc.lanes);
        for (i, sp) in spawn_points.iter().enumerate() {
            if !sp.heading.is_finite() || !bounds.contains(sp.pos) {
                return Err(Error::Validation(format!(
                    "spawn_points[{i}] lies outside the map bounds"
                )));
            }
        }
        for (i, wp) in waypoints.iter().enumerate() {
            if !bounds.contains(*wp) {
                return Err(Error::Validation(format!("waypoints[{i}] lies outside the map bounds")));
            }
        }

        let lanes = doc.lanes;
        let lane_lengths: Vec<f64> = lanes.iter().map(Lane::length).collect();
        let successors = (0..lanes.len()).map(|i| find_successor(&lanes, i)).collect();
        let lane_waypoints = lanes
            .iter()
            .map(|lane| {
                let mut on: Vec<(f64, usize)> = waypoints
                    .iter()
                    .enumerate()
                    .filter_map(|(j, wp)| {
                        let pr = geom::project_polyline(*wp, &lane.centerline);
                        (pr.distance <= WAYPOINT_ON_LANE_TOL).then_some((pr.arc, j))
                    })
                    .collect();
                on.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                on
            })
            .collect();

        Ok(Self {
            lanes,
            spawn_points,
            waypoints,
            omega,
            bounds,
            lane_lengths,
            successors,
            lane_waypoints,
        })
    }

    /// The document form with spawn points and waypoints listed explicitly.
    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            lanes: self.lanes.clone(),
            spawn_points: Some(self.spawn_points.clone()),
            waypoints: Some(self.waypoints.clone()),
            omega: self.omega,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// The lane an agent at `p` heading `heading` is driving on: the nearest lane
    /// whose direction agrees with the heading, falling back to the nearest lane.
    pub fn lane_at(&self, p: Vec2, heading: f64) -> usize {
        let dir = Vec2::from_heading(heading);
        let mut best_aligned: Option<(f64, usize)> = None;
        let mut best_any = (f64::INFINITY, 0);
        for (i, lane) in self.lanes.iter().enumerate() {
            let pr = geom::project_polyline(p, &lane.centerline);
            if pr.distance < best_any.0 {
                best_any = (pr.distance, i);
            }
            let seg = lane.centerline[pr.segment + 1] - lane.centerline[pr.segment];
            if seg.dot(dir) > 0.0 && pr.distance <= lane.width && best_aligned.is_none_or(|(d, _)| pr.distance < d) {
                best_aligned = Some((pr.distance, i));
            }
        }
        best_aligned.map_or(best_any.1, |(_, i)| i)
    }

    /// Whether `p` lies on the drivable surface of some lane.
    pub fn is_on_road(&self, p: Vec2) -> bool {
        self.lanes.iter().any(|l| l.lateral_offset(p) <= l.width / 2.0)
    }

    /// Nearest point on any centerline.
    pub fn snap_to_centerline(&self, p: Vec2) -> Vec2 {
        self.lanes
            .iter()
            .map(|l| geom::project_polyline(p, &l.centerline))
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .map(|pr| pr.point)
            .unwrap_or(p)
    }

    /// Walks the lane graph forward from `start` and returns the route to the
    /// farthest waypoint within [`ROUTE_HORIZON`] meters of arc.
    pub fn route(&self, start: Vec2, heading: f64) -> Result<Route> {
        let lane = self.lane_at(start, heading);
        let pr = geom::project_polyline(start, &self.lanes[lane].centerline);
        if pr.distance > self.lanes[lane].width / 2.0 {
            return Err(Error::IsolatedStart { x: start.x, y: start.y });
        }
        let within = self.walk(lane, pr.arc, Some(ROUTE_HORIZON));
        let best = within
            .iter()
            // projection round-off must not drop a waypoint sitting exactly on the horizon
            .filter(|c| c.0 <= ROUTE_HORIZON + 1e-6)
            .copied()
            .reduce(|a, b| if b.0 > a.0 { b } else { a });
        let (arc, wp) = match best {
            Some(b) => b,
            None => self
                .walk(lane, pr.arc, None)
                .into_iter()
                .reduce(|a, b| if b.0 > a.0 { b } else { a })
                .ok_or(Error::IsolatedStart { x: start.x, y: start.y })?,
        };
        let points = self.route_points(start, lane, pr.arc, arc, self.waypoints[wp]);
        Ok(Route {
            points,
            destination: self.waypoints[wp],
            destination_index: wp,
            length: arc,
        })
    }

    /// Collects `(arc from start, waypoint)` pairs reachable going forward. Each
    /// lane is entered at most twice so loops terminate.
    fn walk(&self, lane: usize, s0: f64, limit: Option<f64>) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        let mut visits = vec![0u8; self.lanes.len()];
        let max_visits = if limit.is_some() { 2 } else { 1 };
        let mut cur = lane;
        let mut offset = -s0;
        let mut first = true;
        visits[cur] += 1;
        loop {
            for &(s, wp) in &self.lane_waypoints[cur] {
                if !first || s >= s0 - 1e-9 {
                    out.push((offset + s, wp));
                }
            }
            first = false;
            let end = offset + self.lane_lengths[cur];
            if limit.is_some_and(|l| end > l) {
                break;
            }
            let Some((next, gap)) = self.successors[cur] else {
                break;
            };
            if visits[next] >= max_visits {
                break;
            }
            visits[next] += 1;
            offset = end + gap;
            cur = next;
        }
        out
    }

    fn route_points(&self, start: Vec2, lane: usize, s0: f64, arc: f64, dest: Vec2) -> Vec<Vec2> {
        let mut pts = vec![start];
        let mut cur = lane;
        let mut offset = -s0;
        let mut first = true;
        loop {
            let line = &self.lanes[cur].centerline;
            let mut acc = 0.0;
            for (k, p) in line.iter().enumerate() {
                if k > 0 {
                    acc += line[k - 1].dist(*p);
                }
                let total = offset + acc;
                if (first && acc <= s0) || total <= 0.0 {
                    continue;
                }
                if total >= arc {
                    break;
                }
                pts.push(*p);
            }
            first = false;
            let end = offset + self.lane_lengths[cur];
            if end >= arc {
                break;
            }
            match self.successors[cur] {
                Some((next, gap)) => {
                    offset = end + gap;
                    cur = next;
                }
                None => break,
            }
        }
        if pts.last() != Some(&dest) {
            pts.push(dest);
        }
        pts.dedup();
        pts
    }
}

/// Degree to which a point sits inside a lane: 1 on the centerline, falling
/// linearly to 0 at one lane width of lateral offset.
pub fn lane_overlap(position: Vec2, lane: &Lane) -> f64 {
    (1.0 - lane.lateral_offset(position) / lane.width).clamp(0.0, 1.0)
}

/// Gradient of [`lane_overlap`] with respect to the position. Zero outside the
/// ramp, on the centerline and at the kinks.
pub fn lane_overlap_grad(position: Vec2, lane: &Lane) -> Vec2 {
    let pr = geom::project_polyline(position, &lane.centerline);
    if pr.distance <= 0.0 || pr.distance >= lane.width {
        return Vec2::ZERO;
    }
    (position - pr.point) * (-1.0 / (lane.width * pr.distance))
}

/// Index of the nearest point within `threshold`; ties go to the lowest index.
pub fn match_to_set(position: Vec2, points: &[Vec2], threshold: f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = position.dist(*p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.filter(|(d, _)| *d <= threshold).map(|(_, i)| i)
}

/// Destination of the route starting at `start` along `heading`.
pub fn route_destination(start: Vec2, heading: f64, network: &RoadNetwork) -> Result<Vec2> {
    network.route(start, heading).map(|r| r.destination)
}

fn compute_bounds(lanes: &[Lane]) -> Bounds {
    let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for lane in lanes {
        for p in &lane.centerline {
            min = Vec2::new(min.x.min(p.x - lane.width), min.y.min(p.y - lane.width));
            max = Vec2::new(max.x.max(p.x + lane.width), max.y.max(p.y + lane.width));
        }
    }
    Bounds { min, max }
}

fn is_closed(lane: &Lane) -> bool {
    let n = lane.centerline.len();
    lane.centerline[0].dist(lane.centerline[n - 1]) < 1e-9
}

/// Spawn points every `spacing` meters, excluding the lane end.
pub fn generate_spawn_points(lanes: &[Lane], spacing: f64) -> Vec<SpawnPoint> {
    let mut out = Vec::new();
    for lane in lanes {
        let len = lane.length();
        let mut s = 0.0;
        while s < len - 1e-9 {
            let (p, dir) = geom::point_at_arc(&lane.centerline, s);
            out.push(SpawnPoint {
                pos: p,
                heading: dir.angle(),
            });
            s += spacing;
        }
    }
    out
}

/// Waypoints every `spacing` meters, plus the lane end on open lanes.
pub fn generate_waypoints(lanes: &[Lane], spacing: f64) -> Vec<Vec2> {
    let mut out = Vec::new();
    for lane in lanes {
        let len = lane.length();
        let mut s = 0.0;
        while s < len - 1e-9 {
            out.push(geom::point_at_arc(&lane.centerline, s).0);
            s += spacing;
        }
        if !is_closed(lane) {
            out.push(*lane.centerline.last().unwrap());
        }
    }
    out
}

/// Straight-through continuation of lane `i`: the lane whose start lies just
/// ahead of `i`'s end, aligned with its final direction.
fn find_successor(lanes: &[Lane], i: usize) -> Successor {
    let a = &lanes[i].centerline;
    let end = a[a.len() - 1];
    let dir = (end - a[a.len() - 2]).normalized()?;
    let mut best: Successor = None;
    for (j, lane) in lanes.iter().enumerate() {
        let b = &lane.centerline;
        if j == i && !is_closed(&lanes[i]) {
            continue;
        }
        let rel = b[0] - end;
        let along = rel.dot(dir);
        let lateral = rel.cross(dir).abs();
        let Some(bdir) = (b[1] - b[0]).normalized() else {
            continue;
        };
        let turn = dir.cross(bdir).atan2(dir.dot(bdir)).abs();
        if (-1e-9..=SUCCESSOR_MAX_GAP).contains(&along)
            && lateral <= SUCCESSOR_MAX_LATERAL
            && turn <= SUCCESSOR_MAX_TURN
            && best.is_none_or(|(_, g)| along.max(0.0) < g)
        {
            best = Some((j, along.max(0.0)));
        }
    }
    best
}
