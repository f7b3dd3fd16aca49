//! Generated desk-scale maps.

use super::{Lane, MapDocument, Marking, Omega, RoadNetwork};
use crate::geom::Vec2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

const LANE_WIDTH: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinMap {
    /// 300 m two-lane road, one lane per direction.
    Straight,
    /// 3×3 grid of two-lane roads with four-way intersections every 100 m.
    Grid4,
    /// Two-lane ring road, radius 60 m.
    Ring,
    /// 400 m winding single-lane road.
    Rural,
}

impl BuiltinMap {
    pub const ALL: [BuiltinMap; 4] = [Self::Straight, Self::Grid4, Self::Ring, Self::Rural];

    pub fn name(self) -> &'static str {
        match self {
            Self::Straight => "straight",
            Self::Grid4 => "grid4",
            Self::Ring => "ring",
            Self::Rural => "rural",
        }
    }

    pub fn document(self) -> MapDocument {
        let (lanes, omega) = match self {
            Self::Straight => (straight(), Omega::new(100.0, 7.0)),
            Self::Grid4 => (grid4(), Omega::new(50.0, 50.0)),
            Self::Ring => (ring(), Omega::new(60.0, 60.0)),
            Self::Rural => (rural(), Omega::new(80.0, 10.0)),
        };
        MapDocument {
            lanes,
            spawn_points: None,
            waypoints: None,
            omega,
        }
    }

    pub fn build(self) -> RoadNetwork {
        RoadNetwork::from_document(self.document()).expect("built-in maps are valid")
    }
}

impl fmt::Display for BuiltinMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinMap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown map kind `{s}` (expected straight, grid4, ring or rural)"))
    }
}

fn lane(centerline: Vec<Vec2>, left: Marking, right: Marking) -> Lane {
    Lane {
        centerline,
        width: LANE_WIDTH,
        left_marking: left,
        right_marking: right,
    }
}

fn straight() -> Vec<Lane> {
    let h = LANE_WIDTH / 2.0;
    vec![
        lane(
            vec![Vec2::new(0.0, -h), Vec2::new(300.0, -h)],
            Marking::Dashed,
            Marking::Solid,
        ),
        lane(
            vec![Vec2::new(300.0, h), Vec2::new(0.0, h)],
            Marking::Dashed,
            Marking::Solid,
        ),
    ]
}

/// Roads at 0, 100 and 200 m in both axes, extended 50 m past the outer
/// intersections. Each road is split into blocks between intersections so
/// markings stop at the junction box.
fn grid4() -> Vec<Lane> {
    let h = LANE_WIDTH / 2.0;
    let roads = [0.0, 100.0, 200.0];
    let edges = [
        (-50.0, -LANE_WIDTH),
        (LANE_WIDTH, 100.0 - LANE_WIDTH),
        (100.0 + LANE_WIDTH, 200.0 - LANE_WIDTH),
        (200.0 + LANE_WIDTH, 250.0),
    ];
    let mut lanes = Vec::new();
    for &c in &roads {
        for &(a, b) in &edges {
            // horizontal road y = c: eastbound on the south side
            lanes.push(lane(
                vec![Vec2::new(a, c - h), Vec2::new(b, c - h)],
                Marking::Dashed,
                Marking::Solid,
            ));
            lanes.push(lane(
                vec![Vec2::new(b, c + h), Vec2::new(a, c + h)],
                Marking::Dashed,
                Marking::Solid,
            ));
            // vertical road x = c: northbound on the east side
            lanes.push(lane(
                vec![Vec2::new(c + h, a), Vec2::new(c + h, b)],
                Marking::Dashed,
                Marking::Solid,
            ));
            lanes.push(lane(
                vec![Vec2::new(c - h, b), Vec2::new(c - h, a)],
                Marking::Dashed,
                Marking::Solid,
            ));
        }
    }
    lanes
}

fn ring() -> Vec<Lane> {
    const SEGMENTS: usize = 72;
    let radius = 60.0;
    let circle = |r: f64, ccw: bool| -> Vec<Vec2> {
        (0..=SEGMENTS)
            .map(|k| {
                let frac = (k % SEGMENTS) as f64 / SEGMENTS as f64;
                let a = if ccw { 2.0 * PI * frac } else { -2.0 * PI * frac };
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect()
    };
    vec![
        lane(circle(radius + LANE_WIDTH / 2.0, true), Marking::Dashed, Marking::Solid),
        lane(
            circle(radius - LANE_WIDTH / 2.0, false),
            Marking::Dashed,
            Marking::Solid,
        ),
    ]
}

fn rural() -> Vec<Lane> {
    let pts = (0..=200)
        .map(|k| {
            let x = k as f64 * 2.0;
            Vec2::new(x, 15.0 * (2.0 * PI * x / 200.0).sin())
        })
        .collect();
    vec![lane(pts, Marking::Solid, Marking::Solid)]
}
