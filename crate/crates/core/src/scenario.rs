//! Chromosome seeds, their normalized encoding, and the ego-relative particle
//! state refined by SVGD.

use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec2};
use crate::map::{match_to_set, RoadNetwork};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default number of dynamic objects per scenario.
pub const DEFAULT_OBJECT_COUNT: usize = 20;
/// Minimum object clearance from the ego start (one vehicle length).
pub const EGO_CLEARANCE: f64 = 4.5;
const SPAWN_MATCH_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Vehicle,
    Bicycle,
    Pedestrian,
}

impl ObjectKind {
    /// Position of the kind in the normalized seed vector.
    pub fn as_fraction(self) -> f64 {
        match self {
            Self::Vehicle => 0.0,
            Self::Bicycle => 0.5,
            Self::Pedestrian => 1.0,
        }
    }

    pub fn from_fraction(f: f64) -> Self {
        if f < 0.25 {
            Self::Vehicle
        } else if f < 0.75 {
            Self::Bicycle
        } else {
            Self::Pedestrian
        }
    }

    /// Footprint `(length, width)` in meters.
    pub fn footprint(self) -> (f64, f64) {
        match self {
            Self::Vehicle => (4.5, 2.0),
            Self::Bicycle => (1.8, 0.6),
            Self::Pedestrian => (0.5, 0.5),
        }
    }

    /// Wheelbase for the bicycle model; pedestrians have none.
    pub fn wheelbase(self) -> Option<f64> {
        match self {
            Self::Vehicle => Some(2.7),
            Self::Bicycle => Some(1.1),
            Self::Pedestrian => None,
        }
    }
}

/// Sampling weights for object kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindMix {
    pub vehicle: f64,
    pub bicycle: f64,
    pub pedestrian: f64,
}

impl Default for KindMix {
    fn default() -> Self {
        Self {
            vehicle: 0.6,
            bicycle: 0.2,
            pedestrian: 0.2,
        }
    }
}

impl KindMix {
    pub fn validate(&self) -> Result<()> {
        let w = [self.vehicle, self.bicycle, self.pedestrian];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!("invalid kind mix {self:?}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ObjectKind {
        let total = self.vehicle + self.bicycle + self.pedestrian;
        let u = rng.gen::<f64>() * total;
        if u < self.vehicle {
            ObjectKind::Vehicle
        } else if u < self.vehicle + self.bicycle {
            ObjectKind::Bicycle
        } else {
            ObjectKind::Pedestrian
        }
    }
}

/// Position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self { position, heading }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectInit {
    pub kind: ObjectKind,
    pub position: Vec2,
    pub heading: f64,
}

impl ObjectInit {
    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteGene {
    pub ego_position: Vec2,
    pub ego_heading: f64,
    pub destination: Vec2,
}

/// A test seed: where the ego starts and heads, and where each dynamic object starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub route_gene: RouteGene,
    pub dynamics_gene: Vec<ObjectInit>,
}

impl Chromosome {
    pub fn ego_pose(&self) -> Pose {
        Pose::new(self.route_gene.ego_position, self.route_gene.ego_heading)
    }

    /// One-line JSON record.
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("chromosome serializes")
    }

    pub fn from_record(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

/// Ego-relative state of one object: longitudinal and lateral offsets in the
/// ego frame (lateral positive to the ego's left) and relative yaw.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Particle {
    pub delta_s: f64,
    pub delta_d: f64,
    pub delta_psi: f64,
}

impl Particle {
    pub fn new(delta_s: f64, delta_d: f64, delta_psi: f64) -> Self {
        Self {
            delta_s,
            delta_d,
            delta_psi,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.delta_s, self.delta_d, self.delta_psi]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Expresses `object` in the ego's body frame.
pub fn relative_state(ego: Pose, object: Pose) -> Particle {
    let (s, c) = ego.heading.sin_cos();
    let d = object.position - ego.position;
    Particle {
        delta_s: c * d.x + s * d.y,
        delta_d: -s * d.x + c * d.y,
        delta_psi: wrap_angle(object.heading - ego.heading),
    }
}

/// Inverse of [`relative_state`].
pub fn absolute_pose(ego: Pose, p: Particle) -> Pose {
    let (s, c) = ego.heading.sin_cos();
    let position = ego.position + Vec2::new(c * p.delta_s - s * p.delta_d, s * p.delta_s + c * p.delta_d);
    Pose::new(position, wrap_angle(ego.heading + p.delta_psi))
}

/// Draws a random seed: ego on a uniform spawn point, objects on distinct
/// spawn points at least one vehicle length from the ego.
pub fn random_chromosome<R: Rng + ?Sized>(
    network: &RoadNetwork,
    object_count: usize,
    mix: &KindMix,
    rng: &mut R,
) -> Result<Chromosome> {
    let spawns = &network.spawn_points;
    if spawns.is_empty() {
        return Err(Error::MapTooSmall {
            requested: object_count + 1,
            available: 0,
        });
    }
    let ego_idx = rng.gen_range(0..spawns.len());
    let ego = spawns[ego_idx];
    let route = network.route(ego.pos, ego.heading)?;
    let eligible: Vec<usize> = (0..spawns.len())
        .filter(|&i| i != ego_idx && spawns[i].pos.dist(ego.pos) >= EGO_CLEARANCE)
        .collect();
    if object_count > eligible.len() {
        return Err(Error::MapTooSmall {
            requested: object_count,
            available: eligible.len(),
        });
    }
    let picks = index::sample(rng, eligible.len(), object_count);
    let dynamics_gene = picks
        .into_iter()
        .map(|k| {
            let sp = spawns[eligible[k]];
            ObjectInit {
                kind: mix.sample(rng),
                position: sp.pos,
                heading: wrap_angle(sp.heading),
            }
        })
        .collect();
    Ok(Chromosome {
        route_gene: RouteGene {
            ego_position: ego.pos,
            ego_heading: wrap_angle(ego.heading),
            destination: route.destination,
        },
        dynamics_gene,
    })
}

fn encode_heading(h: f64) -> f64 {
    (wrap_angle(h) + PI) / (2.0 * PI)
}

/// Normalized vector in `[0,1]^n`: ego `(x, y, heading)` followed by each
/// object's `(x, y, heading, kind)`. Positions scale by the map bounding box.
pub fn encode(chromosome: &Chromosome, network: &RoadNetwork) -> Vec<f64> {
    let b = network.bounds();
    let size = b.size();
    let nx = |p: Vec2| {
        (
            ((p.x - b.min.x) / size.x).clamp(0.0, 1.0),
            ((p.y - b.min.y) / size.y).clamp(0.0, 1.0),
        )
    };
    let mut v = Vec::with_capacity(3 + 4 * chromosome.dynamics_gene.len());
    let (ex, ey) = nx(chromosome.route_gene.ego_position);
    v.extend([ex, ey, encode_heading(chromosome.route_gene.ego_heading)]);
    for o in &chromosome.dynamics_gene {
        let (x, y) = nx(o.position);
        v.extend([x, y, encode_heading(o.heading), o.kind.as_fraction()]);
    }
    v
}

/// Inverse of [`encode`]. The destination is re-derived from the ego pose.
pub fn decode(v: &[f64], network: &RoadNetwork) -> Result<Chromosome> {
    if v.len() < 3 || !(v.len() - 3).is_multiple_of(4) {
        return Err(Error::Validation(format!(
            "encoded seed has invalid length {}",
            v.len()
        )));
    }
    let b = network.bounds();
    let size = b.size();
    let px = |x: f64, y: f64| Vec2::new(b.min.x + x * size.x, b.min.y + y * size.y);
    let ph = |h: f64| wrap_angle(h * 2.0 * PI - PI);
    let ego_position = px(v[0], v[1]);
    let ego_heading = ph(v[2]);
    let destination = network.route(ego_position, ego_heading)?.destination;
    let dynamics_gene = v[3..]
        .chunks_exact(4)
        .map(|c| ObjectInit {
            position: px(c[0], c[1]),
            heading: ph(c[2]),
            kind: ObjectKind::from_fraction(c[3]),
        })
        .collect();
    Ok(Chromosome {
        route_gene: RouteGene {
            ego_position,
            ego_heading,
            destination,
        },
        dynamics_gene,
    })
}

/// Places refined particles back into the scenario. Each assigned object lands
/// on the nearest spawn point that is not held by another object and keeps
/// clear of the ego; when none is free it snaps to the nearest centerline.
pub fn apply_particles(
    chromosome: &Chromosome,
    assignments: &[(usize, Particle)],
    network: &RoadNetwork,
) -> Chromosome {
    let ego = chromosome.ego_pose();
    let mut out = chromosome.clone();
    for &(idx, particle) in assignments {
        let target = absolute_pose(ego, particle);
        let position = nearest_free_spawn(&out, idx, target.position, network)
            .unwrap_or_else(|| network.snap_to_centerline(target.position));
        out.dynamics_gene[idx].position = position;
        out.dynamics_gene[idx].heading = target.heading;
    }
    out
}

fn nearest_free_spawn(c: &Chromosome, idx: usize, p: Vec2, network: &RoadNetwork) -> Option<Vec2> {
    let ego = c.route_gene.ego_position;
    let others: Vec<Vec2> = c
        .dynamics_gene
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != idx)
        .map(|(_, o)| o.position)
        .collect();
    network
        .spawn_points
        .iter()
        .map(|sp| sp.pos)
        .filter(|sp| sp.dist(ego) >= EGO_CLEARANCE)
        .filter(|sp| match_to_set(*sp, &others, SPAWN_MATCH_TOL).is_none())
        .map(|sp| (sp.dist(p), sp))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, sp)| sp)
}
