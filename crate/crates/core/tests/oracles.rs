mod common;

use common::{nearest_within, rng};
use rand::Rng;
use scenseed::geom::Vec2;
use scenseed::map::{match_to_set, BuiltinMap, ROUTE_HORIZON};
use scenseed::metrics::{trajectory_coverage, EpisodeView, MATCH_THRESHOLD};
use scenseed::scenario::{random_chromosome, Chromosome, KindMix, ObjectInit, ObjectKind, RouteGene};
use scenseed::sim::{random_controls, AgentState, Control, ControlLimits};
use std::f64::consts::PI;

/// Pearson statistic of `counts` against equal expectation.
fn chi_square(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

// Upper 0.1% points of the chi-square distribution.
const CHI2_999_DF9: f64 = 27.88;
const CHI2_999_DF19: f64 = 43.82;

#[test]
fn ego_spawn_draws_are_uniform() {
    let net = BuiltinMap::Grid4.build();
    let spawns: Vec<Vec2> = net.spawn_points.iter().map(|s| s.pos).collect();
    let bins = 20;
    let mut counts = vec![0usize; bins];
    let mut r = rng(2024);
    let draws = 1000;
    for _ in 0..draws {
        let c = random_chromosome(&net, 20, &KindMix::default(), &mut r).unwrap();
        let idx = match_to_set(c.route_gene.ego_position, &spawns, 1e-9).expect("ego sits on a spawn point");
        counts[idx * bins / spawns.len()] += 1;
    }
    // bins hold unequal numbers of spawn points when the count does not divide evenly
    let sizes: Vec<usize> = (0..bins)
        .map(|b| (0..spawns.len()).filter(|i| i * bins / spawns.len() == b).count())
        .collect();
    let stat: f64 = counts
        .iter()
        .zip(&sizes)
        .map(|(&c, &s)| {
            let e = draws as f64 * s as f64 / spawns.len() as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    assert!(stat < CHI2_999_DF19, "χ² = {stat}");
}

#[test]
fn objects_use_distinct_spawn_points_clear_of_the_ego() {
    let net = BuiltinMap::Grid4.build();
    let spawns: Vec<Vec2> = net.spawn_points.iter().map(|s| s.pos).collect();
    let mut r = rng(7);
    for _ in 0..200 {
        let c = random_chromosome(&net, 20, &KindMix::default(), &mut r).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for o in &c.dynamics_gene {
            let i = match_to_set(o.position, &spawns, 1e-9).expect("object on a spawn point");
            assert!(seen.insert(i), "spawn point {i} used twice");
            assert!(o.position.dist(c.route_gene.ego_position) >= scenseed::scenario::EGO_CLEARANCE);
        }
    }
}

#[test]
fn ring_routes_follow_the_circle() {
    let net = BuiltinMap::Ring.build();
    for (lane, ccw) in [(0usize, true), (1, false)] {
        let line = &net.lanes[lane].centerline;
        let r = line[0].norm();
        let segs = line.len() - 1;
        let seg = 2.0 * r * (PI / segs as f64).sin();
        let perimeter = seg * segs as f64;
        // point at polygon arc `a`, from the analytic vertices
        let at = |a: f64| {
            let a = a.rem_euclid(perimeter);
            let k = (a / seg).floor();
            let t = a / seg - k;
            let ang = |k: f64| {
                if ccw {
                    2.0 * PI * k / segs as f64
                } else {
                    -2.0 * PI * k / segs as f64
                }
            };
            let p0 = Vec2::new(r * ang(k).cos(), r * ang(k).sin());
            let p1 = Vec2::new(r * ang(k + 1.0).cos(), r * ang(k + 1.0).sin());
            p0 + (p1 - p0) * t
        };
        let spacing = 5.0;
        let mut start_arc = 0.0;
        while start_arc < perimeter - 1e-9 {
            let start = at(start_arc);
            let heading = (at(start_arc + 0.01) - start).angle();
            let route = net.route(start, heading).unwrap();
            // farthest waypoint within the horizon, counting the wrap past the seam
            let expected = if start_arc + ROUTE_HORIZON < perimeter {
                ROUTE_HORIZON
            } else {
                let past_seam = ((ROUTE_HORIZON - (perimeter - start_arc)) / spacing + 1e-9).floor() * spacing;
                perimeter - start_arc + past_seam
            };
            assert!(
                (route.length - expected).abs() < 1e-6,
                "lane {lane} from arc {start_arc}: length {} vs {expected}",
                route.length
            );
            assert!(route.destination.dist(at(start_arc + expected)) < 1e-6);
            start_arc += spacing * 7.0;
        }
    }
}

#[test]
fn nearest_match_agrees_with_linear_scan() {
    let mut r = rng(31);
    for _ in 0..300 {
        let n = r.gen_range(0..40);
        let pts: Vec<Vec2> = (0..n)
            .map(|_| Vec2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let p = Vec2::new(r.gen_range(-1.2..1.2), r.gen_range(-1.2..1.2));
        let thr = r.gen_range(0.0..0.5);
        assert_eq!(match_to_set(p, &pts, thr), nearest_within(p, &pts, thr));
        if let Some(&q) = pts.first() {
            assert_eq!(match_to_set(q, &pts, 0.0).map(|i| pts[i]), Some(q));
        }
    }
}

#[test]
fn random_controls_fill_their_ranges_uniformly() {
    let limits = ControlLimits::default();
    let dt = 0.1;
    let car = AgentState::at_rest(ObjectKind::Vehicle, scenseed::scenario::Pose::new(Vec2::ZERO, 0.0));
    let walker = AgentState {
        kind: ObjectKind::Pedestrian,
        ..car
    };
    let mut r = rng(5);
    let mut accel = [0usize; 10];
    let mut steer = [0usize; 10];
    let mut radius_sq = [0usize; 10];
    let mut bearing = [0usize; 10];
    for _ in 0..10_000 {
        let cs = random_controls(&[car, walker], &limits, dt, &mut r);
        let bin = |v: f64, half: f64| (((v + half) / (2.0 * half)) * 10.0).floor().min(9.0) as usize;
        match cs[0] {
            Control::Drive { accel: a, steer: s } => {
                accel[bin(a, limits.accel)] += 1;
                steer[bin(s, limits.steer)] += 1;
            }
            other => panic!("vehicle got {other:?}"),
        }
        match cs[1] {
            Control::Walk { dx, dy } => {
                let reach = limits.walk_speed * dt;
                let q = (dx * dx + dy * dy) / (reach * reach);
                assert!(q <= 1.0 + 1e-12);
                radius_sq[((q * 10.0).floor() as usize).min(9)] += 1;
                bearing[bin(dy.atan2(dx), PI)] += 1;
            }
            other => panic!("pedestrian got {other:?}"),
        }
    }
    for (name, c) in [
        ("accel", accel),
        ("steer", steer),
        ("radius²", radius_sq),
        ("bearing", bearing),
    ] {
        let stat = chi_square(&c);
        assert!(stat < CHI2_999_DF9, "{name}: χ² = {stat} for {c:?}");
    }
}

/// An episode where the only object drives the given positions.
struct Driven {
    seed: Chromosome,
    path: Vec<Vec2>,
}

impl EpisodeView for Driven {
    fn violated(&self) -> bool {
        false
    }
    fn seed(&self) -> &Chromosome {
        &self.seed
    }
    fn object_positions(&self) -> Box<dyn Iterator<Item = Vec2> + '_> {
        Box::new(self.path.iter().copied())
    }
}

fn driven(path: Vec<Vec2>) -> Driven {
    Driven {
        seed: Chromosome {
            route_gene: RouteGene {
                ego_position: Vec2::ZERO,
                ego_heading: 0.0,
                destination: Vec2::ZERO,
            },
            dynamics_gene: vec![ObjectInit {
                kind: ObjectKind::Vehicle,
                position: path[0],
                heading: 0.0,
            }],
        },
        path,
    }
}

#[test]
fn driving_a_whole_lane_covers_its_waypoint_share() {
    let net = BuiltinMap::Straight.build();
    // 0.5 m steps along the first lane's centerline hit every 5 m waypoint exactly
    let path: Vec<Vec2> = (0..=600).map(|k| Vec2::new(k as f64 * 0.5, -1.75)).collect();
    let on_lane = net.waypoints.iter().filter(|w| (w.y + 1.75).abs() < 1e-9).count();
    let cov = trajectory_coverage(&[driven(path.clone())], &net, MATCH_THRESHOLD);
    assert!((cov - on_lane as f64 / net.waypoints.len() as f64).abs() < 1e-12);
    assert!(
        (cov - 0.5).abs() < 1e-12,
        "two mirror-image lanes split the waypoints evenly"
    );

    // parked off every waypoint
    let off = driven(vec![Vec2::new(2.5, -1.75); 10]);
    assert_eq!(trajectory_coverage(&[off], &net, MATCH_THRESHOLD), 0.0);
}

#[test]
fn coverage_only_grows_as_episodes_are_added() {
    let net = BuiltinMap::Grid4.build();
    let mut r = rng(17);
    let mut eps = Vec::new();
    let mut last = 0.0;
    for _ in 0..30 {
        let wp = net.waypoints[r.gen_range(0..net.waypoints.len())];
        let jitter = Vec2::new(r.gen_range(-0.04..0.04), r.gen_range(-0.04..0.04));
        eps.push(driven(vec![wp + jitter * 0.5, Vec2::new(1e4, 1e4)]));
        let cov = trajectory_coverage(&eps, &net, MATCH_THRESHOLD);
        assert!(cov >= last);
        last = cov;
    }
    assert!(last > 0.0);
}
