//! Campaign-level effectiveness and diversity metrics.

use crate::geom::Vec2;
use crate::map::{match_to_set, RoadNetwork};
use crate::scenario::{encode, Chromosome};
use crate::sim::EpisodeResult;
use std::collections::BTreeSet;

pub const TOP_K: usize = 10;
pub const MAP_COVERAGE_RADIUS: f64 = 50.0;
pub const MATCH_THRESHOLD: f64 = 0.05;

/// What a metric needs to know about one episode.
pub trait EpisodeView {
    fn violated(&self) -> bool;
    fn seed(&self) -> &Chromosome;
    /// Every recorded object position over the episode.
    fn object_positions(&self) -> Box<dyn Iterator<Item = Vec2> + '_>;
}

impl EpisodeView for EpisodeResult {
    fn violated(&self) -> bool {
        !self.violations.is_empty()
    }

    fn seed(&self) -> &Chromosome {
        &self.seed
    }

    fn object_positions(&self) -> Box<dyn Iterator<Item = Vec2> + '_> {
        Box::new(
            self.trace
                .frames
                .iter()
                .flat_map(|f| f.objects.iter().map(|o| o.position)),
        )
    }
}

/// Share of episodes with at least one violation.
pub fn violation_rate<E: EpisodeView>(results: &[E]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.violated()).count() as f64 / results.len() as f64
}

/// 1-based round at which the `k`-th violating episode occurred.
pub fn top_k_rounds<E: EpisodeView>(results: &[E], k: usize) -> Option<usize> {
    results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.violated())
        .nth(k.checked_sub(1)?)
        .map(|(i, _)| i + 1)
}

/// Euclidean distance scaled by `1/√n` so two vectors in `[0,1]^n` are at most 1 apart.
pub fn normalized_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    crate::arsg::euclidean(a, b) / (a.len() as f64).sqrt()
}

/// Mean over seeds of the mean normalized distance to all seeds (self included).
pub fn parameter_distance_of(vectors: &[Vec<f64>]) -> Option<f64> {
    let n = vectors.len();
    if n == 0 {
        return None;
    }
    let mut total = 0.0;
    for a in vectors {
        let inner: f64 = vectors.iter().map(|b| normalized_distance(a, b)).sum();
        total += inner / n as f64;
    }
    Some(total / n as f64)
}

/// Diversity of the given seeds; `None` when there are none.
pub fn parameter_distance(seeds: &[&Chromosome], network: &RoadNetwork) -> Option<f64> {
    let v: Vec<Vec<f64>> = seeds.iter().map(|s| encode(s, network)).collect();
    parameter_distance_of(&v)
}

/// Parameter distance over the violating episodes.
pub fn violating_parameter_distance<E: EpisodeView>(results: &[E], network: &RoadNetwork) -> Option<f64> {
    let seeds: Vec<&Chromosome> = results.iter().filter(|r| r.violated()).map(|r| r.seed()).collect();
    parameter_distance(&seeds, network)
}

/// Spawn points matched by initial object positions near the ego in violating episodes.
pub fn map_coverage_set<E: EpisodeView>(
    results: &[E],
    network: &RoadNetwork,
    radius: f64,
    threshold: f64,
) -> BTreeSet<usize> {
    let spawns: Vec<Vec2> = network.spawn_points.iter().map(|s| s.pos).collect();
    let mut used = BTreeSet::new();
    for r in results.iter().filter(|r| r.violated()) {
        let seed = r.seed();
        let ego = seed.route_gene.ego_position;
        for o in &seed.dynamics_gene {
            if o.position.dist(ego) <= radius {
                if let Some(i) = match_to_set(o.position, &spawns, threshold) {
                    used.insert(i);
                }
            }
        }
    }
    used
}

pub fn map_coverage<E: EpisodeView>(results: &[E], network: &RoadNetwork, radius: f64, threshold: f64) -> f64 {
    if network.spawn_points.is_empty() {
        return 0.0;
    }
    map_coverage_set(results, network, radius, threshold).len() as f64 / network.spawn_points.len() as f64
}

/// Waypoints visited by any object in any episode.
pub fn trajectory_coverage_set<E: EpisodeView>(
    results: &[E],
    network: &RoadNetwork,
    threshold: f64,
) -> BTreeSet<usize> {
    let mut used = BTreeSet::new();
    for r in results {
        for p in r.object_positions() {
            if let Some(i) = match_to_set(p, &network.waypoints, threshold) {
                used.insert(i);
            }
        }
    }
    used
}

pub fn trajectory_coverage<E: EpisodeView>(results: &[E], network: &RoadNetwork, threshold: f64) -> f64 {
    if network.waypoints.is_empty() {
        return 0.0;
    }
    trajectory_coverage_set(results, network, threshold).len() as f64 / network.waypoints.len() as f64
}

/// Metric summary of one run of episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub episodes: usize,
    pub violations: usize,
    pub violation_rate: f64,
    pub top10_rounds: Option<usize>,
    pub parameter_distance: Option<f64>,
    pub map_coverage: f64,
    pub trajectory_coverage: f64,
}

pub fn summarize<E: EpisodeView>(results: &[E], network: &RoadNetwork) -> MetricSummary {
    MetricSummary {
        episodes: results.len(),
        violations: results.iter().filter(|r| r.violated()).count(),
        violation_rate: violation_rate(results),
        top10_rounds: top_k_rounds(results, TOP_K),
        parameter_distance: violating_parameter_distance(results, network),
        map_coverage: map_coverage(results, network, MAP_COVERAGE_RADIUS, MATCH_THRESHOLD),
        trajectory_coverage: trajectory_coverage(results, network, MATCH_THRESHOLD),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flag(bool, Chromosome);

    impl EpisodeView for Flag {
        fn violated(&self) -> bool {
            self.0
        }
        fn seed(&self) -> &Chromosome {
            &self.1
        }
        fn object_positions(&self) -> Box<dyn Iterator<Item = Vec2> + '_> {
            Box::new(std::iter::empty())
        }
    }

    fn flags(pattern: &[bool]) -> Vec<Flag> {
        let c = Chromosome {
            route_gene: crate::scenario::RouteGene {
                ego_position: Vec2::ZERO,
                ego_heading: 0.0,
                destination: Vec2::ZERO,
            },
            dynamics_gene: vec![],
        };
        pattern.iter().map(|&b| Flag(b, c.clone())).collect()
    }

    #[test]
    fn rates_and_rounds() {
        assert_eq!(violation_rate(&flags(&[true; 4])), 1.0);
        assert_eq!(violation_rate(&flags(&[false; 4])), 0.0);
        let mut p = [false; 8];
        p[1] = true;
        p[4] = true;
        p[7] = true;
        assert_eq!(violation_rate(&flags(&p)), 0.375);

        assert_eq!(top_k_rounds(&flags(&[true; 10]), 10), Some(10));
        assert_eq!(top_k_rounds(&flags(&[true; 9]), 10), None);
        let alt: Vec<bool> = (0..30).map(|i| i % 2 == 0).collect();
        assert_eq!(top_k_rounds(&flags(&alt), 10), Some(19));
    }

    #[test]
    fn distance_extremes() {
        assert_eq!(parameter_distance_of(&vec![vec![0.3; 5]; 4]), Some(0.0));
        let far = vec![vec![0.0; 7], vec![1.0; 7]];
        assert!((normalized_distance(&far[0], &far[1]) - 1.0).abs() < 1e-15);
        assert!((parameter_distance_of(&far).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(parameter_distance_of(&[]), None);
    }
}
