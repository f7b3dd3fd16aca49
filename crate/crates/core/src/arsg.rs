//! Adaptive random seed generation: pick the candidate farthest from
//! everything already executed.

use crate::error::{Error, Result};
use crate::map::RoadNetwork;
use crate::scenario::{encode, random_chromosome, Chromosome, KindMix};
use rand::Rng;

/// Default candidate-set size.
pub const DEFAULT_CANDIDATES: usize = 10;

/// Memory of executed seeds, stored as normalized vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPool {
    executed: Vec<Vec<f64>>,
    candidate_count: usize,
}

impl SeedPool {
    pub fn new(candidate_count: usize) -> Result<Self> {
        if candidate_count == 0 {
            return Err(Error::Config("candidate count must be >= 1".into()));
        }
        Ok(Self {
            executed: Vec::new(),
            candidate_count,
        })
    }

    pub fn candidate_count(&self) -> usize {
        self.candidate_count
    }

    pub fn executed(&self) -> &[Vec<f64>] {
        &self.executed
    }

    pub fn len(&self) -> usize {
        self.executed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.executed.is_empty()
    }

    /// Records the seed that was actually run.
    pub fn record_executed(&mut self, seed: &Chromosome, network: &RoadNetwork) {
        self.record_vector(encode(seed, network));
    }

    pub fn record_vector(&mut self, v: Vec<f64>) {
        if let Some(first) = self.executed.first() {
            assert_eq!(first.len(), v.len(), "executed seeds must share a dimension");
        }
        self.executed.push(v);
    }
}

pub fn generate_candidates<R: Rng + ?Sized>(
    network: &RoadNetwork,
    object_count: usize,
    k: usize,
    mix: &KindMix,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    if k == 0 {
        return Err(Error::Config("candidate count must be >= 1".into()));
    }
    (0..k)
        .map(|_| random_chromosome(network, object_count, mix, rng))
        .collect()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Index of the vector maximizing its minimum distance to `executed`. With no
/// executed seeds, every candidate is equally far, so one is drawn uniformly.
pub fn select_index<R: Rng + ?Sized>(candidates: &[Vec<f64>], executed: &[Vec<f64>], rng: &mut R) -> usize {
    assert!(!candidates.is_empty(), "select_next needs at least one candidate");
    if executed.is_empty() {
        return rng.gen_range(0..candidates.len());
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, c) in candidates.iter().enumerate() {
        let min_d = executed.iter().map(|t| euclidean(c, t)).fold(f64::INFINITY, f64::min);
        if min_d > best.0 {
            best = (min_d, j);
        }
    }
    best.1
}

/// Picks the next seed to run from `candidates`.
pub fn select_next<R: Rng + ?Sized>(
    candidates: &[Chromosome],
    pool: &SeedPool,
    network: &RoadNetwork,
    rng: &mut R,
) -> (Chromosome, usize) {
    let encoded: Vec<Vec<f64>> = candidates.iter().map(|c| encode(c, network)).collect();
    let idx = select_index(&encoded, &pool.executed, rng);
    (candidates[idx].clone(), idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::BuiltinMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn picks_farthest() {
        let executed = vec![vec![0.0, 0.0]];
        let cands = vec![vec![0.1, 0.0], vec![0.0, 0.7], vec![0.3, 0.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_index(&cands, &executed, &mut rng), 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let executed = vec![vec![0.0]];
        let cands = vec![vec![0.5], vec![-0.5], vec![0.5]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_index(&cands, &executed, &mut rng), 0);
    }

    #[test]
    fn empty_pool_uses_rng() {
        let cands = vec![vec![0.0], vec![1.0], vec![2.0]];
        let expected = ChaCha8Rng::seed_from_u64(5).gen_range(0..3);
        let got = select_index(&cands, &[], &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(got, expected);
    }

    #[test]
    fn pool_grows_with_encoding() {
        let net = BuiltinMap::Straight.build();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pool = SeedPool::new(10).unwrap();
        let cands = generate_candidates(&net, 4, 3, &KindMix::default(), &mut rng).unwrap();
        for (n, c) in cands.iter().enumerate() {
            pool.record_executed(c, &net);
            assert_eq!(pool.len(), n + 1);
            assert_eq!(pool.executed()[n], encode(c, &net));
        }
    }

    #[test]
    fn zero_candidates_rejected() {
        assert!(SeedPool::new(0).is_err());
    }
}
