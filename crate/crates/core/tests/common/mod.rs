//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenseed::geom::Vec2;
use scenseed::scenario::ObjectKind;
use scenseed::trace::{AgentSnapshot, EpisodeTrace, Frame};
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// SVGD update written as plain nested loops over particles, coordinates and neighbors.
#[allow(clippy::too_many_arguments)]
pub fn svgd_reference(
    xs: &[[f64; 3]],
    gs: &[[f64; 3]],
    tau: f64,
    beta: f64,
    eps: f64,
    metric: [f64; 3],
    bounds: [f64; 3],
    h: f64,
) -> Vec<[f64; 3]> {
    let n = xs.len();
    let mut out = vec![[0.0; 3]; n];
    for i in 0..n {
        for d in 0..3 {
            let mut acc = 0.0;
            for j in 0..n {
                let mut sq = 0.0;
                for e in 0..3 {
                    sq += metric[e] * (xs[j][e] - xs[i][e]) * (xs[j][e] - xs[i][e]);
                }
                let k = (-sq / h).exp();
                let grad_k = -2.0 / h * metric[d] * (xs[j][d] - xs[i][d]) * k;
                acc += k * tau * gs[j][d] + beta * grad_k;
            }
            let v = xs[i][d] + eps * acc / n as f64;
            out[i][d] = v.max(-bounds[d]).min(bounds[d]);
        }
    }
    out
}

/// Near-miss label evaluated directly from per-frame distances, relative
/// headings and closing speeds over the chosen window.
pub fn label_formula(dists: &[f64], dpsis: &[f64], closings: &[f64], v_max: f64) -> f64 {
    let eps = 1e-6;
    let cl = |s: f64| s.max(eps).min(1.0 - eps);
    let n = dists.len() as f64;
    let d_bar: f64 = dists.iter().sum::<f64>() / n;
    let v_bar: f64 = closings.iter().sum::<f64>() / n;
    let s_dist = cl((-d_bar).exp());
    let s_close = cl(if v_max == 0.0 {
        0.0
    } else {
        (v_bar / v_max).clamp(0.0, 1.0)
    });
    let mut log_s = 0.0;
    for &p in dpsis {
        let s_head = cl((1.0 - p.cos()) / 2.0);
        log_s += (1.0 - s_dist).ln() + (1.0 - s_head).ln() + (1.0 - s_close).ln();
    }
    1.0 - log_s.exp()
}

pub fn snap(x: f64, y: f64, heading: f64, speed: f64) -> AgentSnapshot {
    AgentSnapshot {
        position: Vec2::new(x, y),
        heading,
        speed,
    }
}

/// Trace with one ego and the given object snapshots per frame.
pub fn trace_of(dt: f64, kinds: Vec<ObjectKind>, frames: Vec<(AgentSnapshot, Vec<AgentSnapshot>)>) -> EpisodeTrace {
    let mut t = EpisodeTrace::new(dt, kinds);
    for (ego, objects) in frames {
        t.push(Frame { ego, objects });
    }
    t
}

/// Index maximizing the minimum distance to `executed`, lowest index on ties.
pub fn arsg_brute(candidates: &[Vec<f64>], executed: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let mut score = f64::INFINITY;
        for e in executed {
            let mut s = 0.0;
            for k in 0..c.len() {
                s += (c[k] - e[k]) * (c[k] - e[k]);
            }
            score = score.min(s.sqrt());
        }
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

pub fn double_mean_distance(vs: &[Vec<f64>]) -> f64 {
    let n = vs.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut inner = 0.0;
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..vs[i].len() {
                s += (vs[i][k] - vs[j][k]).powi(2);
            }
            inner += (s / vs[i].len() as f64).sqrt();
        }
        total += inner / n as f64;
    }
    total / n as f64
}

/// Nearest index within `threshold` by linear scan, lowest index on ties.
pub fn nearest_within(p: Vec2, pts: &[Vec2], threshold: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, q) in pts.iter().enumerate() {
        let d = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
        match best {
            Some((_, bd)) if bd <= d => {}
            _ => best = Some((i, d)),
        }
    }
    best.filter(|b| b.1 <= threshold).map(|b| b.0)
}

pub fn coverage_oracle(positions: impl Iterator<Item = Vec2>, pts: &[Vec2], threshold: f64) -> BTreeSet<usize> {
    positions.filter_map(|p| nearest_within(p, pts, threshold)).collect()
}

pub fn random_unit_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}
