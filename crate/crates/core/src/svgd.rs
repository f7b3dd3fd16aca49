//! SVGD seed refinement: move the most hazardous objects of a seed toward
//! high-hazard relative geometry while kernel repulsion keeps them spread out.

use crate::error::{Error, Result};
use crate::hazard::{features, grad_x, particle_hazard, HazardModel};
use crate::map::RoadNetwork;
use crate::scenario::{apply_particles, relative_state, Chromosome, Particle};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point3 = [f64; 3];

const BANDWIDTH_FLOOR: f64 = 1e-6;
const SEPARATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinerConfig {
    /// Number of particles; also the number of top-scoring objects refined.
    pub particles: usize,
    pub temperature: f64,
    pub repulsion: f64,
    /// Step size in Ω-normalized coordinates.
    pub step: f64,
    pub iterations: usize,
    /// Minimum planar separation; the ego lane width when unset.
    pub r_min: Option<f64>,
    /// Sweep bound for the separation guard. Particles crowded into a box
    /// corner need a few dozen sweeps to settle exactly.
    pub guard_passes: usize,
}

impl Default for RefinerConfig {
    fn default() -> Self {
        Self {
            particles: 5,
            temperature: 1.0,
            repulsion: 1.0,
            step: 0.05,
            iterations: 50,
            r_min: None,
            guard_passes: 100,
        }
    }
}

impl RefinerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.particles == 0 {
            return bad("svgd particles must be >= 1");
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return bad("svgd temperature must be > 0");
        }
        if !(self.repulsion > 0.0 && self.repulsion <= 1.0) {
            return bad("svgd repulsion must lie in (0, 1]");
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return bad("svgd step must be > 0");
        }
        if self.r_min.is_some_and(|r| r.is_nan() || r <= 0.0) {
            return bad("svgd r_min must be > 0");
        }
        Ok(())
    }
}

/// Parameters of a single SVGD update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub temperature: f64,
    pub repulsion: f64,
    pub step: f64,
    /// Diagonal of the kernel metric Λ.
    pub metric: Point3,
    /// Half-widths of the projection box.
    pub bounds: Point3,
}

fn sq_metric_dist(a: &Point3, b: &Point3, metric: &Point3) -> f64 {
    (0..3).map(|k| metric[k] * (a[k] - b[k]).powi(2)).sum()
}

/// Anisotropic RBF kernel `exp(-‖x - x'‖²_Λ / h)` and its gradient in `x`.
pub fn kernel(x: &Point3, x2: &Point3, metric: &Point3, h: f64) -> (f64, Point3) {
    let k = (-sq_metric_dist(x, x2, metric) / h).exp();
    let g = std::array::from_fn(|d| -(2.0 / h) * metric[d] * (x[d] - x2[d]) * k);
    (k, g)
}

/// Median of pairwise squared Λ-distances scaled by `1 / ln(N + 1)`.
pub fn median_bandwidth(particles: &[Point3], metric: &Point3) -> f64 {
    let n = particles.len();
    if n < 2 {
        return 1.0;
    }
    let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_metric_dist(&particles[i], &particles[j], metric));
        }
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    (med / ((n + 1) as f64).ln()).max(BANDWIDTH_FLOOR)
}

/// Component-wise clamp into the box `[-bounds, bounds]`.
pub fn project(x: &Point3, bounds: &Point3) -> Point3 {
    std::array::from_fn(|d| x[d].clamp(-bounds[d], bounds[d]))
}

/// One synchronous SVGD update with hazard gradients `grads`.
pub fn svgd_step(particles: &[Point3], grads: &[Point3], p: &StepParams, h: f64) -> Vec<Point3> {
    assert_eq!(particles.len(), grads.len());
    let n = particles.len() as f64;
    particles
        .iter()
        .map(|xi| {
            let mut phi = [0.0; 3];
            for (xj, gj) in particles.iter().zip(grads) {
                let (k, dk) = kernel(xj, xi, &p.metric, h);
                for d in 0..3 {
                    phi[d] += k * p.temperature * gj[d] + p.repulsion * dk[d];
                }
            }
            let moved: Point3 = std::array::from_fn(|d| xi[d] + p.step * phi[d] / n);
            project(&moved, &p.bounds)
        })
        .collect()
}

fn planar_dist(a: &Point3, b: &Point3) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Smallest planar `(Δs, Δd)` distance over all pairs; infinite below two particles.
pub fn min_separation(particles: &[Point3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..particles.len() {
        for j in i + 1..particles.len() {
            best = best.min(planar_dist(&particles[i], &particles[j]));
        }
    }
    best
}

/// Pushes pairs closer than `r_min` in `(Δs, Δd)` apart along their line of
/// centers, then re-clips to the box. Runs at most `passes` sweeps and returns
/// the number of pairs still violating.
pub fn separation_guard<R: Rng + ?Sized>(
    particles: &mut [Point3],
    r_min: f64,
    bounds: &Point3,
    passes: usize,
    rng: &mut R,
) -> usize {
    for _ in 0..passes {
        let mut moved = false;
        for i in 0..particles.len() {
            for j in i + 1..particles.len() {
                let d = planar_dist(&particles[i], &particles[j]);
                if d >= r_min - SEPARATION_SLACK {
                    continue;
                }
                let (ux, uy) = if d > 0.0 {
                    (
                        (particles[j][0] - particles[i][0]) / d,
                        (particles[j][1] - particles[i][1]) / d,
                    )
                } else {
                    let a = rng.gen_range(-PI..PI);
                    (a.cos(), a.sin())
                };
                let push = (r_min - d) / 2.0;
                particles[i][0] -= ux * push;
                particles[i][1] -= uy * push;
                particles[j][0] += ux * push;
                particles[j][1] += uy * push;
                particles[i] = project(&particles[i], bounds);
                particles[j] = project(&particles[j], bounds);
                // A clipped particle loses its share of the push; hand the
                // remainder to the other one, then back if that clips too.
                for (mover, sign) in [(j, 1.0), (i, -1.0)] {
                    let d = planar_dist(&particles[i], &particles[j]);
                    if d >= r_min || d == 0.0 {
                        break;
                    }
                    let ux = (particles[j][0] - particles[i][0]) / d;
                    let uy = (particles[j][1] - particles[i][1]) / d;
                    particles[mover][0] += sign * ux * (r_min - d);
                    particles[mover][1] += sign * uy * (r_min - d);
                    particles[mover] = project(&particles[mover], bounds);
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let mut residual = 0;
    for i in 0..particles.len() {
        for j in i + 1..particles.len() {
            if planar_dist(&particles[i], &particles[j]) < r_min - SEPARATION_SLACK {
                residual += 1;
            }
        }
    }
    residual
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_hazard: f64,
    pub min_separation: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RefineDiagnostics {
    /// Objects chosen as particles, most hazardous first.
    pub selected: Vec<usize>,
    pub initial_mean_hazard: f64,
    pub iterations: Vec<IterationRecord>,
    /// Final particle states in meters and radians.
    pub particles: Vec<Particle>,
    pub r_min: f64,
    pub residual_violations: usize,
}

/// Refines `seed`: the `K` objects the model rates most hazardous become
/// particles, which are transported by SVGD and placed back into the scene.
///
/// The update runs in Ω-normalized coordinates `u = x / (D_s, D_d, Ψ_max)`,
/// where Λ = diag(1/D_s², 1/D_d², 1/Ψ_max²) becomes the identity and Ω the unit box.
pub fn refine<R: Rng + ?Sized>(
    seed: &Chromosome,
    model: &HazardModel,
    network: &RoadNetwork,
    config: &RefinerConfig,
    rng: &mut R,
) -> Result<(Chromosome, RefineDiagnostics)> {
    config.validate()?;
    let ego = seed.ego_pose();
    let lane = &network.lanes[network.lane_at(ego.position, ego.heading)];
    let omega = network.omega;
    let scale = omega.scales();
    let r_min = config.r_min.unwrap_or(lane.width);

    let mut scored: Vec<(usize, f64)> = seed
        .dynamics_gene
        .iter()
        .enumerate()
        .map(|(i, o)| (i, model.forward(&features(ego, o.pose(), lane, &omega).0)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let k = config.particles.min(scored.len());
    let selected: Vec<usize> = scored[..k].iter().map(|s| s.0).collect();

    let mut xs: Vec<Point3> = selected
        .iter()
        .map(|&i| relative_state(ego, seed.dynamics_gene[i].pose()).to_array())
        .collect();
    let mean_hazard = |xs: &[Point3]| {
        if xs.is_empty() {
            return 0.0;
        }
        xs.iter()
            .map(|x| particle_hazard(model, ego, Particle::from_array(*x), lane, &omega))
            .sum::<f64>()
            / xs.len() as f64
    };
    let mut diag = RefineDiagnostics {
        selected: selected.clone(),
        initial_mean_hazard: mean_hazard(&xs),
        r_min,
        ..Default::default()
    };

    let params = StepParams {
        temperature: config.temperature,
        repulsion: config.repulsion,
        step: config.step,
        metric: [1.0; 3],
        bounds: [1.0; 3],
    };
    for it in 0..config.iterations {
        let us: Vec<Point3> = xs.iter().map(|x| std::array::from_fn(|d| x[d] / scale[d])).collect();
        let grads: Vec<Point3> = xs
            .iter()
            .map(|x| {
                let g = grad_x(model, ego, Particle::from_array(*x), lane, &omega);
                std::array::from_fn(|d| g[d] * scale[d])
            })
            .collect();
        let h = median_bandwidth(&us, &params.metric);
        let next = svgd_step(&us, &grads, &params, h);
        xs = next.iter().map(|u| std::array::from_fn(|d| u[d] * scale[d])).collect();
        diag.residual_violations = separation_guard(&mut xs, r_min, &scale, config.guard_passes, rng);
        diag.iterations.push(IterationRecord {
            iteration: it,
            mean_hazard: mean_hazard(&xs),
            min_separation: min_separation(&xs),
            bandwidth: h,
        });
    }

    diag.particles = xs.iter().map(|x| Particle::from_array(*x)).collect();
    let assignments: Vec<(usize, Particle)> = selected.iter().copied().zip(diag.particles.iter().copied()).collect();
    Ok((apply_particles(seed, &assignments, network), diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_at_zero_displacement() {
        let (k, g) = kernel(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[1.0; 3], 0.7);
        assert_eq!(k, 1.0);
        assert_eq!(g, [0.0; 3]);
        let (k, _) = kernel(&[1.0, 0.0, 0.0], &[0.0; 3], &[1.0; 3], 1.0);
        assert_eq!(k, (-1.0f64).exp());
    }

    #[test]
    fn bandwidth_cases() {
        let h = median_bandwidth(&[[0.0; 3], [2.0, 0.0, 0.0]], &[1.0; 3]);
        assert!((h - 4.0 / 3f64.ln()).abs() < 1e-15);
        assert_eq!(median_bandwidth(&[[1.0; 3]; 4], &[1.0; 3]), 1e-6);
        assert_eq!(median_bandwidth(&[[1.0; 3]], &[1.0; 3]), 1.0);
    }

    #[test]
    fn projection_clamps_and_is_idempotent() {
        let b = [10.0, 5.0, PI];
        assert_eq!(project(&[1.0, 2.0, 0.5], &b), [1.0, 2.0, 0.5]);
        assert_eq!(project(&[15.0, 2.0, 0.5], &b)[0], 10.0);
        let once = project(&[-30.0, 7.0, 4.0], &b);
        assert_eq!(project(&once, &b), once);
    }

    #[test]
    fn guard_separates_close_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = vec![[0.0, 0.0, 0.3], [1.0, 0.0, -0.2]];
        let residual = separation_guard(&mut ps, 3.5, &[50.0, 50.0, PI], 10, &mut rng);
        assert_eq!(residual, 0);
        assert!((planar_dist(&ps[0], &ps[1]) - 3.5).abs() < 1e-12);
        assert!(((ps[0][0] + ps[1][0]) / 2.0 - 0.5).abs() < 1e-12);
        assert_eq!((ps[0][2], ps[1][2]), (0.3, -0.2));
    }

    #[test]
    fn guard_splits_coincident_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ps = vec![[2.0, 1.0, 0.0], [2.0, 1.0, 0.0]];
        separation_guard(&mut ps, 3.5, &[50.0, 50.0, PI], 10, &mut rng);
        assert!((planar_dist(&ps[0], &ps[1]) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn guard_completes_push_against_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = vec![[50.0, 10.0, 0.0], [49.0, 10.0, 0.0]];
        assert_eq!(separation_guard(&mut ps, 3.5, &[50.0, 50.0, PI], 10, &mut rng), 0);
        assert_eq!(ps[0][0], 50.0);
        assert!((planar_dist(&ps[0], &ps[1]) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn guard_leaves_spread_particles() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let orig = vec![[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [0.0, 5.0, 1.0]];
        let mut ps = orig.clone();
        separation_guard(&mut ps, 3.5, &[50.0, 50.0, PI], 10, &mut rng);
        assert_eq!(ps, orig);
    }

    #[test]
    fn invalid_config_rejected() {
        let c = RefinerConfig {
            repulsion: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RefinerConfig {
            temperature: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RefinerConfig {
            step: f64::NAN,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
