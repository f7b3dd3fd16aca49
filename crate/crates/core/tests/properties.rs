mod common;

use common::{label_formula, snap, svgd_reference, trace_of};
use proptest::prelude::*;
use scenseed::geom::{wrap_angle, Vec2};
use scenseed::hazard::{closing_speed, near_miss_label, FeatureVector, ReplayBuffer};
use scenseed::map::{lane_overlap, BuiltinMap};
use scenseed::scenario::{absolute_pose, encode, random_chromosome, relative_state, KindMix, ObjectKind, Pose};
use scenseed::svgd::{median_bandwidth, min_separation, project, separation_guard, svgd_step, StepParams};
use std::f64::consts::PI;

fn coord() -> impl Strategy<Value = f64> {
    -500.0..500.0f64
}

fn angle() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

proptest! {
    #[test]
    fn wrap_lands_in_half_open_interval(a in -1e4..1e4f64) {
        let w = wrap_angle(a);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert!(((a - w) / (2.0 * PI) - ((a - w) / (2.0 * PI)).round()).abs() < 1e-9);
    }

    #[test]
    fn relative_state_round_trips(ex in coord(), ey in coord(), eh in angle(), ox in coord(), oy in coord(), oh in angle()) {
        let ego = Pose::new(Vec2::new(ex, ey), eh);
        let obj = Pose::new(Vec2::new(ox, oy), oh);
        let p = relative_state(ego, obj);
        prop_assert!((-PI..PI).contains(&p.delta_psi));
        let back = absolute_pose(ego, p);
        prop_assert!(back.position.dist(obj.position) < 1e-9);
        prop_assert!(wrap_angle(back.heading - oh).abs() < 1e-9);
        // planar distance is frame independent
        let d = (p.delta_s.powi(2) + p.delta_d.powi(2)).sqrt();
        prop_assert!((d - ego.position.dist(obj.position)).abs() < 1e-9);
    }

    #[test]
    fn lane_overlap_is_bounded(x in -50.0..350.0f64, y in -20.0..20.0f64) {
        let net = BuiltinMap::Straight.build();
        for lane in &net.lanes {
            let l = lane_overlap(Vec2::new(x, y), lane);
            prop_assert!((0.0..=1.0).contains(&l));
        }
    }

    #[test]
    fn encoding_is_in_unit_cube(s in any::<u64>(), n in 0usize..25) {
        let net = BuiltinMap::Grid4.build();
        let c = random_chromosome(&net, n, &KindMix::default(), &mut common::rng(s)).unwrap();
        let v = encode(&c, &net);
        prop_assert_eq!(v.len(), 3 + 4 * n);
        prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn buffer_keeps_the_newest(cap in 1usize..40, pushes in 0usize..120) {
        let mut b = ReplayBuffer::new(cap);
        for k in 0..pushes {
            b.push(FeatureVector([k as f64, 0.0, 0.0, 0.0, 0.0]), 0.5);
        }
        prop_assert_eq!(b.len(), pushes.min(cap));
        let kept: Vec<usize> = b.iter().map(|(z, _)| z.0[0] as usize).collect();
        let expected: Vec<usize> = (pushes.saturating_sub(cap)..pushes).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn projection_is_idempotent_and_inside(x in prop::array::uniform3(-200.0..200.0f64), b in prop::array::uniform3(0.1..100.0f64)) {
        let p = project(&x, &b);
        prop_assert!((0..3).all(|d| p[d].abs() <= b[d]));
        prop_assert_eq!(project(&p, &b), p);
        for d in 0..3 {
            if x[d].abs() <= b[d] {
                prop_assert_eq!(p[d], x[d]);
            }
        }
    }

    #[test]
    fn guard_reaches_separation_with_room(
        pts in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64, -PI..PI).prop_map(|(a, b, c)| [a, b, c]), 2..7),
        s in any::<u64>(),
    ) {
        let mut ps = pts.clone();
        let bounds = [50.0, 50.0, PI];
        let residual = separation_guard(&mut ps, 3.5, &bounds, 100, &mut common::rng(s));
        prop_assert_eq!(residual, 0);
        prop_assert!(min_separation(&ps) >= 3.5 - 1e-9);
        for (a, b) in ps.iter().zip(&pts) {
            prop_assert_eq!(a[2], b[2]);
            prop_assert!((0..2).all(|d| a[d].abs() <= bounds[d]));
        }
    }

    #[test]
    fn svgd_step_matches_loops(
        xs in prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), 1..8),
        seed in any::<u64>(),
        tau in 0.1..5.0f64,
        beta in 0.01..1.0f64,
    ) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let gs: Vec<[f64; 3]> = xs.iter().map(|_| [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)]).collect();
        let metric = [1.0, 0.5, 2.0];
        let bounds = [1.0; 3];
        let h = median_bandwidth(&xs, &metric);
        prop_assert!(h > 0.0 && h.is_finite());
        let p = StepParams { temperature: tau, repulsion: beta, step: 0.1, metric, bounds };
        let got = svgd_step(&xs, &gs, &p, h);
        let want = svgd_reference(&xs, &gs, tau, beta, 0.1, metric, bounds, h);
        for (a, b) in got.iter().zip(&want) {
            for d in 0..3 {
                prop_assert!((a[d] - b[d]).abs() <= 1e-12, "{} vs {}", a[d], b[d]);
            }
        }
    }

    #[test]
    fn label_agrees_with_formula_and_stays_in_range(
        path in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64, -4.0..4.0f64, 0.0..15.0f64), 1..30),
        ego_v in 0.0..15.0f64,
        w in 0usize..4,
    ) {
        let frames: Vec<_> = path
            .iter()
            .enumerate()
            .map(|(t, &(x, y, h, v))| (snap(t as f64 * ego_v * 0.1, 0.0, 0.0, ego_v), vec![snap(x, y, h, v)]))
            .collect();
        let tr = trace_of(0.1, vec![ObjectKind::Vehicle], frames);
        let y = near_miss_label(&tr, 0, w, false);
        prop_assert!((0.0..=1.0).contains(&y));

        let dist = |t: usize| tr.frames[t].ego.position.dist(tr.frames[t].objects[0].position);
        let t_star = (0..tr.len()).fold(0, |b, t| if dist(t) < dist(b) { t } else { b });
        let win: Vec<usize> = (t_star.saturating_sub(w)..=(t_star + w).min(tr.len() - 1)).collect();
        let d: Vec<f64> = win.iter().map(|&t| dist(t)).collect();
        let p: Vec<f64> = win.iter().map(|&t| tr.frames[t].objects[0].heading - tr.frames[t].ego.heading).collect();
        let c: Vec<f64> = win.iter().map(|&t| closing_speed(&tr.frames[t].ego, &tr.frames[t].objects[0])).collect();
        let want = label_formula(&d, &p, &c, tr.max_speed());
        prop_assert!((y - want).abs() < 1e-12, "{y} vs {want}");
    }

    #[test]
    fn label_never_drops_as_the_object_closes_in(r0 in 2.0..40.0f64, shrink in 0.05..0.95f64, h in -4.0..4.0f64) {
        let one = |r: f64| {
            let tr = trace_of(0.1, vec![ObjectKind::Vehicle], vec![(snap(0.0, 0.0, 0.0, 0.0), vec![snap(r, 0.0, h, 0.0)])]);
            near_miss_label(&tr, 0, 2, false)
        };
        prop_assert!(one(r0 * shrink) >= one(r0));
    }
}
