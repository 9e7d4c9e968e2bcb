mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use promind_core::bspline::{basis, BSplineCurve, KnotVector};
use promind_core::optimizer::{check_bundle, lower_bounds, KinematicLimits};
use promind_core::pacing::{apply_step, rr_step, PacingConfig, PacingState};
use promind_core::planner::{
    solve_trajectory, waypoint_residual, BoundaryConditions, IntervalVector, WaypointList,
};
use promind_core::pose::Pose6;
use promind_core::safety::{scale_zones, SafetyThresholds};

fn limits() -> KinematicLimits {
    KinematicLimits {
        v_max: Pose6([0.5, 0.5, 0.5, 1.0, 1.0, 1.0]),
        a_max: Pose6([1.5, 1.5, 1.5, 3.0, 3.0, 3.0]),
        j_max: Pose6([10.0, 10.0, 10.0, 20.0, 20.0, 20.0]),
    }
}

fn knots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..2.0f64, 2..10).prop_map(|gaps| {
        let mut k = vec![0.0; 6];
        let mut acc = 0.0;
        for g in &gaps[..gaps.len() - 1] {
            acc += g;
            k.push(acc);
        }
        acc += gaps[gaps.len() - 1];
        k.extend([acc; 6]);
        k
    })
}

fn waypoints() -> impl Strategy<Value = Vec<Pose6>> {
    prop::collection::vec(
        (0.3..0.7f64, -0.4..0.4f64, 0.1..0.4f64, -0.3..0.3f64, -0.3..0.3f64, -1.0..1.0f64),
        2..8,
    )
    .prop_map(|v| v.into_iter().map(|(x, y, z, r, p, yaw)| Pose6::new(x, y, z, PI + r, p, yaw)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_matches_recursion(k in knots(), u in 0.0..1.0f64) {
        let kv = KnotVector::new(k.clone(), 5).unwrap();
        let t = u * kv.end();
        let mut sum = 0.0;
        for i in 0..kv.basis_count() {
            let b = basis(&kv, i, t).unwrap();
            prop_assert!(b >= -1e-15);
            prop_assert!((b - common::basis(&k, i, 5, t)).abs() < 1e-12);
            sum += b;
        }
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_curve_matches_oracle(k in knots(), seed in any::<u64>(), u in 0.0..1.0f64) {
        let kv = KnotVector::new(k.clone(), 5).unwrap();
        let n = kv.basis_count();
        let coeffs: Vec<f64> = (0..n).map(|i| ((seed.wrapping_mul(i as u64 + 7) % 1000) as f64 / 500.0) - 1.0).collect();
        let curve = BSplineCurve::new(kv.clone(), coeffs.clone()).unwrap();
        let t = u * kv.end();
        for d in 1..=3 {
            let got = curve.derivative(d).unwrap().eval(t).unwrap();
            let want = common::eval_scalar(&k, 5, &coeffs, t, d);
            prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "d={} {} vs {}", d, got, want);
        }
    }

    #[test]
    fn trajectory_hits_waypoints(pts in waypoints(), stretch in prop::collection::vec(1.0..3.0f64, 9)) {
        let wps = WaypointList::new(pts).unwrap();
        let lb = lower_bounds(&wps, &limits(), 0.05);
        let h: Vec<f64> = lb.iter().zip(&stretch).map(|(l, s)| l * s).collect();
        let b = solve_trajectory(&wps, &IntervalVector::new(h).unwrap(), &BoundaryConditions::zero()).unwrap();
        prop_assert!(waypoint_residual(&b, &wps).unwrap() < 1e-9);
        for d in 1..=3 {
            prop_assert!(b.eval(0.0, d).unwrap().max_abs() < 1e-9);
            prop_assert!(b.eval(b.duration(), d).unwrap().max_abs() < 1e-9);
        }
    }

    #[test]
    fn scaled_timing_divides_derivatives(pts in waypoints(), s in 1.0..4.0f64) {
        let wps = WaypointList::new(pts).unwrap();
        let h = IntervalVector::new(lower_bounds(&wps, &limits(), 0.05)).unwrap();
        let bc = BoundaryConditions::zero();
        let a = solve_trajectory(&wps, &h, &bc).unwrap();
        let b = solve_trajectory(&wps, &h.scaled(s).unwrap(), &bc).unwrap();
        let ra = check_bundle(&a, &limits());
        let rb = check_bundle(&b, &limits());
        prop_assert!(rb.max_relative_violation <= ra.max_relative_violation + 1e-12);
        let t = 0.37 * a.duration();
        let va = a.eval(t, 1).unwrap();
        let vb = b.eval(t * s, 1).unwrap();
        prop_assert!((va * (1.0 / s) - vb).max_abs() < 1e-9);
    }

    #[test]
    fn zones_are_ordered(l in -0.5..1.5f64, z in -0.5..1.5f64) {
        let th = SafetyThresholds::default();
        let zones = scale_zones(l, z, &th);
        prop_assert!(zones.d_physical >= th.d_collision_free - 1e-15);
        prop_assert!(zones.d_physical <= th.d_conservative + 1e-15);
        prop_assert!(zones.d_cognitive >= zones.d_physical);
        prop_assert!(zones.d_cognitive <= th.d_social + 1e-15);
    }

    #[test]
    fn relaxing_is_at_least_as_fast_as_stressing(x in 0.021..0.2f64) {
        let cfg = PacingConfig::default();
        let r = cfg.reference;
        let relax = rr_step(r.stress + x, r.stress, r.rest, &cfg, 0);
        let stress = rr_step(r.rest - x, r.rest, r.rest, &cfg, 0);
        prop_assert!(relax.delta > 0 && stress.delta < 0);
        prop_assert!(relax.delta.abs() >= stress.delta.abs());
    }

    #[test]
    fn index_stays_on_ladder(steps in prop::collection::vec(-6i32..6, 1..50)) {
        let cfg = PacingConfig::default();
        let mut st = PacingState::new(&cfg);
        for d in steps {
            let i = apply_step(&mut st, d);
            prop_assert!((1..=cfg.n).contains(&i));
        }
    }
}
