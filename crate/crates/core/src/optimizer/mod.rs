//! Bi-objective time/jerk optimization over the interval vector.
//!
//! The decision variable is the interval vector `h`; `f_time = D Σ h` and
//! `f_jerk` is the squared-jerk integral summed over the six pose
//! coordinates. Kinematic limits are enforced conservatively on the
//! derivative control points.

mod asf;
mod nsga2;

pub use asf::{asf_downsample, AsfConfig, SolutionLadder};
pub use nsga2::{nsga2, Evaluation, Individual, Nsga2Config};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bspline::BSplineBundle;
use crate::error::{construction, Error, Result};
use crate::planner::{solve_trajectory, BoundaryConditions, IntervalVector, WaypointList};
use crate::pose::{Pose6, POSE_DIM};

/// Pose dimensionality used by `f_time`.
pub const D: f64 = POSE_DIM as f64;

/// Per-dimension absolute bounds on velocity, acceleration and jerk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub v_max: Pose6,
    pub a_max: Pose6,
    pub j_max: Pose6,
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = |p: &Pose6| p.0.iter().all(|v| *v > 0.0 && v.is_finite());
        if ok(&self.v_max) && ok(&self.a_max) && ok(&self.j_max) {
            Ok(())
        } else {
            Err(construction("kinematic limits must be strictly positive"))
        }
    }

    pub fn for_order(&self, order: usize) -> &Pose6 {
        match order {
            1 => &self.v_max,
            2 => &self.a_max,
            _ => &self.j_max,
        }
    }
}

/// A non-dominated interval vector and its objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub h: IntervalVector,
    pub f_time: f64,
    pub f_jerk: f64,
}

/// Optimizer settings; defaults match a desk-scale run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub seed: u64,
    /// Upper bound for every interval (s).
    pub h_max: f64,
    /// Floor for lower bounds that would otherwise be zero (s).
    pub eps_h: f64,
    pub crossover_prob: f64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    pub ladder_size: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            pop_size: 90,
            generations: 200,
            seed: 0,
            h_max: 10.0,
            eps_h: 0.05,
            crossover_prob: 0.9,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            ladder_size: 15,
        }
    }
}

impl OptimizerConfig {
    pub fn nsga2(&self) -> Nsga2Config {
        Nsga2Config {
            pop_size: self.pop_size,
            generations: self.generations,
            seed: self.seed,
            crossover_prob: self.crossover_prob,
            eta_crossover: self.eta_crossover,
            eta_mutation: self.eta_mutation,
            mutation_prob: None,
        }
    }
}

pub fn f_time(h: &IntervalVector) -> f64 {
    D * h.total()
}

// 5-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Integral over `[0, t_f]` of the squared jerk, summed over dimensions.
/// Jerk is piecewise quadratic, so Gauss-Legendre per knot span is exact.
pub fn jerk_integral(bundle: &BSplineBundle) -> f64 {
    let jerk = bundle.curve(3).expect("bundles carry a jerk curve");
    let knots = jerk.knots();
    let mut total = 0.0;
    for span in knots.span_indices() {
        let a = knots.values()[span];
        let b = knots.values()[span + 1];
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let j = jerk.eval_in_span(span, mid + half * x);
            let sq: f64 = j.0.iter().map(|v| v * v).sum();
            total += w * half * sq;
        }
    }
    total
}

pub fn f_jerk(h: &IntervalVector, wps: &WaypointList, bc: &BoundaryConditions) -> Result<f64> {
    Ok(jerk_integral(&solve_trajectory(wps, h, bc)?))
}

/// Lower bound for every interval. Virtual points are taken to coincide with
/// their neighbouring waypoint, so the two boundary intervals get `eps_h` and
/// the others the straight-line time of the dominating axis.
pub fn lower_bounds(wps: &WaypointList, limits: &KinematicLimits, eps_h: f64) -> Vec<f64> {
    let pts = wps.points();
    let w = pts.len();
    let repeat = wps.repeat_interval().unwrap_or(0.0);
    let mut lb = vec![eps_h; w + 1];
    for g in 1..w {
        let a = pts[g - 1];
        let b = pts[g];
        let mut t = (0..POSE_DIM)
            .map(|i| (b[i] - a[i]).abs() / limits.v_max[i])
            .fold(0.0_f64, f64::max);
        if t == 0.0 {
            t = repeat;
        }
        lb[g] = t.max(eps_h);
    }
    lb
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Velocity,
    Acceleration,
    Jerk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub dim: usize,
    /// Index of the derivative control point (0-based).
    pub index: usize,
    pub value: f64,
    pub limit: f64,
}

/// Outcome of the control-point constraint check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `max |c| / limit - 1` over all checked points; `<= 0` when feasible.
    pub max_relative_violation: f64,
    /// Sum of positive relative excesses, used for constrained domination.
    pub total_violation: f64,
    /// The point with the largest relative excess.
    pub worst: Violation,
}

/// Checks velocity, acceleration and jerk control points against the limits.
/// Sufficient for the sampled curve to respect them (convex hull).
pub fn check_bundle(bundle: &BSplineBundle, limits: &KinematicLimits) -> FeasibilityReport {
    let mut worst: Option<(f64, Violation)> = None;
    let mut total = 0.0;
    for (order, kind) in [
        (1, ConstraintKind::Velocity),
        (2, ConstraintKind::Acceleration),
        (3, ConstraintKind::Jerk),
    ] {
        let lim = limits.for_order(order);
        let poly = bundle.polygon(order).expect("orders 1..=3 exist");
        for (index, c) in poly.iter().enumerate() {
            for dim in 0..POSE_DIM {
                let rel = c[dim].abs() / lim[dim] - 1.0;
                if rel > 0.0 {
                    total += rel;
                }
                if worst.as_ref().is_none_or(|(r, _)| rel > *r) {
                    let v = Violation { kind, dim, index, value: c[dim], limit: lim[dim] };
                    worst = Some((rel, v));
                }
            }
        }
    }
    let (max_rel, worst) = worst.expect("polygons are never empty");
    FeasibilityReport {
        feasible: max_rel <= 0.0,
        max_relative_violation: max_rel,
        total_violation: total,
        worst,
    }
}

pub fn feasible(
    h: &IntervalVector,
    wps: &WaypointList,
    bc: &BoundaryConditions,
    limits: &KinematicLimits,
) -> Result<FeasibilityReport> {
    Ok(check_bundle(&solve_trajectory(wps, h, bc)?, limits))
}

/// Smallest uniform stretch factor that makes `bundle` satisfy the limits.
/// Stretching all intervals by `s` keeps the control points and divides the
/// `d`-th derivative points by `s^d`.
pub fn required_stretch(bundle: &BSplineBundle, limits: &KinematicLimits) -> f64 {
    let mut s = 1.0_f64;
    for order in 1..=3 {
        let lim = limits.for_order(order);
        let poly = bundle.polygon(order).expect("orders 1..=3 exist");
        for c in poly {
            for dim in 0..POSE_DIM {
                let ratio = c[dim].abs() / lim[dim];
                s = s.max(ratio.powf(1.0 / order as f64));
            }
        }
    }
    s
}

/// One full evaluation of a candidate interval vector.
pub fn evaluate(
    h: &[f64],
    wps: &WaypointList,
    bc: &BoundaryConditions,
    limits: &KinematicLimits,
) -> Evaluation {
    let solved = IntervalVector::new(h.to_vec())
        .and_then(|iv| solve_trajectory(wps, &iv, bc).map(|b| (iv, b)));
    match solved {
        Ok((iv, bundle)) => {
            let report = check_bundle(&bundle, limits);
            Evaluation {
                objectives: [f_time(&iv), jerk_integral(&bundle)],
                violation: report.total_violation,
            }
        }
        Err(_) => Evaluation { objectives: [f64::INFINITY; 2], violation: f64::MAX },
    }
}

/// Runs NSGA-II on the trajectory problem and returns the feasible first
/// front, sorted by decreasing `f_time`, duplicates removed.
pub fn pareto_front(
    wps: &WaypointList,
    bc: &BoundaryConditions,
    limits: &KinematicLimits,
    cfg: &OptimizerConfig,
) -> Result<Vec<ParetoEntry>> {
    let lower = lower_bounds(wps, limits, cfg.eps_h);
    let upper = vec![cfg.h_max; lower.len()];
    pareto_front_in_box(wps, bc, limits, cfg, &lower, &upper)
}

/// [`pareto_front`] with an explicit search box.
pub fn pareto_front_in_box(
    wps: &WaypointList,
    bc: &BoundaryConditions,
    limits: &KinematicLimits,
    cfg: &OptimizerConfig,
    lower: &[f64],
    upper: &[f64],
) -> Result<Vec<ParetoEntry>> {
    limits.validate()?;
    if lower.len() != wps.len() + 1 || upper.len() != lower.len() {
        return Err(construction("search box does not match the waypoint count"));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
        return Err(construction("every upper bound must exceed its lower bound"));
    }
    let front = nsga2(lower, upper, &cfg.nsga2(), |h| evaluate(h, wps, bc, limits))?;
    let mut entries: Vec<ParetoEntry> = front
        .into_iter()
        .map(|ind| {
            Ok(ParetoEntry {
                h: IntervalVector::new(ind.genes)?,
                f_time: ind.eval.objectives[0],
                f_jerk: ind.eval.objectives[1],
            })
        })
        .collect::<Result<_>>()?;
    entries.sort_by(|a, b| b.f_time.total_cmp(&a.f_time).then(a.f_jerk.total_cmp(&b.f_jerk)));
    entries.dedup_by(|b, a| a.f_time == b.f_time);
    if entries.is_empty() {
        return Err(Error::Infeasible { best_violation: f64::NAN });
    }
    Ok(entries)
}

/// Writes `index, f_time, f_jerk, h_1..h_{W+1}` rows (1-based index).
pub fn write_entries_csv<W: Write>(entries: &[ParetoEntry], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let width = entries.first().map_or(0, |e| e.h.len());
    let mut header = vec!["index".to_string(), "f_time".into(), "f_jerk".into()];
    header.extend((1..=width).map(|g| format!("h_{g}")));
    wtr.write_record(&header)?;
    for (i, e) in entries.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), e.f_time.to_string(), e.f_jerk.to_string()];
        row.extend(e.h.as_slice().iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::build_knots;

    fn limits() -> KinematicLimits {
        KinematicLimits {
            v_max: Pose6([1.0, 1.0, 1.0, 2.0, 2.0, 2.0]),
            a_max: Pose6([5.0, 5.0, 5.0, 10.0, 10.0, 10.0]),
            j_max: Pose6([50.0, 50.0, 50.0, 100.0, 100.0, 100.0]),
        }
    }

    fn three() -> WaypointList {
        WaypointList::new(vec![
            Pose6::new(0.3, -0.2, 0.3, 0.0, 0.0, 0.0),
            Pose6::new(0.5, 0.0, 0.45, 0.1, 0.0, 0.4),
            Pose6::new(0.4, 0.3, 0.2, 0.0, 0.2, 0.8),
        ])
        .unwrap()
    }

    #[test]
    fn time_objective() {
        assert_eq!(f_time(&IntervalVector::new(vec![1.0; 4]).unwrap()), 24.0);
        assert_eq!(f_time(&IntervalVector::new(vec![0.5; 3]).unwrap()), 9.0);
        let h = IntervalVector::new(vec![0.3, 0.7, 0.2]).unwrap();
        assert!((f_time(&h.scaled(2.0).unwrap()) - 2.0 * f_time(&h)).abs() < 1e-12);
    }

    #[test]
    fn jerk_of_constant_trajectory_is_zero() {
        let p = Pose6::new(0.4, 0.1, 0.3, 0.0, 0.0, 0.0);
        let wps = WaypointList::with_repeat_interval(vec![p, p], 0.1).unwrap();
        let h = IntervalVector::new(vec![0.2, 0.5, 0.2]).unwrap();
        assert!(f_jerk(&h, &wps, &BoundaryConditions::zero()).unwrap().abs() < 1e-20);
    }

    #[test]
    fn jerk_quadrature_matches_dense_trapezoid() {
        let h = IntervalVector::new(vec![0.4, 0.9, 1.3, 0.5]).unwrap();
        let b = solve_trajectory(&three(), &h, &BoundaryConditions::zero()).unwrap();
        let q = jerk_integral(&b);
        let dt = 1e-4;
        let n = (b.duration() / dt).round() as usize;
        let dt = b.duration() / n as f64;
        let sq = |t: f64| -> f64 { b.eval(t, 3).unwrap().0.iter().map(|v| v * v).sum() };
        let mut trap = 0.5 * (sq(0.0) + sq(b.duration()));
        for i in 1..n {
            trap += sq(i as f64 * dt);
        }
        trap *= dt;
        assert!((q - trap).abs() <= 1e-6 * q, "{q} vs {trap}");
    }

    #[test]
    fn jerk_time_dilation() {
        let h = IntervalVector::new(vec![0.4, 0.9, 1.3, 0.5]).unwrap();
        let bc = BoundaryConditions::zero();
        let j1 = f_jerk(&h, &three(), &bc).unwrap();
        let j2 = f_jerk(&h.scaled(2.0).unwrap(), &three(), &bc).unwrap();
        assert!((j2 / j1 - 2f64.powi(-5)).abs() <= 1e-8 * 2f64.powi(-5));
    }

    #[test]
    fn lower_bound_cases() {
        let lim = limits();
        let wps = WaypointList::new(vec![
            Pose6::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            Pose6::new(0.5, 0.1, 0.0, 0.2, 0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(lower_bounds(&wps, &lim, 0.05), vec![0.05, 0.5, 0.05]);

        let p = Pose6::new(0.1, 0.1, 0.1, 0.0, 0.0, 0.0);
        let rep = WaypointList::with_repeat_interval(vec![p, p], 0.01).unwrap();
        assert_eq!(lower_bounds(&rep, &lim, 0.05), vec![0.05, 0.05, 0.05]);
        let rep = WaypointList::with_repeat_interval(vec![p, p], 0.2).unwrap();
        assert_eq!(lower_bounds(&rep, &lim, 0.05)[1], 0.2);
    }

    /// Control points of the d-th derivative written with interval sums, as
    /// `(p+1-d)(c_{k+1,d-1} - c_{k,d-1}) / Σ_{z=max(1,k-p+d)}^{min(k,W+1)} h_z`.
    fn derivative_points_from_intervals(c: &[f64], h: &[f64], d: usize) -> Vec<f64> {
        let p = 5usize;
        let mut cur = c.to_vec();
        for level in 1..=d {
            cur = (1..cur.len())
                .map(|k1| {
                    // k1 is the 1-based index k of the derivative point
                    let lo = (k1 as isize - p as isize + level as isize).max(1) as usize;
                    let hi = k1.min(h.len());
                    let s: f64 = h[lo - 1..hi].iter().sum();
                    (p + 1 - level) as f64 * (cur[k1] - cur[k1 - 1]) / s
                })
                .collect();
        }
        cur
    }

    #[test]
    fn constraint_points_match_interval_sum_form() {
        let hv = vec![0.4, 0.9, 1.3, 0.5];
        let h = IntervalVector::new(hv.clone()).unwrap();
        let b = solve_trajectory(&three(), &h, &BoundaryConditions::zero()).unwrap();
        assert_eq!(b.knots(), &build_knots(&h, 5).unwrap());
        for d in 1..=3 {
            let poly = b.polygon(d).unwrap();
            for dim in 0..6 {
                let oracle = derivative_points_from_intervals(&b.dimension(dim), &hv, d);
                assert_eq!(oracle.len(), poly.len());
                for (a, o) in poly.iter().zip(&oracle) {
                    assert!((a[dim] - o).abs() <= 1e-9 * o.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn slow_trajectories_are_feasible() {
        let h = IntervalVector::new(vec![5.0, 10.0, 10.0, 5.0]).unwrap();
        let r = feasible(&h, &three(), &BoundaryConditions::zero(), &limits()).unwrap();
        assert!(r.feasible);
        assert!(r.max_relative_violation <= 0.0);
        assert_eq!(r.total_violation, 0.0);
    }

    #[test]
    fn lower_bounds_are_infeasible_and_reported() {
        let wps = three();
        let lb = lower_bounds(&wps, &limits(), 0.05);
        let h = IntervalVector::new(lb).unwrap();
        let r = feasible(&h, &wps, &BoundaryConditions::zero(), &limits()).unwrap();
        assert!(!r.feasible);
        assert!(r.total_violation > 0.0);
        // Recorded for this instance: acceleration is the binding constraint.
        assert_eq!(r.worst.kind, ConstraintKind::Acceleration);
        assert!(r.max_relative_violation > 0.0);
    }

    #[test]
    fn stretch_restores_feasibility() {
        let wps = three();
        let bc = BoundaryConditions::zero();
        let h = IntervalVector::new(lower_bounds(&wps, &limits(), 0.05)).unwrap();
        let b = solve_trajectory(&wps, &h, &bc).unwrap();
        let s = required_stretch(&b, &limits());
        assert!(s > 1.0);
        let r = feasible(&h.scaled(s * (1.0 + 1e-9)).unwrap(), &wps, &bc, &limits()).unwrap();
        assert!(r.feasible, "{r:?}");
    }

    #[test]
    fn feasibility_implies_sampled_limits() {
        let wps = three();
        let bc = BoundaryConditions::zero();
        let lim = limits();
        let h0 = IntervalVector::new(lower_bounds(&wps, &lim, 0.05)).unwrap();
        let b0 = solve_trajectory(&wps, &h0, &bc).unwrap();
        let h = h0.scaled(required_stretch(&b0, &lim) * 1.000001).unwrap();
        let b = solve_trajectory(&wps, &h, &bc).unwrap();
        assert!(check_bundle(&b, &lim).feasible);
        for i in 0..=1000 {
            let t = b.duration() * i as f64 / 1000.0;
            for order in 1..=3 {
                let v = b.eval(t, order).unwrap();
                for dim in 0..6 {
                    assert!(v[dim].abs() <= lim.for_order(order)[dim] * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let e = ParetoEntry {
            h: IntervalVector::new(vec![0.1, 0.2, 0.3]).unwrap(),
            f_time: 3.6,
            f_jerk: 12.5,
        };
        let mut buf = Vec::new();
        write_entries_csv(&[e], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "index,f_time,f_jerk,h_1,h_2,h_3\n1,3.6,12.5,0.1,0.2,0.3\n");
    }
}
