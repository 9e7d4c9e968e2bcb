//! Waypoint interpolation with quintic B-splines.
//!
//! A trajectory through `W` waypoints uses `W + 1` time intervals: the two
//! boundary intervals end at virtual points that exist only as extra interior
//! knots. With `W + 6` control points per pose coordinate, the unknowns are
//! fixed by `W` waypoint passages plus velocity, acceleration and jerk at both
//! ends.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bspline::{BSplineBundle, BSplineCurve, KnotVector, QUINTIC};
use crate::error::{construction, Error, Result};
use crate::pose::{unwrap_near, wrap_angle, Pose6, POSE_DIM};

/// Ordered waypoints a trajectory must pass through.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaypointList {
    points: Vec<Pose6>,
    /// Minimum duration for legs joining identical waypoints; `None` means
    /// such legs are rejected.
    repeat_interval: Option<f64>,
}

impl WaypointList {
    /// Builds the list, normalizing Euler angles to `(-pi, pi]` and
    /// unwrapping each waypoint's angles to the representative nearest the
    /// previous waypoint.
    pub fn new(points: Vec<Pose6>) -> Result<Self> {
        let list = Self::normalize(points, true)?;
        Self::reject_repeats(list)
    }

    /// Like [`WaypointList::new`] but keeps the first waypoint's angles as
    /// given, so a list starting at the current pose stays continuous with it.
    pub fn anchored(points: Vec<Pose6>, repeat_interval: Option<f64>) -> Result<Self> {
        let list = Self::normalize(points, false)?;
        match repeat_interval {
            Some(r) if r > 0.0 && r.is_finite() => {
                Ok(WaypointList { points: list, repeat_interval: Some(r) })
            }
            Some(_) => Err(construction("repeat interval must be positive")),
            None => Self::reject_repeats(list),
        }
    }

    fn reject_repeats(list: Vec<Pose6>) -> Result<Self> {
        if let Some(g) = list.windows(2).position(|w| w[0] == w[1]) {
            return Err(construction(format!(
                "waypoints {} and {} are identical; supply a repeat interval",
                g + 1,
                g + 2
            )));
        }
        Ok(WaypointList { points: list, repeat_interval: None })
    }

    /// Like [`WaypointList::new`] but allows identical consecutive waypoints;
    /// legs between them get at least `min_interval` seconds.
    pub fn with_repeat_interval(points: Vec<Pose6>, min_interval: f64) -> Result<Self> {
        if !(min_interval > 0.0 && min_interval.is_finite()) {
            return Err(construction("repeat interval must be positive"));
        }
        Ok(WaypointList {
            points: Self::normalize(points, true)?,
            repeat_interval: Some(min_interval),
        })
    }

    fn normalize(points: Vec<Pose6>, wrap_first: bool) -> Result<Vec<Pose6>> {
        if points.len() < 2 {
            return Err(construction("at least two waypoints are required"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(construction("waypoints must be finite"));
        }
        let mut out: Vec<Pose6> = Vec::with_capacity(points.len());
        for p in points {
            let mut q = p;
            for i in 3..POSE_DIM {
                q[i] = match out.last() {
                    Some(prev) => unwrap_near(p[i], prev[i]),
                    None if wrap_first => wrap_angle(p[i]),
                    None => p[i],
                };
            }
            out.push(q);
        }
        Ok(out)
    }

    pub fn points(&self) -> &[Pose6] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Pose6 {
        self.points[0]
    }

    pub fn last(&self) -> Pose6 {
        self.points[self.points.len() - 1]
    }

    pub fn repeat_interval(&self) -> Option<f64> {
        self.repeat_interval
    }
}

/// The `W + 1` interval durations between consecutive interpolation points
/// (virtual points included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalVector(Vec<f64>);

impl IntervalVector {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.len() < 3 {
            return Err(construction("an interval vector needs at least 3 entries"));
        }
        if let Some(g) = h.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(construction(format!("interval h[{g}] = {} is not positive", h[g])));
        }
        Ok(IntervalVector(h))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of waypoints this vector times.
    pub fn waypoint_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Uniformly stretched copy.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        IntervalVector::new(self.0.iter().map(|v| v * s).collect())
    }
}

/// Initial and final velocity, acceleration and jerk.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub start: [Pose6; 3],
    pub end: [Pose6; 3],
}

impl BoundaryConditions {
    /// Rest-to-rest motion.
    pub fn zero() -> Self {
        Self::default()
    }
}

/// Clamped knot vector for the interval vector `h`: `p+1` zeros, the `W`
/// interior cumulative sums, then `p+1` copies of `t_f`.
pub fn build_knots(h: &IntervalVector, degree: usize) -> Result<KnotVector> {
    let w = h.waypoint_count();
    let mut values = Vec::with_capacity(w + 2 * degree + 3);
    values.extend(std::iter::repeat_n(0.0, degree + 1));
    let mut acc = 0.0;
    for &hg in &h.as_slice()[..w] {
        acc += hg;
        values.push(acc);
    }
    let tf = acc + h.as_slice()[w];
    values.extend(std::iter::repeat_n(tf, degree + 1));
    KnotVector::new(values, degree)
}

/// Times at which each waypoint is attained: `0`, then the interior knots
/// that are not virtual points, then `t_f`.
pub fn waypoint_times(knots: &KnotVector, waypoint_count: usize) -> Vec<f64> {
    let p = knots.degree();
    let tau = knots.values();
    let mut times = Vec::with_capacity(waypoint_count);
    times.push(tau[0]);
    // Interior knot p+1 is the first virtual point; waypoint g (0-based,
    // 1 <= g <= W-2) sits at knot p+1+g.
    for g in 1..waypoint_count - 1 {
        times.push(tau[p + 1 + g]);
    }
    times.push(knots.end());
    times
}

/// Row vector of `d`-th derivative basis values at `t` (one entry per
/// control point of the degree-`p` curve).
fn derivative_row(knots: &KnotVector, d: usize, t: f64) -> Result<Vec<f64>> {
    let n = knots.basis_count();
    let mut row = vec![0.0; n];
    let mut unit = vec![0.0; n];
    for (k, slot) in row.iter_mut().enumerate() {
        unit[k] = 1.0;
        let c = BSplineCurve::new(knots.clone(), unit.clone())?;
        *slot = if d == 0 { c.eval(t)? } else { c.derivative(d)?.eval(t)? };
        unit[k] = 0.0;
    }
    Ok(row)
}

/// Interpolation matrix `A` for the given knots: rows are start
/// velocity/acceleration/jerk, the `W` waypoint passages, then the end
/// velocity/acceleration/jerk. Depends only on the knots.
pub fn interpolation_matrix(knots: &KnotVector, waypoint_count: usize) -> Result<DMatrix<f64>> {
    let n = knots.basis_count();
    if n != waypoint_count + 6 {
        return Err(construction(format!(
            "{n} control points cannot interpolate {waypoint_count} waypoints with 6 boundary conditions"
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    let (t0, tf) = (knots.start(), knots.end());
    let mut r = 0;
    for d in 1..=3 {
        a.row_mut(r).copy_from_slice(&derivative_row(knots, d, t0)?);
        r += 1;
    }
    for t in waypoint_times(knots, waypoint_count) {
        a.row_mut(r).copy_from_slice(&derivative_row(knots, 0, t)?);
        r += 1;
    }
    for d in 1..=3 {
        a.row_mut(r).copy_from_slice(&derivative_row(knots, d, tf)?);
        r += 1;
    }
    Ok(a)
}

fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `A Θ_i = B_i` for every pose coordinate and returns the bundle.
pub fn solve_trajectory(
    wps: &WaypointList,
    h: &IntervalVector,
    bc: &BoundaryConditions,
) -> Result<BSplineBundle> {
    let w = wps.len();
    if h.waypoint_count() != w {
        return Err(construction(format!(
            "{} intervals given for {w} waypoints (need {})",
            h.len(),
            w + 1
        )));
    }
    let knots = build_knots(h, QUINTIC)?;
    let a = interpolation_matrix(&knots, w)?;
    let n = a.nrows();
    let lu = a.clone().lu();
    let singular = || Error::Singular { condition: condition_number(&a) };
    let mut points = vec![Pose6::ZERO; n];
    for i in 0..POSE_DIM {
        let mut b = DVector::zeros(n);
        for d in 0..3 {
            b[d] = bc.start[d][i];
            b[n - 3 + d] = bc.end[d][i];
        }
        for (g, wp) in wps.points().iter().enumerate() {
            b[3 + g] = wp[i];
        }
        let theta = lu.solve(&b).ok_or_else(singular)?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        for (k, v) in theta.iter().enumerate() {
            points[k][i] = *v;
        }
    }
    BSplineBundle::new(knots, points)
}

/// Largest coordinate error between the curve at the waypoint times and the
/// waypoints themselves.
pub fn waypoint_residual(bundle: &BSplineBundle, wps: &WaypointList) -> Result<f64> {
    let times = waypoint_times(bundle.knots(), wps.len());
    let mut worst = 0.0_f64;
    for (t, w) in times.iter().zip(wps.points()) {
        worst = worst.max((bundle.eval(*t, 0)? - *w).max_abs());
    }
    Ok(worst)
}

/// Interval vector that produced `bundle`'s knots.
pub fn intervals_of(bundle: &BSplineBundle) -> Result<IntervalVector> {
    let p = bundle.knots().degree();
    let bp = &bundle.knots().values()[p..bundle.knots().len() - p];
    IntervalVector::new(bp.windows(2).map(|w| w[1] - w[0]).collect())
}

/// One controller reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub t: f64,
    pub pose: Pose6,
    pub velocity: Pose6,
}

/// Uniformly spaced setpoints over `[0, t_f]`; the last one is exactly at
/// `t_f`.
pub fn sample(bundle: &BSplineBundle, dt: f64) -> Result<Vec<Setpoint>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(crate::error::domain("sampling step must be positive"));
    }
    let tf = bundle.duration();
    let t0 = bundle.knots().start();
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let t = t0 + i as f64 * dt;
        if t >= tf - 1e-9 * dt {
            break;
        }
        out.push(Setpoint { t, pose: bundle.eval(t, 0)?, velocity: bundle.eval(t, 1)? });
        i += 1;
    }
    out.push(Setpoint { t: tf, pose: bundle.eval(tf, 0)?, velocity: bundle.eval(tf, 1)? });
    Ok(out)
}

/// Reads waypoints from a JSON array of 6-element arrays.
pub fn waypoints_from_json(text: &str) -> Result<Vec<Pose6>> {
    Ok(serde_json::from_str::<Vec<Pose6>>(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(x: f64, y: f64, z: f64) -> Pose6 {
        Pose6::new(x, y, z, 0.0, 0.0, 0.0)
    }

    #[test]
    fn knots_for_three_waypoints() {
        let h = IntervalVector::new(vec![1.0; 4]).unwrap();
        let k = build_knots(&h, 5).unwrap();
        let mut expect = vec![0.0; 6];
        expect.extend([1.0, 2.0, 3.0]);
        expect.extend([4.0; 6]);
        assert_eq!(k.values(), expect.as_slice());
        assert_eq!(k.len(), 3 + 12);
    }

    #[test]
    fn knots_for_two_waypoints() {
        let h = IntervalVector::new(vec![0.5; 3]).unwrap();
        let k = build_knots(&h, 5).unwrap();
        assert_eq!(k.duration(), 1.5);
        assert_eq!(&k.values()[6..8], &[0.5, 1.0]);
        assert_eq!(k.len(), 14);
    }

    #[test]
    fn intervals_round_trip_and_residual() {
        let wps = WaypointList::new(vec![wp(0.0, 0.0, 0.0), wp(0.3, 0.1, 0.0), wp(0.5, -0.2, 0.1)])
            .unwrap();
        let h = IntervalVector::new(vec![0.3, 0.9, 1.4, 0.2]).unwrap();
        let b = solve_trajectory(&wps, &h, &BoundaryConditions::zero()).unwrap();
        let back = intervals_of(&b).unwrap();
        for (a, e) in back.as_slice().iter().zip(h.as_slice()) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!(waypoint_residual(&b, &wps).unwrap() < 1e-12);
    }

    #[test]
    fn non_positive_intervals_rejected() {
        assert!(IntervalVector::new(vec![1.0, 0.0, 1.0]).is_err());
        assert!(IntervalVector::new(vec![1.0, -1.0, 1.0]).is_err());
        assert!(IntervalVector::new(vec![1.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn identical_waypoints_need_repeat_interval() {
        assert!(WaypointList::new(vec![wp(0.1, 0.2, 0.3), wp(0.1, 0.2, 0.3)]).is_err());
        assert!(WaypointList::with_repeat_interval(vec![wp(0.1, 0.2, 0.3); 2], 0.2).is_ok());
    }

    #[test]
    fn constant_curve_for_repeated_waypoint() {
        let p = Pose6::new(0.4, -0.1, 0.3, 0.1, 0.2, 0.3);
        let wps = WaypointList::with_repeat_interval(vec![p, p], 0.1).unwrap();
        let h = IntervalVector::new(vec![0.3, 0.5, 0.3]).unwrap();
        let b = solve_trajectory(&wps, &h, &BoundaryConditions::zero()).unwrap();
        for c in b.control_points() {
            assert!((*c - p).max_abs() < 1e-12);
        }
    }

    #[test]
    fn waypoints_are_interpolated() {
        let wps = WaypointList::new(vec![
            Pose6::new(0.3, 0.1, 0.2, 0.0, 0.1, 0.2),
            Pose6::new(0.5, -0.2, 0.4, 0.3, -0.1, 0.0),
            Pose6::new(0.1, 0.4, 0.3, -0.2, 0.0, 1.0),
        ])
        .unwrap();
        let h = IntervalVector::new(vec![1.0; 4]).unwrap();
        let b = solve_trajectory(&wps, &h, &BoundaryConditions::zero()).unwrap();
        let times = waypoint_times(b.knots(), 3);
        assert_eq!(times, vec![0.0, 2.0, 4.0]);
        for (t, w) in times.iter().zip(wps.points()) {
            assert!((b.eval(*t, 0).unwrap() - *w).max_abs() < 1e-9);
        }
        for d in 1..=3 {
            assert!(b.eval(0.0, d).unwrap().max_abs() < 1e-9);
            assert!(b.eval(4.0, d).unwrap().max_abs() < 1e-9);
        }
    }

    #[test]
    fn nonzero_boundary_conditions() {
        let wps = WaypointList::new(vec![wp(0.0, 0.0, 0.0), wp(1.0, 0.5, 0.0)]).unwrap();
        let h = IntervalVector::new(vec![0.4, 1.0, 0.4]).unwrap();
        let bc = BoundaryConditions {
            start: [wp(0.2, 0.0, 0.0), wp(0.0, 0.1, 0.0), Pose6::ZERO],
            end: [wp(0.0, 0.0, -0.1), Pose6::ZERO, wp(0.05, 0.0, 0.0)],
        };
        let b = solve_trajectory(&wps, &h, &bc).unwrap();
        for d in 0..3 {
            assert!((b.eval(0.0, d + 1).unwrap() - bc.start[d]).max_abs() < 1e-9);
            assert!((b.eval(1.8, d + 1).unwrap() - bc.end[d]).max_abs() < 1e-9);
        }
    }

    #[test]
    fn matrix_depends_only_on_intervals() {
        let h = IntervalVector::new(vec![0.3, 0.7, 1.1, 0.2, 0.5]).unwrap();
        let k = build_knots(&h, 5).unwrap();
        let a1 = interpolation_matrix(&k, 4).unwrap();
        let a2 = interpolation_matrix(&build_knots(&h, 5).unwrap(), 4).unwrap();
        assert_eq!(a1, a2);
    }

    #[test]
    fn angles_unwrapped_between_waypoints() {
        let wps = WaypointList::new(vec![
            Pose6::new(0.0, 0.0, 0.0, 0.0, 0.0, 3.1),
            Pose6::new(1.0, 0.0, 0.0, 0.0, 0.0, -3.1),
        ])
        .unwrap();
        let yaw = wps.points()[1][5];
        assert!((yaw - 3.1).abs() < 0.1);
    }

    #[test]
    fn sample_grid() {
        let wps = WaypointList::new(vec![wp(0.0, 0.0, 0.0), wp(0.2, 0.0, 0.0)]).unwrap();
        let h = IntervalVector::new(vec![0.25, 0.5, 0.25]).unwrap();
        let b = solve_trajectory(&wps, &h, &BoundaryConditions::zero()).unwrap();
        let s = sample(&b, 0.5).unwrap();
        let ts: Vec<f64> = s.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.5, 1.0]);
        assert!((s[0].pose - wps.first()).max_abs() < 1e-12);
        assert!((s[2].pose - wps.last()).max_abs() < 1e-12);
        assert!(sample(&b, 0.0).is_err());
    }

    #[test]
    fn sample_velocity_matches_pose_differences() {
        let wps = WaypointList::new(vec![
            wp(0.3, 0.0, 0.2),
            wp(0.5, 0.3, 0.4),
            wp(0.2, 0.5, 0.2),
        ])
        .unwrap();
        let h = IntervalVector::new(vec![0.3, 0.9, 0.8, 0.3]).unwrap();
        let b = solve_trajectory(&wps, &h, &BoundaryConditions::zero()).unwrap();
        let dt = 1e-3;
        let s = sample(&b, dt).unwrap();
        for w in s.windows(3) {
            let fd = (w[2].pose - w[0].pose) * (1.0 / (w[2].t - w[0].t));
            assert!((fd - w[1].velocity).max_abs() < 1e-3);
        }
    }

    #[test]
    fn waypoint_json() {
        let v = waypoints_from_json("[[0,0,0,0,0,0],[1,2,3,0.1,0.2,0.3]]").unwrap();
        assert_eq!(v[1], Pose6::new(1.0, 2.0, 3.0, 0.1, 0.2, 0.3));
        assert!(waypoints_from_json("[[0,0,0]]").is_err());
    }
}
