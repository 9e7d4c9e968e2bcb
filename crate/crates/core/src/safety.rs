//! Attention-scaled safety zones, local path morphing and the stop/replan
//! rule.
//!
//! Morphing only touches the horizontal coordinates of control points that
//! do not influence the span currently being executed, and never the last
//! `p-1` points, so the executed part of the path and the final waypoint are
//! left alone.

use serde::{Deserialize, Serialize};

use crate::bspline::BSplineBundle;
use crate::error::{construction, Result};
use crate::optimizer::{pareto_front, required_stretch, KinematicLimits, OptimizerConfig};
use crate::planner::{
    intervals_of, solve_trajectory, waypoint_times, BoundaryConditions, IntervalVector,
    WaypointList,
};
use crate::pose::{planar_distance, Pose6};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyThresholds {
    pub d_collision_free: f64,
    pub d_conservative: f64,
    pub d_social: f64,
    /// Keep-out radius around the robot base for morphed points (m).
    pub s_self_collision: f64,
    /// Approach angle below which an intrusion stops the robot (rad).
    pub beta_th: f64,
    /// Morphed points are kept within this horizontal radius of the base (m).
    pub reach_max: f64,
    /// Extra clearance over `d_physical` required before resuming (m).
    pub resume_margin: f64,
    /// How long the clearance must hold before resuming (s).
    pub resume_hold: f64,
    /// Largest horizontal move of a control point per morph call (m).
    pub max_point_step: f64,
}

impl Default for SafetyThresholds {
    fn default() -> Self {
        SafetyThresholds {
            d_collision_free: 0.25,
            d_conservative: 0.40,
            d_social: 1.00,
            s_self_collision: 0.20,
            beta_th: std::f64::consts::FRAC_PI_3,
            reach_max: 0.85,
            resume_margin: 0.05,
            resume_hold: 0.3,
            max_point_step: 0.10,
        }
    }
}

impl SafetyThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.d_collision_free
            && self.d_collision_free < self.d_conservative
            && self.d_conservative < self.d_social)
        {
            return Err(construction("need 0 < d_collision_free < d_conservative < d_social"));
        }
        if !(self.beta_th > 0.0 && self.beta_th < std::f64::consts::PI) {
            return Err(construction("beta_th must lie in (0, pi)"));
        }
        if !(self.s_self_collision >= 0.0 && self.reach_max > self.s_self_collision) {
            return Err(construction("reach_max must exceed s_self_collision"));
        }
        if !(self.resume_margin >= 0.0 && self.resume_hold >= 0.0 && self.max_point_step > 0.0) {
            return Err(construction("resume margin/hold must be >= 0 and point step > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyZones {
    pub d_physical: f64,
    pub d_cognitive: f64,
    pub t: f64,
}

/// Zone radii for attention `lambda` toward the robot and mental effort
/// `zeta`, both clamped into `[0, 1]`.
pub fn scale_zones(lambda: f64, zeta: f64, th: &SafetyThresholds) -> SafetyZones {
    let lambda = lambda.clamp(0.0, 1.0);
    let zeta = zeta.clamp(0.0, 1.0);
    let d_physical = th.d_conservative - lambda * (th.d_conservative - th.d_collision_free);
    let d_cognitive = ((th.d_social - th.d_conservative) * zeta + th.d_conservative).max(d_physical);
    SafetyZones { d_physical, d_cognitive, t: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Running,
    Stopped,
    Replanning,
}

/// The trajectory being executed. `nominal` is the unmorphed curve;
/// `active` has the same knots and possibly displaced control points.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionStatus {
    pub mode: Mode,
    pub t: f64,
    nominal: BSplineBundle,
    active: BSplineBundle,
    waypoints: WaypointList,
}

impl ExecutionStatus {
    pub fn new(bundle: BSplineBundle, waypoints: WaypointList) -> Result<Self> {
        if bundle.knots().basis_count() != waypoints.len() + 6 {
            return Err(construction("bundle does not match the waypoint count"));
        }
        Ok(ExecutionStatus {
            mode: Mode::Running,
            t: 0.0,
            nominal: bundle.clone(),
            active: bundle,
            waypoints,
        })
    }

    pub fn nominal(&self) -> &BSplineBundle {
        &self.nominal
    }

    pub fn active(&self) -> &BSplineBundle {
        &self.active
    }

    pub fn waypoints(&self) -> &WaypointList {
        &self.waypoints
    }

    pub fn duration(&self) -> f64 {
        self.active.duration()
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.duration()
    }

    pub fn pose(&self) -> Pose6 {
        self.active.eval(self.t, 0).expect("t stays inside the domain")
    }

    pub fn velocity(&self) -> Pose6 {
        self.active.eval(self.t, 1).expect("t stays inside the domain")
    }

    /// Moves the curve parameter forward, stopping at `t_f`.
    pub fn advance(&mut self, dt: f64) {
        self.t = (self.t + dt).min(self.duration());
    }

    /// Horizontal displacement of every active control point from nominal.
    pub fn displacements(&self) -> Vec<[f64; 2]> {
        self.active
            .control_points()
            .iter()
            .zip(self.nominal.control_points())
            .map(|(a, n)| [a[0] - n[0], a[1] - n[1]])
            .collect()
    }

    /// Waypoints whose passage time is still ahead of `t`.
    pub fn remaining_waypoints(&self) -> Vec<Pose6> {
        let times = waypoint_times(self.active.knots(), self.waypoints.len());
        times
            .iter()
            .zip(self.waypoints.points())
            .filter(|(tw, _)| **tw > self.t + 1e-9)
            .map(|(_, w)| *w)
            .collect()
    }

    /// Control points eligible for morphing at the current time.
    pub fn morph_range(&self) -> std::ops::Range<usize> {
        let span = self.active.knots().span(self.t).expect("t stays inside the domain");
        let n = self.active.knots().basis_count();
        let end = n.saturating_sub(self.active.knots().degree() - 1);
        (span + 1).min(end)..end
    }
}

fn unit(v: [f64; 2]) -> Option<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    (n > 1e-12).then(|| [v[0] / n, v[1] / n])
}

/// Horizontal target position of one control point given the humans, before
/// rate limiting.
fn morph_target(
    p: [f64; 2],
    humans: &[[f64; 2]],
    zones: &SafetyZones,
    th: &SafetyThresholds,
    base: [f64; 2],
) -> [f64; 2] {
    let mut q = p;
    if let Some(h) = humans
        .iter()
        .min_by(|a, b| planar_distance(**a, p).total_cmp(&planar_distance(**b, p)))
    {
        let d = planar_distance(*h, p);
        if d < zones.d_cognitive {
            let v = unit([p[0] - h[0], p[1] - h[1]])
                .or_else(|| unit([p[0] - base[0], p[1] - base[1]]))
                .unwrap_or([1.0, 0.0]);
            q = [p[0] + (zones.d_cognitive - d) * v[0], p[1] + (zones.d_cognitive - d) * v[1]];
        }
    }
    let s = planar_distance(base, q);
    if s < th.s_self_collision {
        let u = unit([q[0] - base[0], q[1] - base[1]]).unwrap_or([1.0, 0.0]);
        q = [q[0] + (th.s_self_collision - s) * u[0], q[1] + (th.s_self_collision - s) * u[1]];
    }
    let s = planar_distance(base, q);
    if s > th.reach_max {
        let k = th.reach_max / s;
        q = [base[0] + (q[0] - base[0]) * k, base[1] + (q[1] - base[1]) * k];
    }
    q
}

/// Moves the eligible control points toward their morph targets, which are
/// computed from the nominal curve. Returns how many points moved.
pub fn morph_path(
    status: &mut ExecutionStatus,
    humans: &[[f64; 2]],
    zones: &SafetyZones,
    th: &SafetyThresholds,
    base: [f64; 2],
) -> Result<usize> {
    let range = status.morph_range();
    let mut points = status.active.control_points().to_vec();
    let nominal = status.nominal.control_points();
    let mut moved = 0;
    for l in range {
        let target = morph_target(nominal[l].xy(), humans, zones, th, base);
        let cur = points[l].xy();
        let step = [target[0] - cur[0], target[1] - cur[1]];
        let len = step[0].hypot(step[1]);
        if len == 0.0 {
            continue;
        }
        let k = (th.max_point_step / len).min(1.0);
        points[l][0] = cur[0] + step[0] * k;
        points[l][1] = cur[1] + step[1] * k;
        moved += 1;
    }
    if moved > 0 {
        status.active = status.active.with_control_points(points)?;
    }
    Ok(moved)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Angle between the horizontal velocity and the end-effector-to-human
/// vector; `None` when either is degenerate.
pub fn approach_angle(ee: [f64; 2], vel: [f64; 2], human: [f64; 2]) -> Option<f64> {
    let v = unit(vel)?;
    let r = unit([human[0] - ee[0], human[1] - ee[1]])?;
    Some((v[0] * r[0] + v[1] * r[1]).clamp(-1.0, 1.0).acos())
}

pub fn check_stop(
    ee: [f64; 2],
    vel: [f64; 2],
    human: [f64; 2],
    zones: &SafetyZones,
    beta_th: f64,
) -> StopDecision {
    if planar_distance(ee, human) >= zones.d_physical {
        return StopDecision::Continue;
    }
    match approach_angle(ee, vel, human) {
        Some(a) if a >= beta_th => StopDecision::Continue,
        _ => StopDecision::Stop,
    }
}

/// [`check_stop`] against every tracked part; any stop wins.
pub fn check_stop_all(
    ee: [f64; 2],
    vel: [f64; 2],
    humans: &[[f64; 2]],
    zones: &SafetyZones,
    beta_th: f64,
) -> StopDecision {
    if humans.iter().any(|h| check_stop(ee, vel, *h, zones, beta_th) == StopDecision::Stop) {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

/// Tracks how long the clearance needed to resume has held.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResumeGate {
    clear_since: Option<f64>,
}

impl ResumeGate {
    pub fn reset(&mut self) {
        self.clear_since = None;
    }

    /// Feeds the separation at `t`; true once resuming is allowed.
    pub fn update(&mut self, t: f64, d: f64, zones: &SafetyZones, th: &SafetyThresholds) -> bool {
        if d >= zones.d_physical + th.resume_margin {
            let since = *self.clear_since.get_or_insert(t);
            t - since >= th.resume_hold - 1e-9
        } else {
            self.clear_since = None;
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplanConfig {
    pub eps_h: f64,
    /// Re-run the optimizer on the new waypoints and take the entry closest
    /// in `f_time` to the copied timing. Off by default.
    pub reoptimize: Option<OptimizerConfig>,
}

impl Default for ReplanConfig {
    fn default() -> Self {
        ReplanConfig { eps_h: 0.05, reoptimize: None }
    }
}

/// Interval vector for a replan from the current pose through `legs.len()`
/// remaining waypoints. `legs[j]` is the time between new waypoints `j` and
/// `j+1`; `f_start`/`f_end` are the shares of the first/last leg taken by
/// the leading/trailing interval of the source timing.
pub fn split_legs(legs: &[f64], f_start: f64, f_end: f64, eps_h: f64) -> Result<IntervalVector> {
    let m = legs.len();
    let mut h = Vec::with_capacity(m + 2);
    match m {
        0 => return Err(construction("at least one leg is required")),
        1 => {
            let l = legs[0];
            h.extend([f_start * l / 2.0, (1.0 - (f_start + f_end) / 2.0) * l, f_end * l / 2.0]);
        }
        _ => {
            h.extend([f_start * legs[0], (1.0 - f_start) * legs[0]]);
            h.extend_from_slice(&legs[1..m - 1]);
            h.extend([(1.0 - f_end) * legs[m - 1], f_end * legs[m - 1]]);
        }
    }
    IntervalVector::new(h.into_iter().map(|x| x.max(eps_h)).collect())
}

/// Result of a replan: the new status and the ratio of its duration to the
/// copied timing.
#[derive(Debug, Clone, PartialEq)]
pub struct Replanned {
    pub status: ExecutionStatus,
    pub stretch: f64,
}

/// Builds a rest-to-rest trajectory from `current` through the waypoints of
/// `status` not yet reached, reusing its timing. `Ok(None)` when nothing is
/// left to reach.
pub fn replan(
    status: &ExecutionStatus,
    current: Pose6,
    limits: &KinematicLimits,
    cfg: &ReplanConfig,
) -> Result<Option<Replanned>> {
    let bundle = &status.active;
    let w = status.waypoints.len();
    let times = waypoint_times(bundle.knots(), w);
    let mut ahead: Vec<usize> = (0..w).filter(|&g| times[g] > status.t + 1e-9).collect();
    if let Some(&g) = ahead.first() {
        if (status.waypoints.points()[g] - current).max_abs() < 1e-9 {
            ahead.remove(0);
        }
    }
    if ahead.is_empty() {
        return Ok(None);
    }
    let mut legs = vec![(times[ahead[0]] - status.t).max(cfg.eps_h)];
    legs.extend(ahead.windows(2).map(|p| times[p[1]] - times[p[0]]));

    let src = intervals_of(bundle)?;
    let s = src.as_slice();
    let f_start = s[0] / (s[0] + s[1]);
    let f_end = s[w] / (s[w] + s[w - 1]);
    let mut h = split_legs(&legs, f_start, f_end, cfg.eps_h)?;

    let mut pts = vec![current];
    pts.extend(ahead.iter().map(|&g| status.waypoints.points()[g]));
    let wps = WaypointList::anchored(pts, status.waypoints.repeat_interval())?;
    let bc = BoundaryConditions::zero();
    if let Some(opt) = &cfg.reoptimize {
        let target = crate::optimizer::f_time(&h);
        if let Ok(front) = pareto_front(&wps, &bc, limits, opt) {
            if let Some(best) = front
                .iter()
                .min_by(|a, b| (a.f_time - target).abs().total_cmp(&(b.f_time - target).abs()))
            {
                h = best.h.clone();
            }
        }
    }
    let copied = h.total();
    let mut fresh = solve_trajectory(&wps, &h, &bc)?;
    let mut need = required_stretch(&fresh, limits);
    // Restarting from rest mostly overloads the first leg, so lengthen the
    // two leading intervals while that keeps helping.
    for _ in 0..12 {
        if need <= 1.0 {
            break;
        }
        let mut v = h.as_slice().to_vec();
        v[0] *= need * (1.0 + 1e-9);
        v[1] *= need * (1.0 + 1e-9);
        let cand_h = IntervalVector::new(v)?;
        let cand = solve_trajectory(&wps, &cand_h, &bc)?;
        let cand_need = required_stretch(&cand, limits);
        if cand_need >= need {
            break;
        }
        (h, fresh, need) = (cand_h, cand, cand_need);
    }
    if need > 1.0 {
        h = h.scaled(need * (1.0 + 1e-9))?;
        fresh = solve_trajectory(&wps, &h, &bc)?;
    }
    let mut out = ExecutionStatus::new(fresh, wps)?;
    out.mode = Mode::Running;
    Ok(Some(Replanned { status: out, stretch: h.total() / copied }))
}
