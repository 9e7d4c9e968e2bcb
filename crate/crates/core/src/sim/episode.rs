//! One simulated episode: a strategy executing the scenario's cycles while a
//! trace plays the human.

use serde::{Deserialize, Serialize};

use super::io::LadderFile;
use super::trace::Trace;
use super::{Scenario, Strategy};
use crate::bspline::BSplineBundle;
use crate::error::{Error, Result};
use crate::human::{HumanMonitor, Observation};
use crate::pacing::PacingController;
use crate::planner::{
    solve_trajectory, waypoint_residual, waypoint_times, BoundaryConditions, WaypointList,
};
use crate::pose::{planar_distance, Pose6};
use crate::safety::{
    check_stop_all, morph_path, replan, scale_zones, ExecutionStatus, Mode, ResumeGate,
    StopDecision,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickEvent {
    Dispatch,
    Stop,
    Replan,
    Complete,
}

/// State at the start of one tick, before the robot moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub dt: f64,
    /// Position in the cycle schedule; `None` when nothing is executing.
    pub cycle: Option<usize>,
    pub mode: Option<Mode>,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Commanded horizontal velocity (already time-scaled).
    pub vx: f64,
    pub vy: f64,
    /// Linear speed actually executed this tick.
    pub speed: f64,
    pub scale: f64,
    pub human_x: Option<f64>,
    pub human_y: Option<f64>,
    /// Horizontal distance to the nearest tracked body point in the trace.
    pub d: Option<f64>,
    pub d_physical: f64,
    pub d_cognitive: f64,
    pub lambda_cobot: f64,
    pub zeta: f64,
    pub rho: f64,
    pub index: usize,
    pub morphed: usize,
    pub event: Option<TickEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub t: f64,
    /// Waypoints still ahead when the robot stopped.
    pub remaining: usize,
    /// Waypoints of the new trajectory, current pose included.
    pub waypoints: usize,
    /// Interpolation residual of the new trajectory.
    pub residual: f64,
    /// Worst distance from a waypoint that was ahead to the new curve at its
    /// waypoint times.
    pub remaining_residual: f64,
    pub stretch: f64,
}

fn remaining_residual(ahead: &[Pose6], fresh: &ExecutionStatus) -> Result<f64> {
    let times = waypoint_times(fresh.active().knots(), fresh.waypoints().len());
    let poses = times
        .iter()
        .map(|t| fresh.active().eval(*t, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(ahead
        .iter()
        .map(|w| poses.iter().map(|p| (*p - *w).max_abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Position in the schedule (0-based).
    pub cycle: usize,
    /// Which scenario cycle was run.
    pub source: usize,
    pub start: f64,
    pub end: f64,
    pub index: usize,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub strategy: Strategy,
    /// Time at which the last cycle finished (s).
    pub completion_time: f64,
    /// Share of the episode spent below `v_idle` while the robot was held
    /// back: stopped, replanning or slowed by the speed cap (%).
    pub idle_pct: f64,
    /// Share spent below `v_idle` with any trajectory active, including the
    /// planned start and end ramps (%).
    pub slow_pct: f64,
    pub v_mean: f64,
    pub d_min: Option<f64>,
    pub stops: usize,
    pub replans: usize,
    pub morph_ticks: usize,
    pub cycles_completed: usize,
    pub cycle_durations: Vec<f64>,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    pub ticks: Vec<TickRecord>,
    pub pacing: Vec<crate::pacing::PacingRecord>,
    pub cycles: Vec<CycleRecord>,
    pub replans: Vec<ReplanRecord>,
    pub metrics: EpisodeMetrics,
}

/// Speed cap of the velocity-scaling baseline: stop inside the collision-free
/// radius, full speed beyond the social radius, raised cosine between.
pub fn vs_limit(d: f64, d_cf: f64, d_soc: f64, v_max: f64) -> f64 {
    if d < d_cf {
        0.0
    } else if d > d_soc {
        v_max
    } else {
        0.5 * v_max * (1.0 - ((d - d_cf) * std::f64::consts::PI / (d_soc - d_cf)).cos())
    }
}

/// Speed cap of the linear separation baseline.
pub fn emu_limit(d: f64, k: f64, offset: f64) -> f64 {
    (k * (d - offset)).max(0.0)
}

fn time_scale(cap: f64, speed: f64) -> f64 {
    if speed <= 1e-9 {
        if cap > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (cap / speed).min(1.0)
    }
}

struct Active {
    slot: usize,
    status: ExecutionStatus,
    start: f64,
    index: usize,
}

fn nearest(ee: [f64; 2], parts: &[[f64; 2]]) -> Option<([f64; 2], f64)> {
    parts
        .iter()
        .map(|p| (*p, planar_distance(ee, *p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Runs `strategy` over the scenario's schedule with `trace` as the human.
pub fn run_episode(
    sc: &Scenario,
    ladders: &LadderFile,
    trace: &Trace,
    strategy: Strategy,
) -> Result<EpisodeOutput> {
    sc.validate()?;
    let lists = sc.waypoint_lists()?;
    ladders.check_against(&lists)?;
    let bc = BoundaryConditions::zero();
    let bundles: Vec<Vec<BSplineBundle>> = lists
        .iter()
        .zip(&ladders.cycles)
        .map(|(w, c)| {
            c.ladder.entries().iter().map(|e| solve_trajectory(w, &e.h, &bc)).collect()
        })
        .collect::<Result<_>>()?;
    let n = sc.optimizer.ladder_size;
    let schedule = sc.schedule();
    let th = &sc.safety;
    let dt = 1.0 / sc.tick_rate;

    let mut cursor = trace.cursor();
    let mut monitor = HumanMonitor::new(0.0, sc.monitor.clone());
    let mut pacing = PacingController::new(sc.pacing.clone(), 0.0)?;
    let mut gate = ResumeGate::default();

    let mut ticks = Vec::new();
    let mut cycles = Vec::new();
    let mut replans = Vec::new();
    let mut next_slot = 0usize;
    let mut active: Option<Active> = None;
    let mut carry = 0.0;
    let mut truncated = false;
    let mut pose = lists[schedule[0]].first();

    let mut k = 0u64;
    while next_slot < schedule.len() || active.is_some() {
        let t = k as f64 * dt;
        if t > sc.max_duration {
            truncated = true;
            log::warn!("{strategy}: episode cut off at {:.1} s", sc.max_duration);
            break;
        }
        k += 1;

        let sample = cursor.advance_to(t);
        let snap = monitor.update(&Observation {
            t,
            parts: sample.parts.clone(),
            gaze: sample.gaze,
            rr: sample.rr.last().copied(),
            rho: sample.rho,
            instr_update: sample.instr_update,
        });
        if sample.rr.is_empty() {
            pacing.tick(t, snap.rho, None);
        }
        for rr in &sample.rr {
            pacing.tick(t, snap.rho, Some(*rr));
        }
        let index = match strategy {
            Strategy::FixedMinTime => n,
            Strategy::FixedMinJerk => 1,
            _ => pacing.index(),
        };

        let mut event = None;
        if active.is_none() && next_slot < schedule.len() {
            let src = schedule[next_slot];
            let bundle = bundles[src][index.clamp(1, n) - 1].clone();
            let mut status = ExecutionStatus::new(bundle, lists[src].clone())?;
            status.advance(carry);
            log::debug!("{strategy}: t={t:.2} dispatch cycle {next_slot} at index {index}");
            active = Some(Active { slot: next_slot, status, start: t - carry, index });
            next_slot += 1;
            carry = 0.0;
            event = Some(TickEvent::Dispatch);
        }

        let trace_parts: Vec<[f64; 2]> = snap.parts_xy();
        let perceived: &[[f64; 2]] = if strategy == Strategy::NoHuman { &[] } else { &trace_parts };
        let zones = scale_zones(snap.lambda_cobot(), snap.zeta, th);
        if let Some(a) = &active {
            pose = a.status.pose();
        }
        let ee = pose.xy();
        let near = nearest(ee, &trace_parts);

        let mut scale = 1.0;
        let mut vel = [0.0, 0.0];
        let mut speed = 0.0;
        let mut morphed = 0;
        let mut finished = false;
        if let Some(a) = active.as_mut() {
            let v = a.status.velocity();
            match strategy {
                Strategy::Promind | Strategy::NoHuman => match a.status.mode {
                    Mode::Running => {
                        morphed = morph_path(&mut a.status, perceived, &zones, th, sc.robot_base)?;
                        let v = a.status.velocity();
                        let v2 = [v[0], v[1]];
                        if check_stop_all(ee, v2, perceived, &zones, th.beta_th) == StopDecision::Stop {
                            a.status.mode = Mode::Stopped;
                            gate.reset();
                            event = Some(TickEvent::Stop);
                            log::debug!("{strategy}: t={t:.2} stop");
                        } else {
                            vel = v2;
                            speed = v.linear_norm();
                        }
                    }
                    Mode::Stopped | Mode::Replanning => {
                        let d = nearest(ee, perceived).map_or(f64::INFINITY, |n| n.1);
                        if gate.update(t, d, &zones, th) {
                            a.status.mode = Mode::Replanning;
                            let ahead = a.status.remaining_waypoints();
                            match replan(&a.status, pose, &sc.limits, &sc.replan)? {
                                Some(r) => {
                                    let residual =
                                        waypoint_residual(r.status.active(), r.status.waypoints())?;
                                    replans.push(ReplanRecord {
                                        t,
                                        remaining: ahead.len(),
                                        waypoints: r.status.waypoints().len(),
                                        residual,
                                        remaining_residual: remaining_residual(&ahead, &r.status)?,
                                        stretch: r.stretch,
                                    });
                                    a.status = r.status;
                                    a.status.mode = Mode::Replanning;
                                    event = Some(TickEvent::Replan);
                                    log::debug!("{strategy}: t={t:.2} replan, residual {residual:.2e}");
                                }
                                None => finished = true,
                            }
                        }
                    }
                },
                Strategy::Vs | Strategy::Emu => {
                    let cap = match near {
                        None => f64::INFINITY,
                        Some((_, d)) if strategy == Strategy::Vs => vs_limit(
                            d,
                            th.d_collision_free,
                            th.d_social,
                            sc.baselines.vs_max_speed,
                        ),
                        Some((_, d)) => emu_limit(d, sc.baselines.k_emu, sc.baselines.emu_offset),
                    };
                    scale = time_scale(cap, v.linear_norm());
                    vel = [v[0] * scale, v[1] * scale];
                    speed = v.linear_norm() * scale;
                }
                Strategy::FixedMinTime | Strategy::FixedMinJerk => {
                    vel = [v[0], v[1]];
                    speed = v.linear_norm();
                }
            }
        }

        let a_mode = active.as_ref().map(|a| a.status.mode);
        ticks.push(TickRecord {
            t,
            dt,
            cycle: active.as_ref().map(|a| a.slot),
            mode: a_mode,
            x: pose[0],
            y: pose[1],
            z: pose[2],
            vx: vel[0],
            vy: vel[1],
            speed,
            scale,
            human_x: near.map(|n| n.0[0]),
            human_y: near.map(|n| n.0[1]),
            d: near.map(|n| n.1),
            d_physical: zones.d_physical,
            d_cognitive: zones.d_cognitive,
            lambda_cobot: snap.lambda_cobot(),
            zeta: snap.zeta,
            rho: snap.rho,
            index: active.as_ref().map_or(index, |a| a.index),
            morphed,
            event,
        });

        let Some(a) = active.as_mut() else { continue };
        let moving = matches!(a.status.mode, Mode::Running) && !finished;
        if a.status.mode == Mode::Replanning && !finished {
            a.status.mode = Mode::Running;
        }
        let mut end = None;
        if finished {
            end = Some(t);
            carry = 0.0;
        } else if moving && scale > 0.0 {
            let remaining = a.status.duration() - a.status.t;
            let u = scale * dt;
            if u >= remaining - 1e-12 {
                let used = remaining / scale;
                end = Some(t + used);
                carry = dt - used;
            } else {
                a.status.advance(u);
            }
        }
        if let Some(end) = end {
            let a = active.take().expect("checked above");
            pose = a.status.active().eval(a.status.duration(), 0)?;
            log::debug!("{strategy}: cycle {} done at {end:.3}", a.slot);
            cycles.push(CycleRecord {
                cycle: a.slot,
                source: schedule[a.slot],
                start: a.start,
                end,
                index: a.index,
                duration: end - a.start,
            });
            if let Some(last) = ticks.last_mut() {
                last.event = Some(TickEvent::Complete);
            }
        }
    }

    let metrics = compute_metrics(strategy, &ticks, &cycles, &replans, sc.v_idle, truncated);
    Ok(EpisodeOutput { ticks, pacing: pacing.history().to_vec(), cycles, replans, metrics })
}

/// Episode metrics from the tick log. Each tick stands for `dt` seconds, the
/// last one only up to the completion time.
pub fn compute_metrics(
    strategy: Strategy,
    ticks: &[TickRecord],
    cycles: &[CycleRecord],
    replans: &[ReplanRecord],
    v_idle: f64,
    truncated: bool,
) -> EpisodeMetrics {
    let end = match (truncated, cycles.last()) {
        (false, Some(c)) => c.end,
        _ => ticks.last().map_or(0.0, |r| r.t + r.dt),
    };
    let mut idle = 0.0;
    let mut slow = 0.0;
    let mut dist = 0.0;
    for r in ticks {
        let w = r.dt.min(end - r.t).max(0.0);
        if r.mode.is_some() && r.speed < v_idle {
            slow += w;
            if r.mode != Some(Mode::Running) || r.scale < 1.0 {
                idle += w;
            }
        }
        dist += r.speed * w;
    }
    let ratio = |x: f64| if end > 0.0 { x / end } else { 0.0 };
    EpisodeMetrics {
        strategy,
        completion_time: end,
        idle_pct: 100.0 * ratio(idle),
        slow_pct: 100.0 * ratio(slow),
        v_mean: ratio(dist),
        d_min: ticks.iter().filter_map(|r| r.d).reduce(f64::min),
        stops: ticks.iter().filter(|r| r.event == Some(TickEvent::Stop)).count(),
        replans: replans.len(),
        morph_ticks: ticks.iter().filter(|r| r.morphed > 0).count(),
        cycles_completed: cycles.len(),
        cycle_durations: cycles.iter().map(|c| c.duration).collect(),
        truncated,
    }
}

impl LadderFile {
    /// Errors unless there is one ladder per scenario cycle, for the same
    /// waypoints.
    pub fn check_against(&self, lists: &[WaypointList]) -> Result<()> {
        if self.cycles.len() != lists.len() {
            return Err(Error::Config(format!(
                "ladder file has {} cycles, scenario has {}",
                self.cycles.len(),
                lists.len()
            )));
        }
        for (i, (c, w)) in self.cycles.iter().zip(lists).enumerate() {
            let same = c.waypoints.len() == w.len()
                && c.waypoints.iter().zip(w.points()).all(|(a, b)| (*a - *b).max_abs() < 1e-9);
            if !same {
                return Err(Error::Config(format!("ladder for cycle {} has other waypoints", i + 1)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_caps() {
        assert_eq!(vs_limit(0.2, 0.25, 1.0, 0.25), 0.0);
        assert_eq!(vs_limit(1.2, 0.25, 1.0, 0.25), 0.25);
        assert!((vs_limit(0.625, 0.25, 1.0, 0.25) - 0.125).abs() < 1e-12);
        assert_eq!(emu_limit(0.2, 0.5, 0.25), 0.0);
        assert!((emu_limit(0.45, 0.5, 0.25) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn time_scale_cases() {
        assert_eq!(time_scale(0.1, 0.2), 0.5);
        assert_eq!(time_scale(0.5, 0.2), 1.0);
        assert_eq!(time_scale(0.0, 0.0), 0.0);
        assert_eq!(time_scale(0.1, 0.0), 1.0);
    }

    fn tick(t: f64, speed: f64, active: bool) -> TickRecord {
        let held = speed == 0.0;
        TickRecord {
            t,
            dt: 0.5,
            cycle: active.then_some(0),
            mode: active.then_some(if held { Mode::Stopped } else { Mode::Running }),
            x: 0.0,
            y: 0.0,
            z: 0.0,
            vx: speed,
            vy: 0.0,
            speed,
            scale: 1.0,
            human_x: None,
            human_y: None,
            d: Some(1.0 - t / 10.0),
            d_physical: 0.4,
            d_cognitive: 0.4,
            lambda_cobot: 0.0,
            zeta: 0.0,
            rho: 0.0,
            index: 8,
            morphed: 0,
            event: None,
        }
    }

    #[test]
    fn metrics_weight_last_tick() {
        let ticks = vec![tick(0.0, 0.0, true), tick(0.5, 0.2, true), tick(1.0, 0.2, true)];
        let cycles = vec![CycleRecord { cycle: 0, source: 0, start: 0.0, end: 1.25, index: 8, duration: 1.25 }];
        let m = compute_metrics(Strategy::Vs, &ticks, &cycles, &[], 0.005, false);
        assert_eq!(m.completion_time, 1.25);
        assert!((m.idle_pct - 40.0).abs() < 1e-12);
        assert!((m.slow_pct - 40.0).abs() < 1e-12);
        assert!((m.v_mean - 0.2 * 0.75 / 1.25).abs() < 1e-12);
        assert!((m.d_min.unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(m.cycles_completed, 1);
    }

    #[test]
    fn metrics_hand_example() {
        let ticks: Vec<_> = [0.0, 0.0, 1.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, v)| tick(i as f64 * 0.5, *v, true))
            .collect();
        let cycles = vec![CycleRecord { cycle: 0, source: 0, start: 0.0, end: 2.0, index: 8, duration: 2.0 }];
        let m = compute_metrics(Strategy::NoHuman, &ticks, &cycles, &[], 0.005, false);
        assert_eq!(m.v_mean, 0.5);
        assert_eq!(m.idle_pct, 50.0);
        let stuck: Vec<_> = (0..4).map(|i| tick(i as f64 * 0.5, 0.0, true)).collect();
        let m = compute_metrics(Strategy::Vs, &stuck, &[], &[], 0.005, true);
        assert_eq!(m.idle_pct, 100.0);
        let mut ramp = stuck.clone();
        for r in &mut ramp {
            r.mode = Some(Mode::Running);
            r.speed = 0.001;
        }
        let m = compute_metrics(Strategy::NoHuman, &ramp, &[], &[], 0.005, true);
        assert_eq!((m.idle_pct, m.slow_pct), (0.0, 100.0));
    }
}
