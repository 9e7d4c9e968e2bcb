//! Live human-state signals computed from recorded observations: attention
//! toward the robot, mental effort, camera stress and RR intervals.

mod attention;
mod effort;
mod rr;

pub use attention::{attention_component, attention_level, attention_limits, GazeAngles, Roi, RoiGeometry};
pub use effort::{mental_effort, AttentionEvent, AttentionTimeline, EffortConfig};
pub use rr::{rr_window_mean, RrReference, RrStream, WindowMean};

use serde::{Deserialize, Serialize};

/// One time-stamped observation of the human.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    /// Tracked body points in the robot base frame (m). Usually a single
    /// centroid; empty when nobody is present.
    pub parts: Vec<[f64; 3]>,
    /// Gaze toward task, instructions and robot; `None` for missing frames.
    pub gaze: [Option<GazeAngles>; 3],
    /// Beat interval ending at this sample, if a beat occurred.
    pub rr: Option<f64>,
    /// Camera stress score, if the column is present.
    pub rho: Option<f64>,
    pub instr_update: bool,
}

/// Camera stress score clamped to `[0, 1]`; a missing value counts as 0.
pub fn camera_stress(rho: Option<f64>) -> f64 {
    match rho {
        Some(v) if v.is_finite() => v.clamp(0.0, 1.0),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub rois: [RoiGeometry; 3],
    pub effort: EffortConfig,
    /// Λ is held this long after the last gaze frame (s)...
    pub gaze_hold: f64,
    /// ...and then decays linearly to 0 over this long (s).
    pub gaze_decay: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            rois: RoiGeometry::defaults(),
            effort: EffortConfig::default(),
            gaze_hold: 0.5,
            gaze_decay: 1.0,
        }
    }
}

/// Immutable view of the human state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSnapshot {
    pub t: f64,
    pub parts: Vec<[f64; 3]>,
    /// Λ per RoI, indexed by [`Roi::index`].
    pub lambda: [f64; 3],
    pub zeta: f64,
    pub rho: f64,
}

impl HumanSnapshot {
    pub fn lambda_cobot(&self) -> f64 {
        self.lambda[Roi::Cobot.index()]
    }

    /// Horizontal coordinates of every tracked part.
    pub fn parts_xy(&self) -> Vec<[f64; 2]> {
        self.parts.iter().map(|p| [p[0], p[1]]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeldGaze {
    level: f64,
    seen_at: f64,
}

/// Accumulates observations on a single, non-decreasing timeline.
#[derive(Debug, Clone)]
pub struct HumanMonitor {
    cfg: MonitorConfig,
    timeline: AttentionTimeline,
    held: [Option<HeldGaze>; 3],
    rr: RrStream,
    rho_missing_warned: bool,
    last: Option<HumanSnapshot>,
}

impl HumanMonitor {
    pub fn new(start: f64, cfg: MonitorConfig) -> Self {
        let timeline = AttentionTimeline::new(start, cfg.effort.clone());
        HumanMonitor {
            cfg,
            timeline,
            held: [None; 3],
            rr: RrStream::new(),
            rho_missing_warned: false,
            last: None,
        }
    }

    pub fn timeline(&self) -> &AttentionTimeline {
        &self.timeline
    }

    pub fn rr(&mut self) -> &mut RrStream {
        &mut self.rr
    }

    pub fn last(&self) -> Option<&HumanSnapshot> {
        self.last.as_ref()
    }

    fn held_level(&self, i: usize, t: f64) -> f64 {
        match self.held[i] {
            None => 0.0,
            Some(h) => {
                let age = t - h.seen_at;
                if age <= self.cfg.gaze_hold {
                    h.level
                } else {
                    let f = 1.0 - (age - self.cfg.gaze_hold) / self.cfg.gaze_decay;
                    h.level * f.max(0.0)
                }
            }
        }
    }

    /// Ingests one observation and returns the resulting snapshot.
    pub fn update(&mut self, obs: &Observation) -> HumanSnapshot {
        let t = obs.t;
        let mut lambda = [0.0; 3];
        for roi in Roi::ALL {
            let i = roi.index();
            lambda[i] = match &obs.gaze[i] {
                Some(g) => {
                    let level = attention_level(g, &self.cfg.rois[i]);
                    self.held[i] = Some(HeldGaze { level, seen_at: t });
                    level
                }
                None => self.held_level(i, t),
            };
        }
        self.timeline.advance(t, lambda, obs.instr_update);
        let zeta = if t > self.timeline.start() {
            mental_effort(&self.timeline, t, &self.cfg.effort).unwrap_or(0.0)
        } else {
            0.0
        };
        if obs.rho.is_none() && !self.rho_missing_warned {
            log::warn!("camera stress missing at t={t:.3}; treating as 0");
            self.rho_missing_warned = true;
        }
        if let Some(rr) = obs.rr {
            self.rr.push(t, rr);
        }
        let snap = HumanSnapshot {
            t,
            parts: obs.parts.clone(),
            lambda,
            zeta,
            rho: camera_stress(obs.rho),
        };
        self.last = Some(snap.clone());
        snap
    }
}
