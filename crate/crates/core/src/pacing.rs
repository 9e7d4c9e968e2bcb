//! Stress-driven stepping along the solution ladder.
//!
//! Windowed RR means are compared with the previous window: a large drop
//! toward stress steps to slower, smoother entries; any rise from a relaxed
//! level steps to faster ones. Camera stress detections add an immediate
//! single step toward slower entries, at most once per window.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{construction, Result};
use crate::human::{RrReference, RrStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PacingConfig {
    /// Rest-to-stress sensitivity (s).
    pub delta_rs: f64,
    /// Stress-to-rest sensitivity (s).
    pub delta_sr: f64,
    /// Camera stress threshold.
    pub rho_th: f64,
    pub reference: RrReference,
    /// Ladder size.
    pub n: usize,
    /// Overrides the computed starting index.
    pub initial_index: Option<usize>,
    /// Window mean below which a hold turns into a relaxing step; defaults to
    /// the stress reference.
    pub rr_guard: Option<f64>,
    /// RR window length (s).
    pub window: f64,
    /// Length of the head-of-trace segment used to measure the rest RR (s);
    /// 0 keeps the configured reference.
    pub calibration: f64,
    /// Camera detections in this final part of a window are folded into the
    /// window's step instead of being applied at once (s).
    pub camera_tail: f64,
}

impl Default for PacingConfig {
    fn default() -> Self {
        PacingConfig {
            delta_rs: 0.02,
            delta_sr: 0.01,
            rho_th: 0.5,
            reference: RrReference::default(),
            n: 15,
            initial_index: None,
            rr_guard: None,
            window: 30.0,
            calibration: 60.0,
            camera_tail: 5.0,
        }
    }
}

impl PacingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_sr > 0.0 && self.delta_sr < self.delta_rs) {
            return Err(construction("need 0 < delta_sr < delta_rs"));
        }
        self.reference.validate()?;
        if self.n == 0 {
            return Err(construction("ladder size must be positive"));
        }
        if !(self.window > 0.0 && self.calibration >= 0.0 && self.camera_tail >= 0.0) {
            return Err(construction("window must be positive, calibration and tail >= 0"));
        }
        Ok(())
    }

    pub fn guard(&self) -> f64 {
        self.rr_guard.unwrap_or(self.reference.stress)
    }
}

/// Starting ladder index: `round(n - sigma_r / delta_rs)` clamped to `[1, n]`.
pub fn initial_index(cfg: &PacingConfig) -> usize {
    if let Some(i) = cfg.initial_index {
        return i.clamp(1, cfg.n);
    }
    let raw = (cfg.n as f64 - cfg.reference.sigma_rest / cfg.delta_rs).round();
    (raw.max(1.0) as usize).clamp(1, cfg.n)
}

pub fn camera_step(rho: f64, cfg: &PacingConfig) -> i32 {
    if rho > cfg.rho_th {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Stress,
    Relax,
    Hold,
    Guard,
    Camera,
    Calibration,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Stress => "stress",
            Branch::Relax => "relax",
            Branch::Hold => "hold",
            Branch::Guard => "guard",
            Branch::Camera => "camera",
            Branch::Calibration => "calibration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrStep {
    pub branch: Branch,
    /// `ΔRR_r` for stress, `ΔRR_s` for relax, `RR_i - RR_prev` otherwise.
    pub delta_rr: f64,
    pub delta: i32,
}

// Quotients that are integers up to rounding error are taken as integers,
// so exact multiples of a sensitivity land on the intended step.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

/// Step for window mean `rr_i` after `rr_prev`, with rest reference `rr_rest`.
/// `delta_camera` only enters the stress branch.
pub fn rr_step(rr_i: f64, rr_prev: f64, rr_rest: f64, cfg: &PacingConfig, delta_camera: i32) -> RrStep {
    let diff = rr_i - rr_prev;
    let stress_ref = cfg.reference.stress;
    if diff < -cfg.delta_rs && rr_i < rr_rest {
        let d = rr_i - rr_prev.min(rr_rest);
        let steps = snap((d + cfg.delta_rs) / cfg.delta_rs).floor() as i32;
        RrStep { branch: Branch::Stress, delta_rr: d, delta: steps.min(-1) + delta_camera }
    } else if diff > 0.0 && rr_i >= stress_ref {
        let d = rr_i - rr_prev.max(stress_ref);
        let steps = snap(d / cfg.delta_sr).ceil() as i32;
        RrStep { branch: Branch::Relax, delta_rr: d, delta: steps.max(1) }
    } else if rr_i < cfg.guard() {
        RrStep { branch: Branch::Guard, delta_rr: diff, delta: -1 }
    } else {
        RrStep { branch: Branch::Hold, delta_rr: diff, delta: 0 }
    }
}

/// One line of the pacing log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacingRecord {
    pub t: f64,
    pub rr_i: Option<f64>,
    pub branch: Branch,
    pub delta_rr: Option<f64>,
    pub delta_camera: i32,
    pub delta: i32,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacingState {
    pub index: usize,
    pub n: usize,
    pub rr_prev: Option<f64>,
    /// Camera step waiting for the window boundary (`-1` or `0`).
    pub camera_pending: i32,
    pub history: Vec<PacingRecord>,
}

impl PacingState {
    pub fn new(cfg: &PacingConfig) -> Self {
        PacingState {
            index: initial_index(cfg),
            n: cfg.n,
            rr_prev: None,
            camera_pending: 0,
            history: Vec::new(),
        }
    }
}

/// Moves the index by `delta`, clamped to `[1, n]`.
pub fn apply_step(state: &mut PacingState, delta: i32) -> usize {
    let next = (state.index as i64 + delta as i64).clamp(1, state.n as i64);
    state.index = next as usize;
    state.index
}

/// Event-driven pacing over one trace: calibration, windows and camera
/// steps.
#[derive(Debug, Clone)]
pub struct PacingController {
    cfg: PacingConfig,
    state: PacingState,
    rr: RrStream,
    rr_rest: f64,
    start: f64,
    calibrated: bool,
    /// End of the window currently being filled.
    window_end: f64,
    camera_used: bool,
}

impl PacingController {
    pub fn new(cfg: PacingConfig, start: f64) -> Result<Self> {
        cfg.validate()?;
        let state = PacingState::new(&cfg);
        let rr_rest = cfg.reference.rest;
        let calibrated = cfg.calibration == 0.0;
        let window_end = start + if calibrated { cfg.window } else { cfg.calibration };
        let mut c = PacingController {
            cfg,
            state,
            rr: RrStream::new(),
            rr_rest,
            start,
            calibrated,
            window_end,
            camera_used: false,
        };
        if c.calibrated {
            c.state.rr_prev = Some(rr_rest);
        }
        Ok(c)
    }

    pub fn index(&self) -> usize {
        self.state.index
    }

    pub fn state(&self) -> &PacingState {
        &self.state
    }

    pub fn config(&self) -> &PacingConfig {
        &self.cfg
    }

    pub fn rest_reference(&self) -> f64 {
        self.rr_rest
    }

    pub fn history(&self) -> &[PacingRecord] {
        &self.state.history
    }

    fn record(&mut self, r: PacingRecord) {
        log::debug!(
            "pacing t={:.2} branch={} delta={} index={}",
            r.t,
            r.branch.as_str(),
            r.delta,
            r.index
        );
        self.state.history.push(r);
    }

    fn close_window(&mut self) {
        let t = self.window_end;
        let pending = std::mem::take(&mut self.state.camera_pending);
        if !self.calibrated {
            let w = self.rr.window(t, t - self.start);
            if let Some(m) = w.mean {
                self.rr_rest = m;
            } else {
                log::warn!("no RR samples during calibration; keeping rest reference {}", self.rr_rest);
            }
            self.calibrated = true;
            self.state.rr_prev = Some(self.rr_rest);
            let index = apply_step(&mut self.state, pending);
            self.record(PacingRecord {
                t,
                rr_i: w.mean,
                branch: Branch::Calibration,
                delta_rr: None,
                delta_camera: pending,
                delta: pending,
                index,
            });
        } else {
            let w = self.rr.window(t, self.cfg.window);
            if w.gap {
                log::warn!("empty RR window ending at t={t:.2}");
            }
            match (w.mean, self.state.rr_prev) {
                (Some(rr_i), Some(prev)) => {
                    let step = rr_step(rr_i, prev, self.rr_rest, &self.cfg, pending);
                    let delta = if step.branch == Branch::Stress { step.delta } else { step.delta + pending };
                    let index = apply_step(&mut self.state, delta);
                    self.state.rr_prev = Some(rr_i);
                    self.record(PacingRecord {
                        t,
                        rr_i: Some(rr_i),
                        branch: step.branch,
                        delta_rr: Some(step.delta_rr),
                        delta_camera: pending,
                        delta,
                        index,
                    });
                }
                _ => {
                    let index = apply_step(&mut self.state, pending);
                    self.record(PacingRecord {
                        t,
                        rr_i: None,
                        branch: Branch::Hold,
                        delta_rr: None,
                        delta_camera: pending,
                        delta: pending,
                        index,
                    });
                }
            }
            self.rr.prune_before(t - self.cfg.window);
        }
        self.window_end = t + self.cfg.window;
        self.camera_used = false;
    }

    /// Feeds one tick: closes any windows that ended at or before `t`, then
    /// records the RR sample and reacts to camera stress `rho`.
    pub fn tick(&mut self, t: f64, rho: f64, rr: Option<f64>) {
        while t >= self.window_end {
            self.close_window();
        }
        if let Some(v) = rr {
            self.rr.push(t, v);
        }
        if !self.camera_used && camera_step(rho, &self.cfg) < 0 {
            self.camera_used = true;
            if t > self.window_end - self.cfg.camera_tail {
                self.state.camera_pending = -1;
            } else {
                let index = apply_step(&mut self.state, -1);
                self.record(PacingRecord {
                    t,
                    rr_i: None,
                    branch: Branch::Camera,
                    delta_rr: None,
                    delta_camera: -1,
                    delta: -1,
                    index,
                });
            }
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// Writes the pacing log as CSV.
pub fn write_pacing_csv<W: Write>(records: &[PacingRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "rr_i", "branch", "delta_rr", "delta_camera", "delta", "index"])?;
    for r in records {
        wtr.write_record([
            format!("{:.3}", r.t),
            opt(r.rr_i),
            r.branch.as_str().to_string(),
            opt(r.delta_rr),
            r.delta_camera.to_string(),
            r.delta.to_string(),
            r.index.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
