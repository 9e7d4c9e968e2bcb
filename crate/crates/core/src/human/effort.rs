//! Mental-effort score from an attention event log.
//!
//! Three factors are tracked: wariness (checks of the robot), learning delay
//! (dwell on the task area) and instruction cost (task/instruction switches
//! that were not prompted by new instructions). The wariness and instruction
//! factors follow the literal "sum of event instants over elapsed time"
//! definition, so each factor is scaled by a normalization constant before
//! weighting.

use serde::{Deserialize, Serialize};

use super::attention::Roi;
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffortConfig {
    /// Weights of (wariness, learning delay, instruction cost).
    pub weights: [f64; 3],
    /// Normalization constants for the same three factors.
    pub norms: [f64; 3],
    /// Λ level above which a RoI can hold the focus or count as checked.
    pub focus_threshold: f64,
    /// Minimum time Λ_cobot must stay above threshold to count as a check (s).
    pub check_debounce: f64,
    /// Switches within this time after an instruction update are required (s).
    pub update_exclusion: f64,
}

impl Default for EffortConfig {
    fn default() -> Self {
        EffortConfig {
            weights: [1.0 / 3.0; 3],
            norms: [2.0, 0.8, 1.0],
            focus_threshold: 0.5,
            check_debounce: 0.1,
            update_exclusion: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttentionEvent {
    CobotCheck { t: f64 },
    Switch { t: f64, required: bool },
    InstructionUpdate { t: f64 },
}

impl AttentionEvent {
    pub fn time(&self) -> f64 {
        match *self {
            AttentionEvent::CobotCheck { t }
            | AttentionEvent::Switch { t, .. }
            | AttentionEvent::InstructionUpdate { t } => t,
        }
    }
}

/// Event log and dwell accumulator built from per-sample Λ values.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTimeline {
    cfg: EffortConfig,
    start: f64,
    last_t: Option<f64>,
    events: Vec<AttentionEvent>,
    task_dwell: f64,
    focus: Option<Roi>,
    last_task_side: Option<Roi>,
    last_update: Option<f64>,
    cobot_above_since: Option<f64>,
    cobot_check_counted: bool,
}

impl AttentionTimeline {
    pub fn new(start: f64, cfg: EffortConfig) -> Self {
        AttentionTimeline {
            cfg,
            start,
            last_t: None,
            events: Vec::new(),
            task_dwell: 0.0,
            focus: None,
            last_task_side: None,
            last_update: None,
            cobot_above_since: None,
            cobot_check_counted: false,
        }
    }

    /// Timeline with a prescribed event log and task dwell.
    pub fn from_events(start: f64, events: Vec<AttentionEvent>, task_dwell: f64) -> Self {
        let mut tl = AttentionTimeline::new(start, EffortConfig::default());
        tl.events = events;
        tl.task_dwell = task_dwell;
        tl
    }

    pub fn config(&self) -> &EffortConfig {
        &self.cfg
    }

    pub fn events(&self) -> &[AttentionEvent] {
        &self.events
    }

    pub fn task_dwell(&self) -> f64 {
        self.task_dwell
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn focus(&self) -> Option<Roi> {
        self.focus
    }

    /// Feeds one sample of Λ per RoI (indexed by [`Roi::index`]).
    /// Timestamps must not decrease; stale samples are ignored.
    pub fn advance(&mut self, t: f64, lambda: [f64; 3], instruction_update: bool) {
        if let Some(prev) = self.last_t {
            if t < prev {
                return;
            }
            if self.focus == Some(Roi::Task) {
                self.task_dwell += t - prev;
            }
        }
        self.last_t = Some(t);

        if instruction_update {
            self.last_update = Some(t);
            self.events.push(AttentionEvent::InstructionUpdate { t });
        }

        let thr = self.cfg.focus_threshold;
        let cobot = lambda[Roi::Cobot.index()];
        if cobot > thr {
            let since = *self.cobot_above_since.get_or_insert(t);
            if !self.cobot_check_counted && t - since >= self.cfg.check_debounce - 1e-12 {
                self.events.push(AttentionEvent::CobotCheck { t: since });
                self.cobot_check_counted = true;
            }
        } else {
            self.cobot_above_since = None;
            self.cobot_check_counted = false;
        }

        let (best, level) = Roi::ALL
            .iter()
            .map(|r| (*r, lambda[r.index()]))
            .fold((Roi::Task, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        self.focus = (level >= thr).then_some(best);

        if let Some(side @ (Roi::Task | Roi::Instructions)) = self.focus {
            if let Some(prev) = self.last_task_side {
                if prev != side {
                    let required = self
                        .last_update
                        .is_some_and(|u| t - u <= self.cfg.update_exclusion);
                    self.events.push(AttentionEvent::Switch { t, required });
                }
            }
            self.last_task_side = Some(side);
        }
    }

    /// Raw `(m_WA, m_LD, m_IC)` at time `t`.
    pub fn factors(&self, t: f64) -> Result<[f64; 3]> {
        let elapsed = t - self.start;
        if !(elapsed > 0.0) {
            return Err(domain(format!("elapsed time {elapsed} must be positive")));
        }
        let mut wa = 0.0;
        let mut ic = 0.0;
        for e in self.events.iter().filter(|e| e.time() <= t) {
            match *e {
                AttentionEvent::CobotCheck { t } => wa += t,
                AttentionEvent::Switch { t, required: false } => ic += t,
                _ => {}
            }
        }
        Ok([wa / elapsed, self.task_dwell / elapsed, ic / elapsed])
    }
}

/// Mental effort `ζ` in `[0, 1]`.
pub fn mental_effort(timeline: &AttentionTimeline, t: f64, cfg: &EffortConfig) -> Result<f64> {
    let m = timeline.factors(t)?;
    let score: f64 = (0..3)
        .map(|j| cfg.weights[j] * (m[j] / cfg.norms[j]).min(1.0))
        .sum();
    Ok(score.clamp(0.0, 1.0))
}
