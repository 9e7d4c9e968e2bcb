//! Tick-based episode runner, baseline strategies, metrics and the file
//! formats used by the command-line tool.

mod compare;
mod episode;
mod generate;
mod io;
mod trace;

pub use compare::{compare, write_compare_csv, write_runs_csv, CompareResult, CompareRow, RunSummary};
pub use episode::{
    compute_metrics, emu_limit, run_episode, vs_limit, CycleRecord, EpisodeMetrics, EpisodeOutput,
    ReplanRecord, TickEvent, TickRecord,
};
pub use generate::{default_targets, generate_trace, ladder_targets, path_targets, GenConfig, Profile};
pub use io::{
    load_ladders, optimize_scenario, plot_data, read_ticks_jsonl, save_ladders, write_run,
    write_ticks_jsonl, CycleLadder, LadderFile,
};
pub use trace::{Trace, TraceCursor, TraceRow, TraceSample};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::human::MonitorConfig;
use crate::optimizer::{AsfConfig, KinematicLimits, OptimizerConfig};
use crate::pacing::PacingConfig;
use crate::planner::WaypointList;
use crate::pose::{wrap_angle, Pose6};
use crate::safety::{ReplanConfig, SafetyThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Promind,
    Vs,
    Emu,
    FixedMinTime,
    FixedMinJerk,
    NoHuman,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Promind,
        Strategy::Vs,
        Strategy::Emu,
        Strategy::FixedMinTime,
        Strategy::FixedMinJerk,
        Strategy::NoHuman,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Promind => "promind",
            Strategy::Vs => "vs",
            Strategy::Emu => "emu",
            Strategy::FixedMinTime => "fixed-min-time",
            Strategy::FixedMinJerk => "fixed-min-jerk",
            Strategy::NoHuman => "no-human",
        }
    }

    /// Whether the stress-driven ladder index is followed.
    pub fn uses_pacing(self) -> bool {
        !matches!(self, Strategy::FixedMinTime | Strategy::FixedMinJerk)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

/// Speed caps of the two distance-based baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Speed limit far from the human (m/s).
    pub vs_max_speed: f64,
    /// Slope of the linear separation-to-speed map (1/s).
    pub k_emu: f64,
    /// Separation at which the linear map reaches zero (m).
    pub emu_offset: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { vs_max_speed: 0.25, k_emu: 0.5, emu_offset: 0.25 }
    }
}

fn default_repetitions() -> usize {
    1
}

fn default_tick_rate() -> f64 {
    50.0
}

fn default_v_idle() -> f64 {
    0.005
}

fn default_max_duration() -> f64 {
    3600.0
}

/// Everything needed to plan and simulate one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Waypoint lists executed in order; each starts where the previous ends.
    pub cycles: Vec<Vec<Pose6>>,
    /// Minimum duration of legs between identical waypoints, if allowed.
    #[serde(default)]
    pub repeat_interval: Option<f64>,
    /// How many times the whole cycle list is executed.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub limits: KinematicLimits,
    #[serde(default)]
    pub safety: SafetyThresholds,
    #[serde(default)]
    pub pacing: PacingConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub asf: AsfConfig,
    #[serde(default)]
    pub replan: ReplanConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub robot_base: [f64; 2],
    /// Speed below which a tick with pending work counts as idle (m/s).
    #[serde(default = "default_v_idle")]
    pub v_idle: f64,
    /// Episodes are cut off after this long (s).
    #[serde(default = "default_max_duration")]
    pub max_duration: f64,
}

fn default_strategy() -> Strategy {
    Strategy::Promind
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.cycles.is_empty() {
            return cfg("scenario needs at least one cycle".into());
        }
        if !(self.tick_rate > 0.0 && self.tick_rate <= 1000.0) {
            return cfg(format!("tick rate {} not in (0, 1000]", self.tick_rate));
        }
        if self.repetitions == 0 {
            return cfg("repetitions must be at least 1".into());
        }
        if !(self.v_idle >= 0.0 && self.max_duration > 0.0) {
            return cfg("v_idle must be >= 0 and max_duration > 0".into());
        }
        self.limits.validate()?;
        self.safety.validate()?;
        self.pacing.validate()?;
        if self.pacing.n != self.optimizer.ladder_size || self.asf.n != self.optimizer.ladder_size {
            return cfg(format!(
                "ladder sizes disagree: optimizer {}, asf {}, pacing {}",
                self.optimizer.ladder_size, self.asf.n, self.pacing.n
            ));
        }
        self.waypoint_lists()?;
        let n = self.cycles.len();
        let wrap = (self.repetitions > 1).then_some((n - 1, 0));
        for (a, b) in (0..n - 1).map(|i| (i, i + 1)).chain(wrap) {
            let end = *self.cycles[a].last().expect("validated non-empty");
            let start = self.cycles[b][0];
            if !poses_match(end, start) {
                return cfg(format!("cycle {} does not start where cycle {} ends", b + 1, a + 1));
            }
        }
        Ok(())
    }

    pub fn waypoint_lists(&self) -> Result<Vec<WaypointList>> {
        self.cycles
            .iter()
            .map(|c| match self.repeat_interval {
                Some(r) => WaypointList::with_repeat_interval(c.clone(), r),
                None => WaypointList::new(c.clone()),
            })
            .collect()
    }

    /// Cycle indices in execution order.
    pub fn schedule(&self) -> Vec<usize> {
        (0..self.repetitions).flat_map(|_| 0..self.cycles.len()).collect()
    }

    pub fn asf_config(&self) -> AsfConfig {
        AsfConfig { n: self.optimizer.ladder_size, ..self.asf.clone() }
    }
}

fn poses_match(a: Pose6, b: Pose6) -> bool {
    (0..3).all(|i| (a[i] - b[i]).abs() <= 1e-6)
        && (3..6).all(|i| wrap_angle(a[i] - b[i]).abs() <= 1e-6)
}
