//! Runs several strategies over a set of traces and tabulates the metrics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::run_episode;
use super::io::LadderFile;
use super::trace::Trace;
use super::{Scenario, Strategy};
use crate::error::Result;

/// Metrics of one (trace, strategy) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trace: String,
    pub strategy: Strategy,
    pub completion_time: f64,
    pub idle_pct: f64,
    pub slow_pct: f64,
    pub v_mean: f64,
    pub d_min: Option<f64>,
    pub stops: usize,
    pub replans: usize,
    pub truncated: bool,
}

/// Mean and sample standard deviation per strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub strategy: Strategy,
    pub runs: usize,
    pub t_mean: f64,
    pub t_std: f64,
    pub idle_mean: f64,
    pub idle_std: f64,
    pub slow_mean: f64,
    pub v_mean: f64,
    pub v_std: f64,
    pub d_min_mean: f64,
    pub d_min_std: f64,
    /// Smallest separation over all runs.
    pub d_min_min: f64,
    pub stops_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareResult {
    pub runs: Vec<RunSummary>,
    pub rows: Vec<CompareRow>,
}

impl CompareResult {
    pub fn row(&self, s: Strategy) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.strategy == s)
    }

    /// Runs of one strategy, in trace order.
    pub fn runs_of(&self, s: Strategy) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(move |r| r.strategy == s)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    let s = if xs.len() > 1 {
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, s)
}

/// Every strategy on every named trace, in parallel. Results keep the input
/// order (trace-major), so output is independent of scheduling.
pub fn compare(
    sc: &Scenario,
    ladders: &LadderFile,
    traces: &[(String, Trace)],
    strategies: &[Strategy],
) -> Result<CompareResult> {
    let jobs: Vec<(&String, &Trace, Strategy)> = traces
        .iter()
        .flat_map(|(name, tr)| strategies.iter().map(move |s| (name, tr, *s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|(name, tr, s)| {
            let m = run_episode(sc, ladders, tr, *s)?.metrics;
            log::info!("{name} {s}: T={:.2} idle={:.2}%", m.completion_time, m.idle_pct);
            Ok(RunSummary {
                trace: (*name).clone(),
                strategy: *s,
                completion_time: m.completion_time,
                idle_pct: m.idle_pct,
                slow_pct: m.slow_pct,
                v_mean: m.v_mean,
                d_min: m.d_min,
                stops: m.stops,
                replans: m.replans,
                truncated: m.truncated,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = strategies
        .iter()
        .map(|&s| {
            let of: Vec<&RunSummary> = runs.iter().filter(|r| r.strategy == s).collect();
            let col = |f: &dyn Fn(&RunSummary) -> f64| of.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (t_mean, t_std) = mean_std(&col(&|r| r.completion_time));
            let (idle_mean, idle_std) = mean_std(&col(&|r| r.idle_pct));
            let (v_mean, v_std) = mean_std(&col(&|r| r.v_mean));
            let d: Vec<f64> = of.iter().filter_map(|r| r.d_min).collect();
            let (d_min_mean, d_min_std) = mean_std(&d);
            CompareRow {
                strategy: s,
                runs: of.len(),
                t_mean,
                t_std,
                idle_mean,
                idle_std,
                slow_mean: mean_std(&col(&|r| r.slow_pct)).0,
                v_mean,
                v_std,
                d_min_mean,
                d_min_std,
                d_min_min: d.iter().copied().fold(f64::NAN, f64::min),
                stops_mean: mean_std(&col(&|r| r.stops as f64)).0,
            }
        })
        .collect();
    Ok(CompareResult { runs, rows })
}

/// The summary table with fixed formatting.
pub fn write_compare_csv<W: Write>(res: &CompareResult, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "strategy", "runs", "t_mean", "t_std", "idle_mean", "idle_std", "slow_mean", "v_mean", "v_std",
        "d_min_mean", "d_min_std", "d_min_min", "stops_mean",
    ])?;
    for r in &res.rows {
        wtr.write_record([
            r.strategy.to_string(),
            r.runs.to_string(),
            format!("{:.4}", r.t_mean),
            format!("{:.4}", r.t_std),
            format!("{:.4}", r.idle_mean),
            format!("{:.4}", r.idle_std),
            format!("{:.4}", r.slow_mean),
            format!("{:.5}", r.v_mean),
            format!("{:.5}", r.v_std),
            format!("{:.4}", r.d_min_mean),
            format!("{:.4}", r.d_min_std),
            format!("{:.4}", r.d_min_min),
            format!("{:.2}", r.stops_mean),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per (trace, strategy) run.
pub fn write_runs_csv<W: Write>(res: &CompareResult, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "trace", "strategy", "completion_time", "idle_pct", "slow_pct", "v_mean", "d_min", "stops", "replans",
        "truncated",
    ])?;
    for r in &res.runs {
        wtr.write_record([
            r.trace.clone(),
            r.strategy.to_string(),
            format!("{:.4}", r.completion_time),
            format!("{:.4}", r.idle_pct),
            format!("{:.4}", r.slow_pct),
            format!("{:.5}", r.v_mean),
            r.d_min.map_or_else(String::new, |d| format!("{d:.4}")),
            r.stops.to_string(),
            r.replans.to_string(),
            r.truncated.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
