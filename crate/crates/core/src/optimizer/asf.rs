//! Achievement-scalarization downsampling of a Pareto front into an ordered
//! ladder of trajectory timings.

use serde::{Deserialize, Serialize};

use super::ParetoEntry;
use crate::error::{construction, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsfConfig {
    /// Number of ladder entries.
    pub n: usize,
    /// Augmentation coefficient.
    pub rho: f64,
    /// Weight on `f_time` for the first and last ladder slots; the weight on
    /// `f_jerk` is the complement. Intermediate slots are linear in between.
    pub w_time_first: f64,
    pub w_time_last: f64,
}

impl Default for AsfConfig {
    fn default() -> Self {
        AsfConfig { n: 15, rho: 1e-4, w_time_first: 0.0, w_time_last: 1.0 }
    }
}

impl AsfConfig {
    pub fn weights(&self, j: usize) -> [f64; 2] {
        let frac = if self.n > 1 { j as f64 / (self.n - 1) as f64 } else { 1.0 };
        let wt = self.w_time_first + (self.w_time_last - self.w_time_first) * frac;
        [wt, 1.0 - wt]
    }
}

/// Pareto entries ordered from slowest/smoothest (index 1) to fastest
/// (index `n`). `f_time` strictly decreases and `f_jerk` never decreases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionLadder {
    entries: Vec<ParetoEntry>,
}

impl SolutionLadder {
    pub fn new(entries: Vec<ParetoEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(construction("a ladder needs at least one entry"));
        }
        for w in entries.windows(2) {
            if !(w[1].f_time < w[0].f_time) || w[1].f_jerk < w[0].f_jerk {
                return Err(construction(
                    "ladder must have strictly decreasing f_time and non-decreasing f_jerk",
                ));
            }
        }
        Ok(SolutionLadder { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry at a 1-based ladder index, clamped into range.
    pub fn get(&self, index: usize) -> &ParetoEntry {
        let i = index.clamp(1, self.entries.len());
        &self.entries[i - 1]
    }

    pub fn entries(&self) -> &[ParetoEntry] {
        &self.entries
    }
}

/// Weighted Chebyshev scalarization with augmentation, on objectives already
/// normalized so the ideal point is the origin.
fn asf(z: [f64; 2], w: [f64; 2], rho: f64) -> f64 {
    let a = w[0] * z[0];
    let b = w[1] * z[1];
    a.max(b) + rho * (a + b)
}

/// Picks `cfg.n` spread entries from `front` by minimizing the scalarization
/// for each weight vector, then fills duplicates with the entries farthest
/// (in normalized objective space) from those already chosen.
pub fn asf_downsample(front: &[ParetoEntry], cfg: &AsfConfig) -> Result<SolutionLadder> {
    if cfg.n == 0 {
        return Err(construction("ladder size must be positive"));
    }
    // Only distinct f_time values can form a strictly ordered ladder.
    let mut pool: Vec<&ParetoEntry> = front.iter().collect();
    pool.sort_by(|a, b| b.f_time.total_cmp(&a.f_time).then(a.f_jerk.total_cmp(&b.f_jerk)));
    pool.dedup_by(|b, a| a.f_time == b.f_time);
    if pool.len() < cfg.n {
        return Err(construction(format!(
            "front has {} distinct entries, ladder needs {}",
            pool.len(),
            cfg.n
        )));
    }

    let (t_lo, t_hi) = min_max(pool.iter().map(|e| e.f_time));
    let (j_lo, j_hi) = min_max(pool.iter().map(|e| e.f_jerk));
    let norm = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    let z: Vec<[f64; 2]> = pool
        .iter()
        .map(|e| [norm(e.f_time, t_lo, t_hi), norm(e.f_jerk, j_lo, j_hi)])
        .collect();

    let mut chosen: Vec<usize> = Vec::with_capacity(cfg.n);
    for j in 0..cfg.n {
        let w = cfg.weights(j);
        let best = (0..z.len())
            .min_by(|&a, &b| asf(z[a], w, cfg.rho).total_cmp(&asf(z[b], w, cfg.rho)).then(a.cmp(&b)))
            .expect("pool is non-empty");
        if !chosen.contains(&best) {
            chosen.push(best);
        }
    }
    while chosen.len() < cfg.n {
        let dist = |i: usize| {
            chosen
                .iter()
                .map(|&c| (z[i][0] - z[c][0]).hypot(z[i][1] - z[c][1]))
                .fold(f64::INFINITY, f64::min)
        };
        let next = (0..z.len())
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(b.cmp(&a)))
            .expect("pool has more entries than chosen");
        chosen.push(next);
    }
    // pool is sorted by decreasing f_time, so index order is ladder order.
    chosen.sort_unstable();
    SolutionLadder::new(chosen.into_iter().map(|i| pool[i].clone()).collect())
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
