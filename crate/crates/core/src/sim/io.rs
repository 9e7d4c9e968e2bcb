//! Ladder files, run directories and plot-ready CSV extracts.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeOutput, TickRecord};
use super::Scenario;
use crate::error::{Error, Result};
use crate::optimizer::{asf_downsample, pareto_front, ParetoEntry, SolutionLadder};
use crate::pacing::write_pacing_csv;
use crate::planner::BoundaryConditions;
use crate::pose::Pose6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLadder {
    pub waypoints: Vec<Pose6>,
    pub front: Vec<ParetoEntry>,
    pub ladder: SolutionLadder,
}

/// Optimizer output for every cycle of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderFile {
    pub seed: u64,
    pub cycles: Vec<CycleLadder>,
}

/// Runs the optimizer and ladder downsampling on every cycle. Cycle `i` is
/// seeded with `seed + i`.
pub fn optimize_scenario(sc: &Scenario, seed: u64) -> Result<LadderFile> {
    sc.validate()?;
    let bc = BoundaryConditions::zero();
    let asf = sc.asf_config();
    let cycles = sc
        .waypoint_lists()?
        .into_iter()
        .enumerate()
        .map(|(i, wps)| {
            let cfg = crate::optimizer::OptimizerConfig {
                seed: seed.wrapping_add(i as u64),
                ..sc.optimizer.clone()
            };
            let front = pareto_front(&wps, &bc, &sc.limits, &cfg)?;
            let ladder = asf_downsample(&front, &asf)?;
            log::info!(
                "cycle {}: {} front entries, ladder f_time {:.3}..{:.3}",
                i + 1,
                front.len(),
                ladder.get(ladder.len()).f_time,
                ladder.get(1).f_time
            );
            Ok(CycleLadder { waypoints: wps.points().to_vec(), front, ladder })
        })
        .collect::<Result<_>>()?;
    Ok(LadderFile { seed, cycles })
}

pub fn save_ladders(file: &LadderFile, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, file)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a ladder file and re-checks the ladder ordering.
pub fn load_ladders(path: &Path) -> Result<LadderFile> {
    let file: LadderFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    for c in &file.cycles {
        SolutionLadder::new(c.ladder.entries().to_vec())?;
        if c.ladder.entries().iter().any(|e| e.h.len() != c.waypoints.len() + 1) {
            return Err(Error::Config("ladder entry does not match its waypoints".into()));
        }
    }
    Ok(file)
}

pub fn write_ticks_jsonl<W: Write>(ticks: &[TickRecord], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for r in ticks {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ticks_jsonl(path: &Path) -> Result<Vec<TickRecord>> {
    BufReader::new(File::open(path)?)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}

/// Writes `ticks.jsonl`, `pacing.csv`, `cycles.csv`, `replans.jsonl` and
/// `metrics.json` into `dir`, creating it if needed.
pub fn write_run(out: &EpisodeOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_ticks_jsonl(&out.ticks, File::create(dir.join("ticks.jsonl"))?)?;
    write_pacing_csv(&out.pacing, File::create(dir.join("pacing.csv"))?)?;

    let mut wtr = csv::Writer::from_path(dir.join("cycles.csv"))?;
    for c in &out.cycles {
        wtr.serialize(c)?;
    }
    wtr.flush()?;

    let mut w = BufWriter::new(File::create(dir.join("replans.jsonl"))?);
    for r in &out.replans {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join("metrics.json"))?);
    serde_json::to_writer_pretty(&mut w, &out.metrics)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.5}"))
}

/// Splits a run directory's tick log into per-plot CSV files.
pub fn plot_data(run: &Path, out: &Path) -> Result<()> {
    let ticks = read_ticks_jsonl(&run.join("ticks.jsonl"))?;
    fs::create_dir_all(out)?;

    let mut traj = csv::Writer::from_path(out.join("trajectory.csv"))?;
    traj.write_record(["t", "x", "y", "z", "vx", "vy", "speed", "scale", "mode"])?;
    let mut sep = csv::Writer::from_path(out.join("separation.csv"))?;
    sep.write_record(["t", "d", "d_physical", "d_cognitive"])?;
    let mut hum = csv::Writer::from_path(out.join("human.csv"))?;
    hum.write_record(["t", "human_x", "human_y", "lambda_cobot", "zeta", "rho"])?;
    let mut pace = csv::Writer::from_path(out.join("pacing_index.csv"))?;
    pace.write_record(["t", "index"])?;

    for r in &ticks {
        let t = format!("{:.3}", r.t);
        let mode = r
            .mode
            .map(|m| serde_json::to_value(m).map(|v| v.as_str().unwrap_or_default().to_string()))
            .transpose()?
            .unwrap_or_default();
        traj.write_record([
            t.clone(),
            format!("{:.5}", r.x),
            format!("{:.5}", r.y),
            format!("{:.5}", r.z),
            format!("{:.5}", r.vx),
            format!("{:.5}", r.vy),
            format!("{:.5}", r.speed),
            format!("{:.4}", r.scale),
            mode,
        ])?;
        sep.write_record([
            t.clone(),
            opt(r.d),
            format!("{:.5}", r.d_physical),
            format!("{:.5}", r.d_cognitive),
        ])?;
        hum.write_record([
            t.clone(),
            opt(r.human_x),
            opt(r.human_y),
            format!("{:.4}", r.lambda_cobot),
            format!("{:.4}", r.zeta),
            format!("{:.4}", r.rho),
        ])?;
        pace.write_record([t, r.index.to_string()])?;
    }
    for w in [&mut traj, &mut sep, &mut hum, &mut pace] {
        w.flush()?;
    }
    Ok(())
}
