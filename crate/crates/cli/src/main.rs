use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use promind_core::optimizer::write_entries_csv;
use promind_core::sim::{
    compare, generate_trace, ladder_targets, load_ladders, optimize_scenario, path_targets, plot_data, run_episode,
    save_ladders, write_compare_csv, write_run, write_runs_csv, GenConfig, Profile, Scenario,
    Strategy, Trace,
};

/// Human-aware trajectory planning and pacing simulator.
#[derive(Parser)]
#[command(name = "promind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Pareto front and pacing ladder of every scenario cycle.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one strategy against one human trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Defaults to the scenario's strategy.
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        ladder: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several strategies over every trace in a directory.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "promind,vs,emu,no-human")]
        strategies: Vec<Strategy>,
        /// Ladder file; optimized on the fly (seed 0) when omitted.
        #[arg(long)]
        ladder: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic human trace.
    GenTrace {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Aim intrusions at this scenario's path instead of the default arc.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Also keep reach depths against every curve in this ladder file.
        #[arg(long)]
        ladder: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a run directory into plot-ready CSV files.
    PlotData {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing scenario {}", path.display()))
}

fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Trace::parse(&text).with_context(|| format!("parsing trace {}", path.display()))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("ladder");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(p)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Optimize { scenario, seed, out } => {
            let sc = read_scenario(&scenario)?;
            let file = optimize_scenario(&sc, seed)?;
            ensure_parent(&out)?;
            save_ladders(&file, &out)?;
            for (i, c) in file.cycles.iter().enumerate() {
                let k = i + 1;
                write_entries_csv(&c.front, fs::File::create(sibling(&out, &format!("front_{k}")))?)?;
                write_entries_csv(
                    c.ladder.entries(),
                    fs::File::create(sibling(&out, &format!("ladder_{k}")))?,
                )?;
            }
            println!("wrote {} ({} cycles)", out.display(), file.cycles.len());
        }
        Command::Simulate { scenario, trace, strategy, ladder, out } => {
            let sc = read_scenario(&scenario)?;
            let tr = read_trace(&trace)?;
            let ladders = load_ladders(&ladder)?;
            let strategy = strategy.unwrap_or(sc.strategy);
            let res = run_episode(&sc, &ladders, &tr, strategy)?;
            write_run(&res, &out)?;
            let m = &res.metrics;
            println!(
                "{strategy}: T={:.3} s idle={:.3}% v_mean={:.4} m/s d_min={} stops={} replans={}",
                m.completion_time,
                m.idle_pct,
                m.v_mean,
                m.d_min.map_or("-".into(), |d| format!("{d:.4} m")),
                m.stops,
                m.replans
            );
        }
        Command::Compare { scenario, traces, strategies, ladder, out } => {
            let sc = read_scenario(&scenario)?;
            let ladders = match ladder {
                Some(p) => load_ladders(&p)?,
                None => optimize_scenario(&sc, 0)?,
            };
            let mut files: Vec<PathBuf> = fs::read_dir(&traces)
                .with_context(|| format!("listing {}", traces.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            files.retain(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "jsonl")));
            files.sort();
            if files.is_empty() {
                bail!("no .csv or .jsonl traces in {}", traces.display());
            }
            let named = files
                .iter()
                .map(|p| {
                    let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                    Ok((name, read_trace(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let res = compare(&sc, &ladders, &named, &strategies)?;
            ensure_parent(&out)?;
            write_compare_csv(&res, fs::File::create(&out)?)?;
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
            write_runs_csv(&res, fs::File::create(out.with_file_name(format!("{stem}_runs.csv")))?)?;
            for r in &res.rows {
                println!(
                    "{:<15} T={:.2}±{:.2} idle={:.3}% d_min={:.3}",
                    r.strategy.as_str(),
                    r.t_mean,
                    r.t_std,
                    r.idle_mean,
                    r.d_min_min
                );
            }
        }
        Command::GenTrace { profile, duration, seed, scenario, ladder, out } => {
            let mut cfg = GenConfig::new(profile, duration, seed);
            if let Some(p) = scenario {
                let sc = read_scenario(&p)?;
                cfg.targets = path_targets(&sc.cycles, 0.05);
                cfg.base = sc.robot_base;
            }
            if let Some(p) = ladder {
                cfg.targets.extend(ladder_targets(&load_ladders(&p)?, 0.05)?);
            }
            let tr = generate_trace(&cfg)?;
            ensure_parent(&out)?;
            tr.write_csv(fs::File::create(&out)?)?;
            println!("wrote {} ({} rows)", out.display(), tr.rows().len());
        }
        Command::PlotData { run, out } => {
            plot_data(&run, &out)?;
            println!("wrote plot data to {}", out.display());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROMIND_LOG", "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
