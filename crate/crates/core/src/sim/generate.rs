//! Synthetic human traces: a worker standing outside the shared workspace,
//! occasionally reaching toward points on the robot path, with scheduled
//! gaze, heartbeat and camera stress signals.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::io::LadderFile;
use super::trace::{Trace, TraceRow};
use crate::error::{Error, Result};
use crate::human::GazeAngles;
use crate::planner::{sample, solve_trajectory, BoundaryConditions, WaypointList};
use crate::pose::{planar_distance, Pose6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Stays outside the workspace, relaxed.
    Calm,
    /// Frequent reaches toward the path, mostly watching the robot.
    Intrusive,
    /// Fewer reaches, recurring stress episodes in RR and camera score.
    Stressed,
    /// Fast, distracted lunges onto the path.
    Lunge,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "calm" => Ok(Profile::Calm),
            "intrusive" => Ok(Profile::Intrusive),
            "stressed" => Ok(Profile::Stressed),
            "lunge" => Ok(Profile::Lunge),
            other => Err(Error::Config(format!("unknown trace profile '{other}'"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Profile::Calm => "calm",
            Profile::Intrusive => "intrusive",
            Profile::Stressed => "stressed",
            Profile::Lunge => "lunge",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub profile: Profile,
    pub duration: f64,
    pub seed: u64,
    /// Row rate (Hz).
    pub rate: f64,
    /// Horizontal points on or near the robot path that reaches aim at.
    pub targets: Vec<[f64; 2]>,
    pub base: [f64; 2],
    /// Overrides the profile's reach depth range (m from the target point).
    pub depth: Option<(f64, f64)>,
}

impl GenConfig {
    pub fn new(profile: Profile, duration: f64, seed: u64) -> Self {
        GenConfig {
            profile,
            duration,
            seed,
            rate: 50.0,
            targets: default_targets(),
            base: [0.0, 0.0],
            depth: None,
        }
    }
}

/// Arc of points 0.55 m from the base, spanning ±50°.
pub fn default_targets() -> Vec<[f64; 2]> {
    (-10..=10)
        .map(|i| {
            let a = i as f64 * 5.0 * PI / 180.0;
            [0.55 * a.cos(), 0.55 * a.sin()]
        })
        .collect()
}

/// Points every `spacing` metres along the straight segments joining the
/// waypoints of every cycle.
pub fn path_targets(cycles: &[Vec<Pose6>], spacing: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for c in cycles {
        for w in c.windows(2) {
            let (a, b) = (w[0].xy(), w[1].xy());
            let n = (planar_distance(a, b) / spacing).ceil().max(1.0) as usize;
            for k in 0..n {
                let s = k as f64 / n as f64;
                out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        if let Some(l) = c.last() {
            out.push(l.xy());
        }
    }
    out
}

/// Horizontal points every `dt` seconds along the curve of every ladder
/// entry, so reach depths hold against whichever timing is dispatched.
pub fn ladder_targets(file: &LadderFile, dt: f64) -> Result<Vec<[f64; 2]>> {
    let bc = BoundaryConditions::zero();
    let mut out = Vec::new();
    for c in &file.cycles {
        let wps = WaypointList::new(c.waypoints.clone())?;
        for e in c.ladder.entries() {
            let bundle = solve_trajectory(&wps, &e.h, &bc)?;
            out.extend(sample(&bundle, dt)?.iter().map(|s| s.pose.xy()));
        }
    }
    Ok(out)
}

struct Params {
    gap: (f64, f64),
    depth: (f64, f64),
    speed: f64,
    dwell: (f64, f64),
    watch_robot: f64,
    rr_rest: f64,
    stress_episodes: bool,
    glance_gap: (f64, f64),
}

fn params(p: Profile) -> Params {
    match p {
        Profile::Calm => Params {
            gap: (f64::INFINITY, f64::INFINITY),
            depth: (0.6, 0.8),
            speed: 0.5,
            dwell: (2.0, 3.0),
            watch_robot: 0.5,
            rr_rest: 0.88,
            stress_episodes: false,
            glance_gap: (15.0, 25.0),
        },
        Profile::Intrusive => Params {
            gap: (8.0, 16.0),
            depth: (0.27, 0.40),
            speed: 0.6,
            dwell: (2.0, 4.0),
            watch_robot: 0.8,
            rr_rest: 0.86,
            stress_episodes: false,
            glance_gap: (8.0, 15.0),
        },
        Profile::Stressed => Params {
            gap: (14.0, 26.0),
            depth: (0.30, 0.45),
            speed: 0.6,
            dwell: (2.0, 4.0),
            watch_robot: 0.6,
            rr_rest: 0.86,
            stress_episodes: true,
            glance_gap: (6.0, 12.0),
        },
        Profile::Lunge => Params {
            gap: (6.0, 12.0),
            depth: (0.0, 0.10),
            speed: 1.6,
            dwell: (1.0, 2.0),
            watch_robot: 0.0,
            rr_rest: 0.86,
            stress_episodes: false,
            glance_gap: (10.0, 20.0),
        },
    }
}

#[derive(Debug, Clone, Copy)]
struct Reach {
    start: f64,
    travel: f64,
    dwell: f64,
    point: [f64; 2],
    watch_robot: bool,
}

impl Reach {
    fn end(&self) -> f64 {
        self.start + 2.0 * self.travel + self.dwell
    }

    /// Progress toward the reach point in `[0, 1]`, or `None` outside.
    fn progress(&self, t: f64) -> Option<f64> {
        let s = t - self.start;
        if s < 0.0 || t >= self.end() {
            return None;
        }
        let smooth = |x: f64| x * x * (3.0 - 2.0 * x);
        Some(if s < self.travel {
            smooth(s / self.travel)
        } else if s < self.travel + self.dwell {
            1.0
        } else {
            smooth(1.0 - (s - self.travel - self.dwell) / self.travel)
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Window {
    start: f64,
    end: f64,
}

impl Window {
    fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

fn schedule(rng: &mut ChaCha8Rng, duration: f64, first: f64, gap: (f64, f64), len: (f64, f64)) -> Vec<Window> {
    let mut out = Vec::new();
    if !gap.0.is_finite() {
        return out;
    }
    let mut t = first;
    while t < duration {
        let l = rng.gen_range(len.0..=len.1);
        out.push(Window { start: t, end: t + l });
        t += l + rng.gen_range(gap.0..=gap.1);
    }
    out
}

fn clearance(p: [f64; 2], targets: &[[f64; 2]]) -> f64 {
    targets.iter().map(|t| planar_distance(p, *t)).fold(f64::INFINITY, f64::min)
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    if n > 1e-12 {
        [v[0] / n, v[1] / n]
    } else {
        [1.0, 0.0]
    }
}

// Head-frame directions (azimuth, elevation) of task, instructions and robot
// as seen while looking straight ahead.
const ROI_DIRECTIONS: [[f64; 2]; 3] = [[0.0, -0.45], [0.7, 0.05], [-0.5, -0.2]];

pub fn generate_trace(cfg: &GenConfig) -> Result<Trace> {
    if !(cfg.duration > 0.0 && cfg.rate > 0.0) {
        return Err(Error::Config("duration and rate must be positive".into()));
    }
    if cfg.targets.is_empty() {
        return Err(Error::Config("at least one target point is required".into()));
    }
    let p = params(cfg.profile);
    let depth = cfg.depth.unwrap_or(p.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = |s: f64| Normal::new(0.0, s).expect("positive spread");

    let n = cfg.targets.len() as f64;
    let centroid = cfg
        .targets
        .iter()
        .fold([0.0, 0.0], |a, t| [a[0] + t[0] / n, a[1] + t[1] / n]);
    let out_dir = unit([centroid[0] - cfg.base[0], centroid[1] - cfg.base[1]]);
    let far = cfg
        .targets
        .iter()
        .map(|t| (t[0] - cfg.base[0]) * out_dir[0] + (t[1] - cfg.base[1]) * out_dir[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let home = [cfg.base[0] + (far + 0.9) * out_dir[0], cfg.base[1] + (far + 0.9) * out_dir[1]];

    let mut reaches = Vec::new();
    if p.gap.0.is_finite() {
        let mut t = rng.gen_range(3.0..8.0);
        while t < cfg.duration {
            let target = cfg.targets[rng.gen_range(0..cfg.targets.len())];
            let u = unit([target[0] - cfg.base[0], target[1] - cfg.base[1]]);
            let d = rng.gen_range(depth.0..=depth.1);
            let mut point = [target[0] + d * u[0], target[1] + d * u[1]];
            // Keep the reach depth from every target, not only the chosen one.
            while clearance(point, &cfg.targets) < d {
                point = [point[0] + 0.005 * u[0], point[1] + 0.005 * u[1]];
            }
            let travel = (planar_distance(home, point) / p.speed).max(0.3);
            let r = Reach {
                start: t,
                travel,
                dwell: rng.gen_range(p.dwell.0..=p.dwell.1),
                point,
                watch_robot: rng.gen_bool(p.watch_robot),
            };
            t = r.end() + rng.gen_range(p.gap.0..=p.gap.1);
            reaches.push(r);
        }
    }

    let updates = schedule(&mut rng, cfg.duration, 20.0, (30.0, 45.0), (2.0, 4.0));
    let instr_glances = schedule(&mut rng, cfg.duration, 12.0, (15.0, 30.0), (1.0, 2.0));
    let robot_glances = schedule(&mut rng, cfg.duration, 5.0, p.glance_gap, (0.3, 0.8));
    let stress = if p.stress_episodes {
        schedule(&mut rng, cfg.duration, 75.0, (45.0, 70.0), (35.0, 50.0))
    } else {
        Vec::new()
    };
    let stress_level = |t: f64| -> f64 {
        stress
            .iter()
            .map(|w| {
                let ramp = 5.0;
                if !w.contains(t) {
                    0.0
                } else {
                    ((t - w.start) / ramp).min((w.end - t) / ramp).min(1.0)
                }
            })
            .fold(0.0, f64::max)
    };

    let dt = 1.0 / cfg.rate;
    let rows_n = (cfg.duration * cfg.rate).round() as usize;
    let mut rows = Vec::with_capacity(rows_n);
    let mut next_beat = rng.gen_range(0.2..0.9);
    let mut dropout_left = 0usize;
    let mut sway = [0.0, 0.0];
    let gaze_noise = noise(0.012);
    let beat_noise = noise(0.012);
    let sway_noise = noise(0.002);
    let rho_noise = noise(0.04);
    let r_roi = |human: [f64; 2]| -> [f64; 3] {
        [0.6, 0.9, planar_distance(human, centroid).clamp(0.3, 2.0)]
    };
    for k in 0..rows_n {
        let t = k as f64 * dt;
        let reach = reaches.iter().find(|r| r.progress(t).is_some());
        sway = [
            0.98 * sway[0] + sway_noise.sample(&mut rng),
            0.98 * sway[1] + sway_noise.sample(&mut rng),
        ];
        let pos = match reach {
            Some(r) => {
                let s = r.progress(t).expect("found above");
                [home[0] + s * (r.point[0] - home[0]), home[1] + s * (r.point[1] - home[1])]
            }
            None => [home[0] + sway[0], home[1] + sway[1]],
        };

        let focus = if let Some(r) = reach {
            if r.watch_robot {
                2
            } else {
                0
            }
        } else if updates.iter().any(|w| w.contains(t)) {
            1
        } else if robot_glances.iter().any(|w| w.contains(t)) {
            2
        } else if instr_glances.iter().any(|w| w.contains(t)) {
            1
        } else {
            0
        };
        if dropout_left == 0 && rng.gen_bool(0.002) {
            dropout_left = 10;
        }
        let r = r_roi(pos);
        let gaze = if dropout_left > 0 {
            dropout_left -= 1;
            [None; 3]
        } else {
            let look = ROI_DIRECTIONS[focus];
            let jitter = [gaze_noise.sample(&mut rng), gaze_noise.sample(&mut rng)];
            let mut g = [None; 3];
            for (i, slot) in g.iter_mut().enumerate() {
                *slot = Some(GazeAngles {
                    theta: ROI_DIRECTIONS[i][0] - look[0] + jitter[0],
                    phi: ROI_DIRECTIONS[i][1] - look[1] + jitter[1],
                    r: r[i],
                });
            }
            g
        };

        let level = stress_level(t);
        let mut rr = None;
        if t >= next_beat {
            let reach_dip = if reach.is_some() { 0.015 } else { 0.0 };
            let mean = p.rr_rest - 0.12 * level - reach_dip;
            let v = (mean + beat_noise.sample(&mut rng)).clamp(0.45, 1.4);
            rr = Some(v);
            next_beat += v;
        }
        let rho = if level > 0.5 {
            0.65 + rho_noise.sample(&mut rng)
        } else {
            0.15 + rho_noise.sample(&mut rng)
        };
        rows.push(TraceRow {
            t,
            human: Some([pos[0], pos[1], 1.1]),
            gaze,
            rr,
            rho: Some(rho.clamp(0.0, 1.0)),
            instr_update: updates.iter().any(|w| (t - w.start).abs() < dt / 2.0),
        });
    }
    // Round through the CSV precision so generated and re-read traces agree.
    let mut buf = Vec::new();
    Trace::new(rows)?.write_csv(&mut buf)?;
    Trace::parse_csv(buf.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::human::{attention_level, Roi, RoiGeometry};

    #[test]
    fn profile_names() {
        for p in ["calm", "intrusive", "stressed", "lunge"] {
            assert_eq!(p.parse::<Profile>().unwrap().to_string(), p);
        }
        assert!("angry".parse::<Profile>().is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_trace(&GenConfig::new(Profile::Intrusive, 60.0, 3)).unwrap();
        let b = generate_trace(&GenConfig::new(Profile::Intrusive, 60.0, 3)).unwrap();
        let c = generate_trace(&GenConfig::new(Profile::Intrusive, 60.0, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.rows().len(), 3000);
    }

    #[test]
    fn intrusions_respect_depth() {
        let cfg = GenConfig::new(Profile::Intrusive, 300.0, 11);
        let tr = generate_trace(&cfg).unwrap();
        let min = tr
            .rows()
            .iter()
            .filter_map(|r| r.human)
            .map(|h| {
                cfg.targets
                    .iter()
                    .map(|t| planar_distance([h[0], h[1]], *t))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.27 - 1e-3 && min < 0.45, "closest approach {min}");
    }

    #[test]
    fn calm_stays_out() {
        let cfg = GenConfig::new(Profile::Calm, 120.0, 1);
        let tr = generate_trace(&cfg).unwrap();
        for r in tr.rows() {
            let h = r.human.unwrap();
            for t in &cfg.targets {
                assert!(planar_distance([h[0], h[1]], *t) > 0.8);
            }
        }
    }

    #[test]
    fn rr_means_and_stress() {
        let calm = generate_trace(&GenConfig::new(Profile::Calm, 300.0, 2)).unwrap();
        let rr: Vec<f64> = calm.rows().iter().filter_map(|r| r.rr).collect();
        let mean = rr.iter().sum::<f64>() / rr.len() as f64;
        assert!((mean - 0.88).abs() < 0.01);
        assert!((rr.len() as f64 - 300.0 / 0.88).abs() < 15.0);
        let st = generate_trace(&GenConfig::new(Profile::Stressed, 300.0, 2)).unwrap();
        assert!(st.rows().iter().any(|r| r.rho.unwrap() > 0.5));
        assert!(st.rows().iter().filter_map(|r| r.rr).any(|v| v < 0.76));
    }

    #[test]
    fn watched_reaches_give_full_attention() {
        let tr = generate_trace(&GenConfig::new(Profile::Intrusive, 120.0, 5)).unwrap();
        let roi = RoiGeometry::defaults()[Roi::Cobot.index()];
        let looks = tr
            .rows()
            .iter()
            .filter_map(|r| r.gaze[2])
            .filter(|g| attention_level(g, &roi) > 0.9)
            .count();
        assert!(looks > 100);
    }
}
