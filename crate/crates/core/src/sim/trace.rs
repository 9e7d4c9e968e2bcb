//! Recorded or synthetic human-state traces (CSV or JSON lines).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::human::GazeAngles;

pub const TRACE_HEADER: [&str; 16] = [
    "t",
    "human_x",
    "human_y",
    "human_z",
    "theta_task",
    "phi_task",
    "r_task",
    "theta_instr",
    "phi_instr",
    "r_instr",
    "theta_cobot",
    "phi_cobot",
    "r_cobot",
    "rr",
    "rho",
    "instr_update",
];

/// Column layout shared by the CSV and JSONL forms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct FlatRow {
    t: f64,
    human_x: Option<f64>,
    human_y: Option<f64>,
    human_z: Option<f64>,
    theta_task: Option<f64>,
    phi_task: Option<f64>,
    r_task: Option<f64>,
    theta_instr: Option<f64>,
    phi_instr: Option<f64>,
    r_instr: Option<f64>,
    theta_cobot: Option<f64>,
    phi_cobot: Option<f64>,
    r_cobot: Option<f64>,
    rr: Option<f64>,
    rho: Option<f64>,
    #[serde(default)]
    instr_update: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub human: Option<[f64; 3]>,
    pub gaze: [Option<GazeAngles>; 3],
    pub rr: Option<f64>,
    pub rho: Option<f64>,
    pub instr_update: bool,
}

fn gaze(theta: Option<f64>, phi: Option<f64>, r: Option<f64>) -> Option<GazeAngles> {
    Some(GazeAngles { theta: theta?, phi: phi?, r: r? })
}

impl From<FlatRow> for TraceRow {
    fn from(f: FlatRow) -> Self {
        let human = match (f.human_x, f.human_y, f.human_z) {
            (Some(x), Some(y), z) => Some([x, y, z.unwrap_or(0.0)]),
            _ => None,
        };
        TraceRow {
            t: f.t,
            human,
            gaze: [
                gaze(f.theta_task, f.phi_task, f.r_task),
                gaze(f.theta_instr, f.phi_instr, f.r_instr),
                gaze(f.theta_cobot, f.phi_cobot, f.r_cobot),
            ],
            rr: f.rr,
            rho: f.rho,
            instr_update: f.instr_update.unwrap_or(0) != 0,
        }
    }
}

/// Time-ordered trace rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(rows: Vec<TraceRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Trace("a trace needs at least two rows".into()));
        }
        if let Some(i) = rows.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Trace(format!("timestamps not increasing at row {}", i + 2)));
        }
        if rows.iter().any(|r| !r.t.is_finite()) {
            return Err(Error::Trace("non-finite timestamp".into()));
        }
        Ok(Trace { rows })
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn start(&self) -> f64 {
        self.rows[0].t
    }

    /// Span covered before the trace loops: last minus first timestamp plus
    /// one typical row spacing.
    pub fn period(&self) -> f64 {
        let n = self.rows.len();
        let step = (self.rows[n - 1].t - self.rows[0].t) / (n - 1) as f64;
        self.rows[n - 1].t - self.rows[0].t + step
    }

    /// Parses CSV (with header) or, if the first non-blank character is `{`,
    /// JSON lines.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::parse_jsonl(text)
        } else {
            Self::parse_csv(text.as_bytes())
        }
    }

    pub fn parse_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        for h in ["t", "human_x", "human_y"] {
            if !headers.iter().any(|c| c == h) {
                return Err(Error::Trace(format!("missing column '{h}'")));
            }
        }
        let rows = rdr
            .deserialize::<FlatRow>()
            .map(|r| r.map(TraceRow::from).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Trace::new(rows)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let rows = text
            .as_bytes()
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
            .map(|(i, l)| {
                let l = l?;
                serde_json::from_str::<FlatRow>(&l)
                    .map(TraceRow::from)
                    .map_err(|e| Error::Trace(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Trace::new(rows)
    }

    /// Writes the CSV form with fixed precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(TRACE_HEADER)?;
        let f = |v: Option<f64>, p: usize| v.map_or_else(String::new, |x| format!("{x:.p$}"));
        for r in &self.rows {
            let mut rec = vec![format!("{:.3}", r.t)];
            for i in 0..3 {
                rec.push(f(r.human.map(|h| h[i]), 4));
            }
            for g in &r.gaze {
                rec.push(f(g.map(|g| g.theta), 5));
                rec.push(f(g.map(|g| g.phi), 5));
                rec.push(f(g.map(|g| g.r), 4));
            }
            rec.push(f(r.rr, 4));
            rec.push(f(r.rho, 3));
            rec.push(if r.instr_update { "1".into() } else { "0".into() });
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn cursor(&self) -> TraceCursor<'_> {
        TraceCursor { trace: self, next: 0, current: 0, offset: -self.start() }
    }
}

/// What the human looked like at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub parts: Vec<[f64; 3]>,
    pub gaze: [Option<GazeAngles>; 3],
    /// Beat intervals that ended since the previous sample.
    pub rr: Vec<f64>,
    pub rho: Option<f64>,
    pub instr_update: bool,
}

/// Zero-order-hold reader that loops the trace when it runs out.
#[derive(Debug, Clone)]
pub struct TraceCursor<'a> {
    trace: &'a Trace,
    next: usize,
    current: usize,
    offset: f64,
}

impl TraceCursor<'_> {
    /// Consumes every row up to time `t` (times measured from the first row).
    pub fn advance_to(&mut self, t: f64) -> TraceSample {
        let rows = &self.trace.rows;
        let mut rr = Vec::new();
        let mut instr_update = false;
        while rows[self.next].t + self.offset <= t + 1e-9 {
            let row = &rows[self.next];
            rr.extend(row.rr);
            instr_update |= row.instr_update;
            self.current = self.next;
            self.next += 1;
            if self.next == rows.len() {
                self.next = 0;
                self.offset += self.trace.period();
            }
        }
        let row = &rows[self.current];
        TraceSample {
            parts: row.human.into_iter().collect(),
            gaze: row.gaze,
            rr,
            rho: row.rho,
            instr_update,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "t, human_x, human_y, human_z, theta_task, phi_task, r_task, theta_instr, phi_instr, r_instr, theta_cobot, phi_cobot, r_cobot, rr, rho, instr_update
0.0, 1.0, 0.5, 1.1, 0.01, 0.0, 0.6, 0.7, 0.1, 0.9, -0.5, -0.2, 0.8, , 0.2, 0
0.5, 1.0, 0.4, 1.1, , , , 0.7, 0.1, 0.9, -0.5, -0.2, 0.8, 0.85, 0.2, 1
1.0, 0.9, 0.4, 1.1, 0.01, 0.0, 0.6, 0.7, 0.1, 0.9, -0.5, -0.2, 0.8, 0.83, , 0
";

    #[test]
    fn parses_sparse_csv() {
        let tr = Trace::parse(CSV).unwrap();
        assert_eq!(tr.rows().len(), 3);
        let r = &tr.rows()[1];
        assert!(r.gaze[0].is_none() && r.gaze[1].is_some());
        assert_eq!(r.rr, Some(0.85));
        assert!(r.instr_update);
        assert_eq!(tr.rows()[2].rho, None);
        assert!((tr.period() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn jsonl_matches_csv() {
        let tr = Trace::parse(CSV).unwrap();
        let jsonl: String = [
            r#"{"t":0.0,"human_x":1.0,"human_y":0.5,"human_z":1.1,"theta_task":0.01,"phi_task":0.0,"r_task":0.6,"theta_instr":0.7,"phi_instr":0.1,"r_instr":0.9,"theta_cobot":-0.5,"phi_cobot":-0.2,"r_cobot":0.8,"rho":0.2,"instr_update":0}"#,
            r#"{"t":0.5,"human_x":1.0,"human_y":0.4,"human_z":1.1,"theta_instr":0.7,"phi_instr":0.1,"r_instr":0.9,"theta_cobot":-0.5,"phi_cobot":-0.2,"r_cobot":0.8,"rr":0.85,"rho":0.2,"instr_update":1}"#,
            r#"{"t":1.0,"human_x":0.9,"human_y":0.4,"human_z":1.1,"theta_task":0.01,"phi_task":0.0,"r_task":0.6,"theta_instr":0.7,"phi_instr":0.1,"r_instr":0.9,"theta_cobot":-0.5,"phi_cobot":-0.2,"r_cobot":0.8,"rr":0.83}"#,
        ]
        .join("\n");
        assert_eq!(Trace::parse(&jsonl).unwrap(), tr);
    }

    #[test]
    fn csv_round_trip() {
        let tr = Trace::parse(CSV).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = Trace::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn rejects_bad_traces() {
        assert!(Trace::parse("t,human_x,human_y\n0,1,1\n").is_err());
        assert!(Trace::parse("t,human_x,human_y\n0,1,1\n0,1,1\n").is_err());
        assert!(Trace::parse("t,x\n0,1\n1,1\n").is_err());
    }

    #[test]
    fn cursor_holds_and_loops() {
        let tr = Trace::parse(CSV).unwrap();
        let mut c = tr.cursor();
        let s = c.advance_to(0.0);
        assert!(s.rr.is_empty());
        let s = c.advance_to(0.7);
        assert_eq!(s.rr, vec![0.85]);
        assert!(s.instr_update);
        assert_eq!(s.parts, vec![[1.0, 0.4, 1.1]]);
        let s = c.advance_to(1.2);
        assert_eq!(s.rr, vec![0.83]);
        // Period 1.5: t = 2.0 replays row 2 (t = 0.5).
        let s = c.advance_to(2.0);
        assert_eq!(s.rr, vec![0.85]);
        assert_eq!(s.parts, vec![[1.0, 0.4, 1.1]]);
    }
}
