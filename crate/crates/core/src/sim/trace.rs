//! Line-oriented trace files.
//!
//! ```text
//! # korrontea trace v1
//! SLICE 1 ts=0 TMAX=1 F0:1{0} F1:1{1}
//! SLICE 2 ts=10 TMAX=10 F0:1{10} F1:1{10} f0:0{} early:f0{12}
//! SLICE 3 ts=12 F0:0{} F1:0{} f0:2{12,15} late:f0{15@31}
//! LATE f0 18@40
//! ```
//!
//! Each `SLICE` line is one composed slice: its index, output stamp, the
//! `TMAX` bound when a hard-anchored window produced it, and for every input
//! flow `name:count{stamps}` of the source slices used. Optional `early:`
//! tokens list buffered soft slices left for a later slice, `late:` tokens
//! list slices that arrived after their window (`stamp@arrival`). `LATE`
//! lines are slices that fit no window at all. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;

use crate::fusion::{EmissionRecord, LateSlice};
use crate::model::{FlowId, Tick};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowUse {
    pub flow: FlowId,
    pub count: usize,
    pub stamps: Vec<Tick>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub index: usize,
    pub output_ts: Tick,
    pub t_max: Option<Tick>,
    pub used: Vec<FlowUse>,
    pub too_early: Vec<(FlowId, Vec<Tick>)>,
    pub late: Vec<LateSlice>,
}

impl From<&EmissionRecord> for TraceRecord {
    fn from(r: &EmissionRecord) -> Self {
        TraceRecord {
            index: r.index,
            output_ts: r.output_ts,
            t_max: r.t_max,
            used: r
                .used
                .iter()
                .map(|(flow, stamps)| FlowUse {
                    flow: flow.clone(),
                    count: stamps.len(),
                    stamps: stamps.clone(),
                })
                .collect(),
            too_early: r.too_early.clone(),
            late: r.late.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub side_channel: Vec<LateSlice>,
}

fn join(stamps: &[Tick]) -> String {
    stamps
        .iter()
        .map(Tick::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn emit_record(r: &TraceRecord) -> String {
    let mut line = format!("SLICE {} ts={}", r.index, r.output_ts);
    if let Some(t) = r.t_max {
        let _ = write!(line, " TMAX={t}");
    }
    for u in &r.used {
        let _ = write!(line, " {}:{}{{{}}}", u.flow, u.count, join(&u.stamps));
    }
    for (flow, stamps) in &r.too_early {
        let _ = write!(line, " early:{flow}{{{}}}", join(stamps));
    }
    // group late incidents per flow, keeping first-appearance order
    let mut late: Vec<(&FlowId, Vec<String>)> = Vec::new();
    for l in &r.late {
        let item = format!("{}@{}", l.stamp, l.arrival);
        match late.iter_mut().find(|(f, _)| *f == &l.flow) {
            Some((_, v)) => v.push(item),
            None => late.push((&l.flow, vec![item])),
        }
    }
    for (flow, items) in late {
        let _ = write!(line, " late:{flow}{{{}}}", items.join(","));
    }
    line
}

pub fn emit_trace(trace: &Trace) -> String {
    let mut out = String::from("# korrontea trace v1\n");
    for r in &trace.records {
        out.push_str(&emit_record(r));
        out.push('\n');
    }
    for l in &trace.side_channel {
        let _ = writeln!(out, "LATE {} {}@{}", l.flow, l.stamp, l.arrival);
    }
    out
}

struct LineParser {
    line: usize,
}

impl LineParser {
    fn err(&self, message: impl Into<String>) -> SimError {
        SimError::TraceSyntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn int<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T, SimError> {
        s.parse()
            .map_err(|_| self.err(format!("invalid {what} `{s}`")))
    }

    fn flow(&self, s: &str) -> Result<FlowId, SimError> {
        FlowId::new(s).map_err(|_| self.err("empty flow name"))
    }

    fn keyed<'a>(&self, tok: &'a str, key: &str) -> Result<&'a str, SimError> {
        tok.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.err(format!("expected `{key}=`, found `{tok}`")))
    }

    /// Splits `name{a,b}` into `name` and the comma-separated items.
    fn braced<'a>(&self, tok: &'a str) -> Result<(&'a str, Vec<&'a str>), SimError> {
        let open = tok
            .find('{')
            .ok_or_else(|| self.err(format!("missing `{{` in `{tok}`")))?;
        let inner = tok[open + 1..]
            .strip_suffix('}')
            .ok_or_else(|| self.err(format!("missing `}}` in `{tok}`")))?;
        let items = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').collect()
        };
        Ok((&tok[..open], items))
    }

    fn stamps(&self, items: &[&str]) -> Result<Vec<Tick>, SimError> {
        items.iter().map(|s| self.int(s, "stamp")).collect()
    }

    fn late_item(&self, flow: &FlowId, item: &str) -> Result<LateSlice, SimError> {
        let (s, a) = item
            .split_once('@')
            .ok_or_else(|| self.err(format!("expected stamp@arrival, found `{item}`")))?;
        Ok(LateSlice {
            flow: flow.clone(),
            stamp: self.int(s, "stamp")?,
            arrival: self.int(a, "arrival")?,
        })
    }

    fn record(&self, tokens: &[&str]) -> Result<TraceRecord, SimError> {
        let mut it = tokens.iter().copied().peekable();
        let index = self.int(
            it.next().ok_or_else(|| self.err("missing slice index"))?,
            "index",
        )?;
        let ts = it.next().ok_or_else(|| self.err("missing ts"))?;
        let output_ts = self.int(self.keyed(ts, "ts")?, "ts")?;
        let t_max = match it.peek() {
            Some(tok) if tok.starts_with("TMAX=") => {
                let v = self.int(self.keyed(tok, "TMAX")?, "TMAX")?;
                it.next();
                Some(v)
            }
            _ => None,
        };
        let mut rec = TraceRecord {
            index,
            output_ts,
            t_max,
            used: Vec::new(),
            too_early: Vec::new(),
            late: Vec::new(),
        };
        for tok in it {
            let (head, items) = self.braced(tok)?;
            let (name, count) = head
                .rsplit_once(':')
                .ok_or_else(|| self.err(format!("expected `flow:count{{..}}`, found `{tok}`")))?;
            match name {
                "early" if !count.chars().all(|c| c.is_ascii_digit()) => {
                    rec.too_early
                        .push((self.flow(count)?, self.stamps(&items)?));
                }
                "late" if !count.chars().all(|c| c.is_ascii_digit()) => {
                    let flow = self.flow(count)?;
                    for item in items {
                        rec.late.push(self.late_item(&flow, item)?);
                    }
                }
                _ => {
                    if !rec.too_early.is_empty() || !rec.late.is_empty() {
                        return Err(self.err("flow usage after early/late tokens"));
                    }
                    rec.used.push(FlowUse {
                        flow: self.flow(name)?,
                        count: self.int(count, "count")?,
                        stamps: self.stamps(&items)?,
                    });
                }
            }
        }
        Ok(rec)
    }
}

pub fn parse_trace(text: &str) -> Result<Trace, SimError> {
    let mut trace = Trace::default();
    for (i, raw) in text.lines().enumerate() {
        let p = LineParser { line: i + 1 };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "SLICE" => {
                if !trace.side_channel.is_empty() {
                    return Err(p.err("SLICE after LATE lines"));
                }
                trace.records.push(p.record(&tokens[1..])?);
            }
            "LATE" => {
                let [_, flow, item] = tokens[..] else {
                    return Err(p.err("expected `LATE flow stamp@arrival`"));
                };
                let flow = p.flow(flow)?;
                trace.side_channel.push(p.late_item(&flow, item)?);
            }
            other => return Err(p.err(format!("unknown record `{other}`"))),
        }
    }
    Ok(trace)
}
