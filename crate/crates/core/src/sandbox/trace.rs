//! Execution traces: the dynamic-analysis signal.
//!
//! A trace is the ordered list of stubbed browser-API accesses and calls
//! observed while a script runs, plus a name → count tally and the
//! termination status. Traces serialize to versioned JSON.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Bump when the serialized layout changes.
pub const TRACE_FORMAT_VERSION: u32 = 1;

/// Arguments in trace events are truncated to this many characters.
pub const MAX_ARG_CHARS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Get,
    Call,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Get => write!(f, "get"),
            EventKind::Call => write!(f, "call"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub name: String,
    pub kind: EventKind,
    pub args: Vec<String>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {:?})", self.name, self.kind, self.args)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    StepLimit,
    RuntimeError { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub trace_format_version: u32,
    pub events: Vec<TraceEvent>,
    /// Tally of `events` by qualified name. Maintained alongside the
    /// event list; `check_freq_consistency` verifies the invariant.
    pub freq: BTreeMap<String, u64>,
    pub terminated: Termination,
}

impl ExecutionTrace {
    pub fn new(events: Vec<TraceEvent>, terminated: Termination) -> Self {
        let mut freq = BTreeMap::new();
        for e in &events {
            *freq.entry(e.name.clone()).or_insert(0) += 1;
        }
        Self {
            trace_format_version: TRACE_FORMAT_VERSION,
            events,
            freq,
            terminated,
        }
    }

    pub fn completed(&self) -> bool {
        self.terminated == Termination::Completed
    }

    /// Invariant: `freq` is exactly the tally of `events` by name.
    pub fn check_freq_consistency(&self) -> bool {
        let mut tally: BTreeMap<&str, u64> = BTreeMap::new();
        for e in &self.events {
            *tally.entry(e.name.as_str()).or_insert(0) += 1;
        }
        tally.len() == self.freq.len()
            && tally
                .iter()
                .all(|(name, n)| self.freq.get(*name) == Some(n))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Where two traces first diverge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDivergence {
    /// Index into the event lists, or the common length when one trace is
    /// a prefix of the other or the termination statuses differ.
    pub index: usize,
    pub left: Option<TraceEvent>,
    pub right: Option<TraceEvent>,
    pub termination_mismatch: Option<(Termination, Termination)>,
}

impl fmt::Display for TraceDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((a, b)) = &self.termination_mismatch {
            return write!(f, "termination differs: {a:?} vs {b:?}");
        }
        write!(f, "event {} differs: ", self.index)?;
        match &self.left {
            Some(e) => write!(f, "{e}")?,
            None => write!(f, "<absent>")?,
        }
        write!(f, " vs ")?;
        match &self.right {
            Some(e) => write!(f, "{e}"),
            None => write!(f, "<absent>"),
        }
    }
}

/// True iff the normalized event lists and termination statuses match.
pub fn trace_equal(a: &ExecutionTrace, b: &ExecutionTrace) -> bool {
    trace_diff(a, b).is_none()
}

/// First divergence between two traces, or `None` when equal.
pub fn trace_diff(a: &ExecutionTrace, b: &ExecutionTrace) -> Option<TraceDivergence> {
    for (i, (ea, eb)) in a.events.iter().zip(b.events.iter()).enumerate() {
        if ea != eb {
            return Some(TraceDivergence {
                index: i,
                left: Some(ea.clone()),
                right: Some(eb.clone()),
                termination_mismatch: None,
            });
        }
    }
    if a.events.len() != b.events.len() {
        let i = a.events.len().min(b.events.len());
        return Some(TraceDivergence {
            index: i,
            left: a.events.get(i).cloned(),
            right: b.events.get(i).cloned(),
            termination_mismatch: None,
        });
    }
    if a.terminated != b.terminated {
        return Some(TraceDivergence {
            index: a.events.len(),
            left: None,
            right: None,
            termination_mismatch: Some((a.terminated.clone(), b.terminated.clone())),
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(name: &str, kind: EventKind, args: &[&str]) -> TraceEvent {
        TraceEvent {
            name: name.into(),
            kind,
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn reflexive_equality() {
        let t = ExecutionTrace::new(
            vec![ev("console.log", EventKind::Call, &["hi"])],
            Termination::Completed,
        );
        assert!(trace_equal(&t, &t));
        assert!(t.check_freq_consistency());
    }

    #[test]
    fn divergence_reports_index() {
        let a = ExecutionTrace::new(
            vec![
                ev("console.log", EventKind::Call, &["x"]),
                ev("navigator.userAgent", EventKind::Get, &[]),
            ],
            Termination::Completed,
        );
        let b = ExecutionTrace::new(
            vec![
                ev("console.log", EventKind::Call, &["x"]),
                ev("console.log", EventKind::Call, &["x"]),
            ],
            Termination::Completed,
        );
        let d = trace_diff(&a, &b).unwrap();
        assert_eq!(d.index, 1);
        assert!(!trace_equal(&a, &b));
    }

    #[test]
    fn count_mismatch_is_detected() {
        let a = ExecutionTrace::new(
            vec![ev("console.log", EventKind::Call, &["x"])],
            Termination::Completed,
        );
        let b = ExecutionTrace::new(
            vec![
                ev("console.log", EventKind::Call, &["x"]),
                ev("console.log", EventKind::Call, &["x"]),
            ],
            Termination::Completed,
        );
        let d = trace_diff(&a, &b).unwrap();
        assert_eq!(d.index, 1);
        assert!(d.left.is_none());
        assert!(d.right.is_some());
    }

    #[test]
    fn termination_mismatch_is_a_divergence() {
        let a = ExecutionTrace::new(vec![], Termination::Completed);
        let b = ExecutionTrace::new(vec![], Termination::StepLimit);
        let d = trace_diff(&a, &b).unwrap();
        assert!(d.termination_mismatch.is_some());
    }

    #[test]
    fn json_shape_is_versioned() {
        let t = ExecutionTrace::new(vec![], Termination::Completed);
        let json = t.to_json();
        assert!(json.contains("\"trace_format_version\": 1"));
        let back: ExecutionTrace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
