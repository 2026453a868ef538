//! Offline verification of recorded sessions and golden fixtures.
//!
//! A directory is searched for `*.trace.jsonl` hub recordings and for
//! `*.golden.json` end states (directly or under `golden/`). Each golden
//! `name` is paired with `name_events.jsonl`, and with `name_task.jsonl`
//! when the pose script is present too.

use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::dashboard::{reduce, DashboardState};
use crate::fixtures::{read_events, script_events, Golden};
use crate::hub::{replay, Trace, Unpaced};
use crate::runner::load_script;
use crate::scenario::Scenario;
use crate::session::Session;

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub subject: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub findings: Vec<Finding>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.findings.iter().all(|f| f.ok)
    }

    pub fn first_failure(&self) -> Option<&Finding> {
        self.findings.iter().find(|f| !f.ok)
    }

    fn push(&mut self, subject: &Path, result: Result<String, String>) {
        let (ok, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.findings.push(Finding {
            subject: subject.display().to_string(),
            ok,
            detail,
        });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "nothing to check");
        }
        for x in &self.findings {
            writeln!(f, "{} {}: {}", if x.ok { "ok  " } else { "FAIL" }, x.subject, x.detail)?;
        }
        let failed = self.findings.iter().filter(|x| !x.ok).count();
        writeln!(f, "{} checked, {failed} failed", self.findings.len())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("{0}: no such file or directory")]
    Missing(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
}

/// Checks a trace file or a fixture directory. Without an explicit
/// scenario, a `campus.json` next to the inputs is used when present,
/// otherwise the built-in demo.
pub fn check_path(path: &Path, scenario: Option<&Scenario>) -> Result<Report, CheckError> {
    if !path.exists() {
        return Err(CheckError::Missing(path.to_owned()));
    }
    let mut report = Report::default();
    if path.is_file() {
        let base = path.parent().unwrap_or(Path::new("."));
        let s = resolve(base, scenario)?;
        report.push(path, check_trace_file(path, &s));
        return Ok(report);
    }
    let s = resolve(path, scenario)?;
    let mut goldens = Vec::new();
    let mut traces = Vec::new();
    for dir in [path.to_owned(), path.join("golden")] {
        if !dir.is_dir() {
            continue;
        }
        for entry in fs::read_dir(&dir)? {
            let p = entry?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.ends_with(".golden.json") {
                goldens.push(p);
            } else if name.ends_with(".trace.jsonl") {
                traces.push(p);
            }
        }
    }
    goldens.sort();
    traces.sort();
    for g in &goldens {
        report.push(g, check_golden(g, &s));
    }
    for t in &traces {
        report.push(t, check_trace_file(t, &s));
    }
    Ok(report)
}

fn resolve(dir: &Path, explicit: Option<&Scenario>) -> Result<Scenario, CheckError> {
    if let Some(s) = explicit {
        return Ok(s.clone());
    }
    for candidate in [dir.join("campus.json"), dir.join("..").join("campus.json")] {
        if candidate.is_file() {
            return Ok(Scenario::load(&candidate)?);
        }
    }
    Ok(Scenario::demo())
}

fn check_trace_file(path: &Path, scenario: &Scenario) -> Result<String, String> {
    let trace = Trace::load(path).map_err(|e| e.to_string())?;
    check_trace(&trace, scenario)
}

/// Replays a recording and reports the first divergence, rejected input
/// or invariant violation.
pub fn check_trace(trace: &Trace, scenario: &Scenario) -> Result<String, String> {
    let readings = scenario.load_readings().map_err(|e| e.to_string())?;
    let session = Session::new(scenario.clone(), readings).map_err(|e| e.to_string())?;
    let out = replay(trace, session, &mut Unpaced, false).map_err(|e| e.to_string())?;
    if let Some(d) = out.divergences.first() {
        return Err(d.to_string());
    }
    let m = out.session.metrics();
    if let Some(v) = m.invariant_violations.first() {
        return Err(v.clone());
    }
    if m.collisions > 0 || m.boundary_violations > 0 {
        return Err(format!(
            "{} collisions, {} boundary violations",
            m.collisions, m.boundary_violations
        ));
    }
    Ok(format!(
        "{} entries, {} checkpoints, state {}",
        trace.entries.len(),
        out.checkpoints,
        &m.final_state_hash[..12]
    ))
}

fn sibling(golden: &Path, file: &str) -> Option<PathBuf> {
    let dir = golden.parent()?;
    [dir.join(file), dir.join("..").join(file)].into_iter().find(|p| p.is_file())
}

/// Re-derives a golden end state from its event log (and pose script, when
/// present), checking reducer invariants after every event.
pub fn check_golden(path: &Path, scenario: &Scenario) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let golden: Golden = serde_json::from_str(&text).map_err(|e| format!("malformed golden: {e}"))?;
    let events_file = format!("{}_events.jsonl", golden.name);
    let events_path = sibling(path, &events_file).ok_or(format!("{events_file} not found"))?;
    let file = fs::File::open(&events_path).map_err(|e| e.to_string())?;
    let events = read_events(BufReader::new(file))?;

    let mut viewport_changes = golden.viewport_changes;
    if let Some(script_path) = sibling(path, &format!("{}_task.jsonl", golden.name)) {
        let script = load_script(&script_path).map_err(|e| e.to_string())?;
        let derived = script_events(scenario, &script).map_err(|e| e.to_string())?;
        if let Some(i) = (0..derived.len().max(events.len())).find(|&i| derived.get(i) != events.get(i)) {
            return Err(format!(
                "event {i}: script yields {:?}, log has {:?}",
                derived.get(i),
                events.get(i)
            ));
        }
        viewport_changes = script
            .iter()
            .filter(|l| matches!(l, crate::runner::ScriptLine::Viewport { .. }))
            .count();
    }

    let binding = scenario.binding();
    let mut state = DashboardState::default();
    for (i, e) in events.iter().enumerate() {
        state = reduce(&state, e, &binding)
            .map_err(|err| format!("event {i} (t={} ms): {err}", e.t_ms))?
            .0;
        state
            .check_invariants(&binding)
            .map_err(|err| format!("event {i} (t={} ms): {err}", e.t_ms))?;
    }
    let now = Golden::new(&golden.name, &events, viewport_changes, state);
    if !now.matches(&golden) {
        return Err(format!(
            "end state {} differs from golden {} ({} events vs {})",
            now.state_hash, golden.state_hash, now.events, golden.events
        ));
    }
    Ok(format!("{} events, state {}", events.len(), &golden.state_hash[..12]))
}
