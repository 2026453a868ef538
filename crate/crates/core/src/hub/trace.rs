//! Session traces: a JSON header line, then every envelope the hub saw or
//! produced, each stamped with its hub time.
//!
//! ```text
//! {"scenario_id":"campus-demo","config_hash":"9f2c…","started_at":"2026-03-02T10:00:00Z","version":1}
//! {"v":1,"t_ms":0,"seq":1,"role":"tracker","sender":"mocap","kind":"pose_update","payload":{…},"hub_ms":0}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::envelope::{Envelope, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub scenario_id: String,
    pub config_hash: String,
    pub started_at: DateTime<Utc>,
    pub version: u32,
}

impl TraceHeader {
    pub fn new(scenario_id: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            config_hash: config_hash.into(),
            started_at: Utc::now(),
            version: PROTOCOL_VERSION,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("empty trace: no header line")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    /// Envelopes in recording order; `hub_ms` is always set.
    pub entries: Vec<Envelope>,
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            header,
            entries: Vec::new(),
        }
    }

    pub fn read<R: BufRead>(source: R) -> Result<Trace, TraceError> {
        let mut lines = source.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let (_, first) = lines.next().ok_or(TraceError::MissingHeader)?;
        let header: TraceHeader = serde_json::from_str(&first?).map_err(|e| TraceError::Malformed {
            line: 1,
            reason: format!("header: {e}"),
        })?;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let env = Envelope::parse(&line).map_err(|e| TraceError::Malformed {
                line: i + 1,
                reason: e.reason,
            })?;
            if env.hub_ms.is_none() {
                return Err(TraceError::Malformed {
                    line: i + 1,
                    reason: "entry without hub_ms".into(),
                });
            }
            entries.push(env);
        }
        Ok(Trace { header, entries })
    }

    pub fn load(path: &Path) -> Result<Trace, TraceError> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn write<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{}", serde_json::to_string(&self.header)?)?;
        for e in &self.entries {
            writeln!(sink, "{}", e.to_json())?;
        }
        sink.flush()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    /// Hub time of the last entry.
    pub fn end_ms(&self) -> u64 {
        self.entries.last().and_then(|e| e.hub_ms).unwrap_or(0)
    }
}

/// Collects a trace in memory, optionally streaming it to a file as well so
/// a crashed server still leaves a usable prefix behind.
pub struct Recorder {
    trace: Trace,
    sink: Option<BufWriter<File>>,
}

impl Recorder {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            trace: Trace::new(header),
            sink: None,
        }
    }

    pub fn streaming(header: TraceHeader, path: &Path) -> std::io::Result<Self> {
        let mut sink = BufWriter::new(File::create(path)?);
        writeln!(sink, "{}", serde_json::to_string(&header)?)?;
        Ok(Self {
            trace: Trace::new(header),
            sink: Some(sink),
        })
    }

    pub fn record(&mut self, env: &Envelope) {
        debug_assert!(env.hub_ms.is_some());
        if let Some(sink) = &mut self.sink {
            if let Err(e) = writeln!(sink, "{}", env.to_json()) {
                tracing::warn!("trace write failed, continuing in memory: {e}");
                self.sink = None;
            }
        }
        self.trace.entries.push(env.clone());
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn finish(mut self) -> std::io::Result<Trace> {
        if let Some(sink) = &mut self.sink {
            sink.flush()?;
        }
        Ok(self.trace)
    }
}

/// Decides when a replayed entry is released.
pub trait Pacer {
    fn wait_until(&mut self, trace_ms: u64);
}

/// Releases entries as fast as possible.
#[derive(Debug, Default)]
pub struct Unpaced;

impl Pacer for Unpaced {
    fn wait_until(&mut self, _trace_ms: u64) {}
}

/// Wall-clock pacing at `speed` times the recorded rate.
#[derive(Debug)]
pub struct Realtime {
    speed: f64,
    origin: Option<(Instant, u64)>,
}

impl Realtime {
    pub fn new(speed: f64) -> Self {
        assert!(speed > 0.0 && speed.is_finite(), "replay speed must be positive");
        Self { speed, origin: None }
    }
}

impl Pacer for Realtime {
    fn wait_until(&mut self, trace_ms: u64) {
        let (start, t0) = *self.origin.get_or_insert((Instant::now(), trace_ms));
        let due = start + Duration::from_secs_f64(trace_ms.saturating_sub(t0) as f64 / 1000.0 / self.speed);
        let now = Instant::now();
        if due > now {
            std::thread::sleep(due - now);
        }
    }
}

/// Records the requested release times instead of sleeping; for tests.
#[derive(Debug, Default)]
pub struct VirtualClock {
    pub speed: f64,
    /// Wall-clock offsets (ms) at which entries would have been released.
    pub releases: Vec<f64>,
    t0: Option<u64>,
}

impl VirtualClock {
    pub fn new(speed: f64) -> Self {
        Self {
            speed,
            ..Self::default()
        }
    }
}

impl Pacer for VirtualClock {
    fn wait_until(&mut self, trace_ms: u64) {
        let t0 = *self.t0.get_or_insert(trace_ms);
        self.releases.push((trace_ms - t0) as f64 / self.speed);
    }
}
