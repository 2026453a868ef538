use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use active_proxy::check::check_path;
use active_proxy::fixtures::{generate, Item};
use active_proxy::hub::{self, HubCore, Pacer, Realtime, Recorder, Trace, TraceHeader, Unpaced};
use active_proxy::runner::{load_script, run, RunOptions};
use active_proxy::{Metrics, Scenario, Session};

#[derive(Parser)]
#[command(name = "active-proxy", version, about = "Tabletop proxies, dashboard and hub, headless")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario JSON; the built-in five-building campus when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArg {
    fn load(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::load(p).with_context(|| format!("invalid scenario {}", p.display())),
            None => Ok(Scenario::demo()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in-process and print metrics; exits 0 iff no
    /// invariant violations and no collisions.
    Run {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Pose script (JSONL) to feed as tracker input.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulated seconds.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        /// Also write the hub recording of the run.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Verify a hub recording or a fixture directory.
    Check {
        /// Trace file or directory (defaults to --trace).
        path: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArg,
    },
    /// Write task scripts, event logs, golden states and synthetic readings.
    GenFixtures {
        /// Any of bm, dr, rd, drs, readings, scenario, or `all`.
        items: Vec<String>,
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 2016)]
        seed: u64,
    },
    /// Serve the hub over WebSocket at /ws.
    Serve {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, env = "ACTIVE_PROXY_PORT", default_value_t = hub::DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = "ACTIVE_PROXY_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Directory of static browser assets to serve alongside the hub.
        #[arg(long)]
        ui: Option<PathBuf>,
        /// Record the session to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Stop after this many seconds instead of waiting for Ctrl-C.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Re-run a recorded session and compare its checkpoints.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Playback speed; 0 replays as fast as possible.
        #[arg(long, default_value_t = 0.0)]
        speed: f64,
        /// Replay even if the recording was made with another configuration.
        #[arg(long)]
        allow_config_mismatch: bool,
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
}

fn emit_metrics(m: &Metrics, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(m)?;
    if let Some(p) = out {
        std::fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{json}");
    Ok(())
}

fn code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn seconds_to_ms(s: f64) -> Result<u64> {
    if !(s.is_finite() && s >= 0.0) {
        bail!("duration must be a non-negative number of seconds");
    }
    Ok((s * 1000.0).round() as u64)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn,active_proxy=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            scenario,
            trace,
            seed,
            duration,
            metrics_out,
            record,
        } => {
            let scenario = scenario.load()?;
            let readings = scenario.load_readings()?;
            let script = match &trace {
                Some(p) => load_script(p).with_context(|| format!("reading {}", p.display()))?,
                None => Vec::new(),
            };
            let opts = RunOptions {
                seed,
                duration_ms: seconds_to_ms(duration)?,
                record: record.is_some(),
            };
            let out = run(scenario, readings, &script, &opts)?;
            if let (Some(path), Some(trace)) = (&record, &out.trace) {
                trace.save(path).with_context(|| format!("writing {}", path.display()))?;
            }
            emit_metrics(&out.metrics, metrics_out.as_deref())?;
            Ok(code(out.metrics.ok()))
        }
        Command::Check { path, trace, scenario } => {
            let Some(path) = path.or(trace) else {
                bail!("nothing to check: give a path or --trace");
            };
            let explicit = match scenario.scenario {
                Some(_) => Some(scenario.load()?),
                None => None,
            };
            let report = check_path(&path, explicit.as_ref())?;
            print!("{report}");
            if let Some(f) = report.first_failure() {
                eprintln!("first violation: {}: {}", f.subject, f.detail);
            }
            Ok(code(report.ok()))
        }
        Command::GenFixtures {
            items,
            out,
            scenario,
            seed,
        } => {
            let scenario = scenario.load()?;
            let mut wanted = Vec::new();
            for it in &items {
                if it == "all" {
                    wanted.extend(Item::all());
                } else {
                    wanted.push(it.parse::<Item>().map_err(anyhow::Error::msg)?);
                }
            }
            wanted.sort();
            wanted.dedup();
            for p in generate(&out, &wanted, &scenario, seed)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            scenario,
            port,
            bind,
            ui,
            trace,
            duration,
            metrics_out,
        } => {
            let scenario = scenario.load()?;
            let readings = scenario.load_readings()?;
            let header = TraceHeader::new(&scenario.id, scenario.config_hash());
            let mut core = HubCore::new(Session::new(scenario, readings)?);
            if let Some(p) = &trace {
                core = core.with_recorder(Recorder::streaming(header, p)?);
            }
            let limit = duration.map(seconds_to_ms).transpose()?;
            let rt = tokio::runtime::Runtime::new()?;
            let core = rt.block_on(async move {
                let cfg = hub::ServerConfig {
                    addr: SocketAddr::new(bind, port),
                    ui_dir: ui,
                    ..Default::default()
                };
                let handle = hub::serve(core, cfg).await?;
                eprintln!("hub on ws://{}/ws", handle.addr);
                match limit {
                    Some(ms) => tokio::time::sleep(Duration::from_millis(ms)).await,
                    None => tokio::signal::ctrl_c().await?,
                }
                anyhow::Ok(handle.shutdown().await)
            })?;
            let metrics = core.metrics();
            let (_, recorder) = core.into_parts();
            if let Some(r) = recorder {
                r.finish()?;
            }
            emit_metrics(&metrics, metrics_out.as_deref())?;
            Ok(code(metrics.ok()))
        }
        Command::Replay {
            trace,
            scenario,
            speed,
            allow_config_mismatch,
            metrics_out,
        } => {
            let scenario = scenario.load()?;
            let readings = scenario.load_readings()?;
            let recorded = Trace::load(&trace).with_context(|| format!("reading {}", trace.display()))?;
            let mut pacer: Box<dyn Pacer> = if speed > 0.0 {
                Box::new(Realtime::new(speed))
            } else {
                Box::new(Unpaced)
            };
            let out = hub::replay(
                &recorded,
                Session::new(scenario, readings)?,
                pacer.as_mut(),
                allow_config_mismatch,
            )?;
            for d in &out.divergences {
                eprintln!("divergence: {d}");
            }
            let metrics = out.session.metrics();
            emit_metrics(&metrics, metrics_out.as_deref())?;
            Ok(code(out.divergences.is_empty() && metrics.ok()))
        }
    }
}
