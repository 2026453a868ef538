//! WebSocket transport for [`HubCore`].
//!
//! Every connection gets a reader task and a writer task. Readers forward
//! frames, in order, into a single hub loop which owns the core; the loop
//! answers through unbounded per-connection queues, so a slow or vanished
//! client never holds up routing or robot control.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use futures::{SinkExt, StreamExt};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use super::core::{Delivery, HubCore};
use super::envelope::{Body, Envelope, Kind, ProtocolError};
use super::router::ConnId;

pub const DEFAULT_PORT: u16 = 8787;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    /// Static files served next to `/ws`, e.g. the browser client.
    pub ui_dir: Option<PathBuf>,
    /// How often the simulation is advanced between messages.
    pub tick: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            ui_dir: None,
            tick: Duration::from_millis(10),
        }
    }
}

enum Outgoing {
    Text(String),
    Close(String),
}

enum Input {
    Open(ConnId, mpsc::UnboundedSender<Outgoing>),
    Frame(ConnId, String),
    Binary(ConnId),
    Closed(ConnId),
}

#[derive(Clone)]
struct AppState {
    inputs: mpsc::UnboundedSender<Input>,
    next_conn: Arc<AtomicU64>,
}

pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: oneshot::Sender<()>,
    hub: JoinHandle<HubCore>,
    http: JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    /// Stops accepting, writes a final checkpoint and hands the core back.
    pub async fn shutdown(self) -> HubCore {
        let _ = self.stop.send(());
        let core = self.hub.await.expect("hub loop panicked");
        self.http.abort();
        core
    }
}

/// Binds and starts serving; returns once the listener is up.
pub async fn serve(core: HubCore, cfg: ServerConfig) -> std::io::Result<ServerHandle> {
    let listener = tokio::net::TcpListener::bind(cfg.addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = mpsc::unbounded_channel();
    let (stop, stopped) = oneshot::channel();
    let hub = tokio::spawn(hub_loop(core, rx, stopped, cfg.tick));
    let state = AppState {
        inputs: tx,
        next_conn: Arc::new(AtomicU64::new(1)),
    };
    let mut app = axum::Router::new().route("/ws", get(upgrade)).with_state(state);
    if let Some(dir) = cfg.ui_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let http = tokio::spawn(async move { axum::serve(listener, app).await });
    tracing::info!(%addr, "hub listening");
    Ok(ServerHandle { addr, stop, hub, http })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: AppState) {
    let conn = state.next_conn.fetch_add(1, Ordering::Relaxed);
    let (out_tx, mut out_rx) = mpsc::unbounded_channel();
    if state.inputs.send(Input::Open(conn, out_tx)).is_err() {
        return;
    }
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            match msg {
                Outgoing::Text(t) => {
                    if sink.send(Message::Text(t.into())).await.is_err() {
                        break;
                    }
                }
                Outgoing::Close(reason) => {
                    let frame = axum::extract::ws::CloseFrame {
                        code: axum::extract::ws::close_code::POLICY,
                        reason: reason.into(),
                    };
                    let _ = sink.send(Message::Close(Some(frame))).await;
                    break;
                }
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let input = match msg {
            Message::Text(t) => Input::Frame(conn, t.to_string()),
            Message::Binary(_) => Input::Binary(conn),
            Message::Close(_) => break,
            _ => continue,
        };
        if state.inputs.send(input).is_err() {
            break;
        }
    }
    let _ = state.inputs.send(Input::Closed(conn));
    let _ = writer.await;
}

struct Conns(BTreeMap<ConnId, mpsc::UnboundedSender<Outgoing>>);

impl Conns {
    fn send(&self, conn: ConnId, msg: Outgoing) {
        if let Some(tx) = self.0.get(&conn) {
            // a closed queue means the client is gone; nothing to do
            let _ = tx.send(msg);
        }
    }

    fn deliver(&self, deliveries: Vec<Delivery>) {
        for d in deliveries {
            if d.to.is_empty() {
                continue;
            }
            let text = d.envelope.to_json();
            for conn in d.to {
                self.send(conn, Outgoing::Text(text.clone()));
            }
        }
    }
}

async fn hub_loop(
    mut core: HubCore,
    mut inputs: mpsc::UnboundedReceiver<Input>,
    mut stopped: oneshot::Receiver<()>,
    tick: Duration,
) -> HubCore {
    let start = Instant::now();
    let now_ms = || start.elapsed().as_millis() as u64;
    let mut conns = Conns(BTreeMap::new());
    let mut ticker = tokio::time::interval(tick);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    loop {
        tokio::select! {
            _ = &mut stopped => break,
            _ = ticker.tick() => {
                let out = core.advance(now_ms());
                conns.deliver(out);
            }
            input = inputs.recv() => {
                let Some(input) = input else { break };
                let t = now_ms();
                match input {
                    Input::Open(conn, tx) => {
                        conns.0.insert(conn, tx);
                    }
                    Input::Closed(conn) => {
                        if let Some(peer) = core.router().peer(conn) {
                            tracing::info!(conn, role = %peer.role, sender = %peer.sender, "client left");
                        }
                        core.leave(conn);
                        conns.0.remove(&conn);
                    }
                    Input::Binary(conn) => {
                        let d = core.reject(Some(conn), &ProtocolError::new(None, "binary frames are not part of protocol v1"), t);
                        conns.deliver(vec![d]);
                    }
                    Input::Frame(conn, text) => handle_frame(&mut core, &conns, conn, &text, t),
                }
            }
        }
    }
    let end = now_ms();
    core.checkpoint(end);
    core
}

fn handle_frame(core: &mut HubCore, conns: &Conns, conn: ConnId, text: &str, t: u64) {
    let env = match Envelope::parse(text) {
        Ok(env) => env,
        Err(err) => {
            let d = core.reject(Some(conn), &err, t);
            conns.deliver(vec![d]);
            return;
        }
    };
    if env.kind() != Kind::Hello {
        conns.deliver(core.submit(Some(conn), env, t));
        return;
    }
    match core.hello(conn, &env) {
        Ok(()) => {
            tracing::info!(conn, role = %env.role, sender = %env.sender, "client joined");
            let mut welcome = Envelope::new(t, 0, super::envelope::Role::Controller, "hub", Body::Hello);
            welcome.hub_ms = Some(t);
            conns.send(conn, Outgoing::Text(welcome.to_json()));
        }
        Err(refusal) => {
            tracing::warn!(conn, role = %env.role, "refused: {refusal}");
            let err = ProtocolError::new(Some(env.seq), refusal.to_string());
            let d = core.reject(Some(conn), &err, t);
            conns.deliver(vec![d]);
            conns.send(conn, Outgoing::Close(refusal.to_string()));
        }
    }
}
