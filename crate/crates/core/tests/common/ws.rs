//! A minimal protocol client over tokio-tungstenite.

use std::net::SocketAddr;
use std::time::Duration;

use active_proxy::hub::{self, Body, Envelope, HubCore, Kind, Role, ServerConfig, ServerHandle};
use active_proxy::{Scenario, Session};
use futures::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

pub async fn start(core: HubCore) -> ServerHandle {
    let cfg = ServerConfig {
        addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        ..Default::default()
    };
    hub::serve(core, cfg).await.expect("bind")
}

pub async fn start_demo() -> ServerHandle {
    start(HubCore::new(Session::new(Scenario::demo(), Default::default()).unwrap())).await
}

pub struct Client {
    pub ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    pub role: Role,
    pub sender: String,
    pub seq: u64,
}

/// What a client saw: parsed envelopes, or the server closing.
#[derive(Debug)]
pub enum Seen {
    Env(Envelope),
    Closed(Option<String>),
}

impl Client {
    /// Connects without introducing itself.
    pub async fn raw(addr: SocketAddr, role: Role, sender: &str) -> Client {
        let (ws, _) = connect_async(format!("ws://{addr}/ws")).await.expect("connect");
        Client {
            ws,
            role,
            sender: sender.to_owned(),
            seq: 0,
        }
    }

    /// Connects, says hello and waits for the hub's welcome.
    pub async fn join(addr: SocketAddr, role: Role, sender: &str) -> Client {
        let mut c = Client::raw(addr, role, sender).await;
        c.send_text(Envelope::new(0, 0, role, sender, Body::Hello).to_json()).await;
        let welcome = c.expect(Kind::Hello).await;
        assert_eq!(welcome.role, Role::Controller);
        c
    }

    pub async fn send(&mut self, body: Body) -> u64 {
        self.seq += 1;
        let env = Envelope::new(self.seq, self.seq, self.role, self.sender.clone(), body);
        self.send_text(env.to_json()).await;
        self.seq
    }

    pub async fn send_text(&mut self, text: String) {
        self.ws.send(Message::Text(text.into())).await.expect("send");
    }

    pub async fn next(&mut self, wait: Duration) -> Option<Seen> {
        loop {
            let msg = tokio::time::timeout(wait, self.ws.next()).await.ok()?;
            match msg {
                Some(Ok(Message::Text(t))) => return Some(Seen::Env(Envelope::parse(&t).expect("hub speaks v1"))),
                Some(Ok(Message::Close(frame))) => return Some(Seen::Closed(frame.map(|f| f.reason.to_string()))),
                Some(Ok(_)) => continue,
                Some(Err(_)) | None => return Some(Seen::Closed(None)),
            }
        }
    }

    /// Skips everything until an envelope of `kind` arrives (5 s limit).
    pub async fn expect(&mut self, kind: Kind) -> Envelope {
        let deadline = tokio::time::Instant::now() + Duration::from_secs(5);
        loop {
            let left = deadline.saturating_duration_since(tokio::time::Instant::now());
            match self.next(left).await {
                Some(Seen::Env(e)) if e.kind() == kind => return e,
                Some(Seen::Env(_)) => continue,
                other => panic!("{} waiting for {kind:?}: {other:?}", self.sender),
            }
        }
    }
}
