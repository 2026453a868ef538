//! Start the WebSocket hub and drive it from two in-process clients: a
//! tracker lifts P2, the dashboard watches the filter change.
//!
//! For a long-running hub use `active-proxy serve` instead.

use std::time::Duration;

use active_proxy::gesture::PoseSample;
use active_proxy::hub::{self, Body, Envelope, HubCore, Kind, Role, ServerConfig};
use active_proxy::world::TablePose;
use active_proxy::{Scenario, Session};
use futures::{SinkExt, StreamExt};
use tokio_tungstenite::{connect_async, tungstenite::Message};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let core = HubCore::new(Session::new(Scenario::demo(), Default::default())?);
    let cfg = ServerConfig {
        addr: ([127, 0, 0, 1], 0).into(),
        ..Default::default()
    };
    let hub = hub::serve(core, cfg).await?;
    let url = format!("ws://{}/ws", hub.addr);
    println!("hub at {url}");

    let (mut wall, _) = connect_async(&url).await?;
    let (mut cam, _) = connect_async(&url).await?;
    let hello = |role, who: &str| Envelope::new(0, 0, role, who, Body::Hello).to_json();
    wall.send(Message::Text(hello(Role::Dashboard, "wall").into())).await?;
    cam.send(Message::Text(hello(Role::Tracker, "cam").into())).await?;

    for k in 0..15u64 {
        let z = if k == 0 { 0.0 } else { 0.06 };
        let sample = PoseSample {
            proxy: "P2".into(),
            pose: TablePose { z, ..TablePose::on_table(0.43, 0.20, 0.5, k * 20) },
        };
        let env = Envelope::new(k * 20, k + 1, Role::Tracker, "cam", Body::PoseUpdate(sample));
        cam.send(Message::Text(env.to_json().into())).await?;
    }

    let deadline = tokio::time::Instant::now() + Duration::from_secs(3);
    while let Ok(Some(Ok(Message::Text(text)))) = tokio::time::timeout_at(deadline, wall.next()).await {
        let env = Envelope::parse(&text)?;
        match &env.body {
            Body::StateDelta(d) => {
                println!("state_delta: filter {:?}, cause {:?}", d.state.filter, d.cause.as_ref().map(|c| &c.kind));
                if !d.state.filter.is_empty() {
                    break;
                }
            }
            Body::Effects(e) => println!("effects: {:?}", e.effects),
            _ if env.kind() == Kind::Hello => println!("welcomed by {}", env.sender),
            _ => {}
        }
    }

    let core = hub.shutdown().await;
    println!("nacks {}, state {}", core.metrics().nacks, &core.metrics().final_state_hash[..16]);
    Ok(())
}
