//! Fold an interaction log into dashboard state, printing effects as they
//! are emitted.
//!
//! ```text
//! cargo run --example reducer_replay -- fixtures/hand_events.jsonl
//! ```

use std::io::BufReader;

use active_proxy::dashboard::{canonical_json, reduce, state_hash, DashboardState};
use active_proxy::fixtures::read_events;
use active_proxy::Scenario;

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/dr_events.jsonl".into());
    let events = read_events(BufReader::new(std::fs::File::open(&path)?)).map_err(anyhow::Error::msg)?;
    let binding = Scenario::demo().binding();

    let mut state = DashboardState::new();
    for e in &events {
        let (next, effects) = reduce(&state, e, &binding)?;
        next.check_invariants(&binding).map_err(anyhow::Error::msg)?;
        println!("{:>6} {} {:<28} {:?}", e.t_ms, e.proxy, format!("{:?}", e.kind), effects);
        state = next;
    }
    println!("\n{}", canonical_json(&state));
    println!("sha256 {}", state_hash(&state));
    Ok(())
}
