//! Record a scripted session, write the trace, and replay it twice as fast
//! as it was recorded; the end state and robot poses must match exactly.

use active_proxy::fixtures::{task_script, Task};
use active_proxy::hub::{replay, Realtime, Trace};
use active_proxy::runner::{run, RunOptions};
use active_proxy::{Scenario, Session};

fn main() -> anyhow::Result<()> {
    let scenario = Scenario::demo();
    let script = task_script(Task::Rd, &scenario);
    let opts = RunOptions {
        seed: 1,
        duration_ms: 20_000,
        record: true,
    };
    let recorded = run(scenario.clone(), Default::default(), &script, &opts)?;
    let trace = recorded.trace.expect("recording requested");

    let path = std::env::temp_dir().join("rd.trace.jsonl");
    trace.save(&path)?;
    let trace = Trace::load(&path)?;
    println!("{} entries → {}", trace.entries.len(), path.display());

    let out = replay(&trace, Session::new(scenario, Default::default())?, &mut Realtime::new(2.0), false)?;
    let again = out.session.metrics();
    println!("recorded {}", recorded.metrics.final_state_hash);
    println!("replayed {}", again.final_state_hash);
    println!(
        "checkpoints {}, divergences {}, poses equal: {}",
        out.checkpoints,
        out.divergences.len(),
        out.poses() == recorded.session.poses()
    );
    Ok(())
}
