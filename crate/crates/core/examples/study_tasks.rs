//! The four study task shapes as pose scripts, the events they produce and
//! the dashboard state they end in.

use active_proxy::fixtures::{task_golden, task_script, Task};
use active_proxy::Scenario;

fn main() -> anyhow::Result<()> {
    let s = Scenario::demo();
    for task in Task::ALL {
        let script = task_script(task, &s);
        let g = task_golden(task, &s, &script).map_err(anyhow::Error::msg)?;
        let span = script.last().map_or(0, |l| l.t_ms()) - script.first().map_or(0, |l| l.t_ms());
        println!(
            "{:<4} {:>4} samples over {:>5} ms → {:>2} events; layer {:?}, locked {}, filter {:?}, shoebox {}",
            task.stem(),
            script.len(),
            span,
            g.events,
            g.state.layer,
            g.state.locked,
            g.state.filter,
            g.state.shoebox.values().map(Vec::len).sum::<usize>()
        );
    }
    Ok(())
}
