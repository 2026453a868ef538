mod common;

use std::fs;
use std::io::BufReader;

use active_proxy::check::check_path;
use active_proxy::dashboard::{canonical_json, replay};
use active_proxy::fixtures::{read_events, script_events, task_golden, task_script, Golden, Task};
use active_proxy::runner::load_script;
use active_proxy::Scenario;

use common::golden::{fixtures_dir, hand_expected};

fn campus() -> Scenario {
    Scenario::load(&fixtures_dir().join("campus.json")).unwrap()
}

fn stored(name: &str) -> Golden {
    let path = fixtures_dir().join("golden").join(format!("{name}.golden.json"));
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hand_log_reduces_to_the_hand_walked_state() {
    let s = campus();
    let file = fs::File::open(fixtures_dir().join("hand_events.jsonl")).unwrap();
    let events = read_events(BufReader::new(file)).unwrap();
    assert_eq!(events.len(), 40);
    let state = replay(&events, &s.binding()).unwrap();
    assert_eq!(state, hand_expected());

    let fresh = Golden::new("hand", &events, 0, state);
    if std::env::var_os("BLESS_GOLDEN").is_some() {
        let path = fixtures_dir().join("golden/hand.golden.json");
        fs::write(path, serde_json::to_string_pretty(&fresh).unwrap() + "\n").unwrap();
    }
    assert!(stored("hand").matches(&fresh));
}

#[test]
fn committed_task_fixtures_are_reproduced_bit_exactly() {
    let s = campus();
    for task in Task::ALL {
        let script = task_script(task, &s);
        let committed = load_script(&fixtures_dir().join(task.script_name())).unwrap();
        assert_eq!(script, committed, "{task:?} script drifted; rerun gen-fixtures");

        let golden = task_golden(task, &s, &script).unwrap();
        let on_disk = stored(task.stem());
        assert!(on_disk.matches(&golden), "{task:?}");
        assert_eq!(canonical_json(&on_disk.state), canonical_json(&golden.state));

        let file = fs::File::open(fixtures_dir().join(task.events_name())).unwrap();
        assert_eq!(read_events(BufReader::new(file)).unwrap(), script_events(&s, &script).unwrap());
    }
}

#[test]
fn fixture_directory_checks_clean() {
    let report = check_path(&fixtures_dir(), None).unwrap();
    assert!(report.ok(), "{report}");
    assert_eq!(report.findings.len(), 5, "{report}");
}
