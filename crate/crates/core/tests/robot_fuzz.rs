mod common;

use common::fuzz;

#[test]
fn randomized_sessions_are_safe_and_converge() {
    for seed in 0..8 {
        let out = fuzz::run(seed);
        assert!(out.ok(), "seed {seed}: {out:?}");
    }
}
