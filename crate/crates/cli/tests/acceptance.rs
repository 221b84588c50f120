//! Runs the twelve acceptance criteria, one PASS/FAIL line each.
//! `ACCEPTANCE_ONLY=1,5,9` restricts the run.

use std::process::ExitCode;

use ratchet_lab::acceptance::run_suite;

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
        .unwrap_or_default();
    let outcomes = run_suite(&only, |o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
