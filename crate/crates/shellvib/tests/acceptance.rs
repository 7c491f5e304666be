//! Acceptance suite as a test target. Prints one PASS/FAIL line per
//! criterion and fails when any criterion does.
//!
//! `SHELLVIB_ACCEPT_FAST=1` selects the reduced configuration of
//! `shellvib accept --fast`; `SHELLVIB_ACCEPT_ONLY=5a,5b` runs a subset.

use std::process::ExitCode;

use shellvib::accept::{format_line, run_one, CRITERIA};

fn main() -> ExitCode {
    // Accept and ignore libtest flags such as --nocapture or a filter.
    let fast = std::env::var("SHELLVIB_ACCEPT_FAST").is_ok_and(|v| v == "1");
    let only: Option<Vec<String>> =
        std::env::var("SHELLVIB_ACCEPT_ONLY").ok().map(|s| s.split(',').map(|t| t.trim().to_string()).collect());
    let mut failed = 0;
    let mut total = 0;
    for c in &CRITERIA {
        if only.as_ref().is_some_and(|o| !o.iter().any(|id| id == c.id)) {
            continue;
        }
        let o = run_one(c, fast);
        println!("{}", format_line(&o));
        total += 1;
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {}/{total} criteria passed{}", total - failed, if fast { " (fast)" } else { "" });
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
