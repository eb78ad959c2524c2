//! Runs the eleven acceptance criteria at full size and prints one verdict
//! line per criterion. Exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bimmse::harness::{run_validation, Tier};

fn main() -> ExitCode {
    let start = Instant::now();
    let outcomes = run_validation(Tier::Full, |o| println!("{o}"));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.number).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        outcomes.len() - failed.len(),
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
