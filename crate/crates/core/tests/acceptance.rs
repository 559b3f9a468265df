//! Runs every replication criterion and prints one line per check. Exits
//! non-zero if any check fails or errors.

use std::process::ExitCode;

use smoothlearn::harness::{all_criteria, DEFAULT_BASE_SEED};

fn main() -> ExitCode {
    let start = std::time::Instant::now();
    let mut failed = Vec::new();
    for (i, v) in all_criteria(DEFAULT_BASE_SEED).into_iter().enumerate() {
        match v {
            Ok(v) => {
                println!("{v}");
                if !v.pass {
                    failed.push(v.id);
                }
            }
            Err(e) => {
                println!("[FAIL] {:>2} error: {e}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/12 passed in {:.1}s",
        12 - failed.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
