//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use odd_walk_validation::criteria;

fn main() -> ExitCode {
    let criteria = criteria();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  [{secs:.1} s] {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
