//! Acceptance suite: one PASS/FAIL line per criterion at the fixed tolerances.

use std::process::ExitCode;

use phgcalc_cli::accept::{run_one, Suite, CRITERIA};
use phgcalc_cli::config::RunConfig;

fn main() -> ExitCode {
    let suite = match Suite::new(&RunConfig::default()) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL suite setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("\nrunning {} acceptance criteria", CRITERIA.len());
    let mut failed = 0;
    for c in &CRITERIA {
        let r = run_one(c, &suite);
        println!("{}", r.line());
        if !r.pass {
            failed += 1;
            for m in r.metrics.iter().filter(|m| !m.pass) {
                println!("       {}: value {:?}, tolerance {:?}", m.name, m.value, m.tolerance);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed\n", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
