//! Acceptance suite: runs every registered check at the default budget and
//! prints one pass/fail line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use flagquer::harness::{registry, run_check, CheckSpec, Verdict, CRITERIA, DEFAULT_SEED};

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = Vec::new();
    for (id, title) in CRITERIA {
        let mut ok = true;
        let mut notes = Vec::new();
        for def in registry().iter().filter(|c| c.criterion == id) {
            match run_check(&CheckSpec::new(def.name).with_seed(DEFAULT_SEED)) {
                Ok(report) => {
                    eprint!("{}", report.text());
                    eprintln!("      ({:.1?})", report.runtime);
                    if report.verdict == Verdict::Fail {
                        ok = false;
                        notes.push(format!("{} failed", def.name));
                    }
                }
                Err(e) => {
                    ok = false;
                    eprintln!("[ERROR] {}: {e}", def.name);
                    notes.push(format!("{} errored", def.name));
                }
            }
        }
        let line = format!(
            "criterion {id:>2} {:<42} {}{}",
            title,
            if ok { "PASS" } else { "FAIL" },
            if notes.is_empty() {
                String::new()
            } else {
                format!(" ({})", notes.join(", "))
            }
        );
        println!("{line}");
        if !ok {
            failed.push(id);
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1?}", CRITERIA.len() - failed.len(), CRITERIA.len(), start.elapsed());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
