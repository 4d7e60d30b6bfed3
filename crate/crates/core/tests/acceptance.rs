//! Acceptance gate: one line per criterion. Criteria 1 to 9 come from the
//! suite; criterion 10 runs it twice and compares the serialized reports.

use std::time::{Duration, Instant};

use coulomb_uc::report::to_json_string;
use coulomb_uc::suite::{run_suite, SuiteOptions};

const TOTAL_LIMIT: Duration = Duration::from_secs(600);

#[test]
fn acceptance() {
    let opts = SuiteOptions { seed: 42, ..SuiteOptions::default() };
    let start = Instant::now();
    let first = run_suite(&opts).expect("suite run");
    let second = run_suite(&opts).expect("second suite run");
    let elapsed = start.elapsed();

    let mut failed = Vec::new();
    for c in &first.criteria {
        println!("{} ({:.1} s)", c.line(), c.elapsed.as_secs_f64());
        for (k, v) in &c.metrics {
            println!("        {k} = {v:.6e}");
        }
        for note in &c.notes {
            println!("        {note}");
        }
        if !c.passed {
            failed.push(c.id);
        }
    }

    let a = to_json_string(&first).unwrap();
    let b = to_json_string(&second).unwrap();
    let deterministic = a == b;
    let in_time = elapsed <= TOTAL_LIMIT;
    let ok = deterministic && in_time;
    println!(
        "[{}] criterion 10: deterministic output and total runtime ({:.1} s for two runs, byte-identical: {deterministic})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    if !ok {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
