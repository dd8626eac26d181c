//! The acceptance gate: runs every criterion at its stated tolerance and
//! prints one pass/fail line each. Set CSPEC_ACCEPTANCE_LEVEL=quick for the
//! thinned grids (the default here is the full stated sizes).

use cspec_core::acceptance::{run_all, Level};

#[test]
fn acceptance_criteria() {
    let level = match std::env::var("CSPEC_ACCEPTANCE_LEVEL").as_deref() {
        Ok("quick") => Level::Quick,
        _ => Level::Full,
    };
    let results = run_all(level, 7);
    let mut failures = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if !r.pass {
            failures.push(r.id);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
