//! Runs every acceptance criterion and prints one line each. Built without
//! the libtest harness so the lines are always shown.

use pes_harness::acceptance::CRITERIA;

fn main() {
    let mut failed = Vec::new();
    for criterion in CRITERIA.iter() {
        let result = criterion.run();
        println!("{}", result.line());
        if !result.passed {
            failed.push(result.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
