use std::process::ExitCode;

use dbr_lab::acceptance::verify_acceptance_with;
use dbr_lab::Exec;

fn main() -> ExitCode {
    println!("acceptance suite");
    let report = verify_acceptance_with(Exec::default(), |c| println!("{c}"));
    let failed = report.failed();
    if failed.is_empty() {
        println!("acceptance: {} checks passed", report.criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
