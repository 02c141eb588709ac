//! Acceptance criteria 1-11 at their stated tolerances, simulations included
//! (about twenty minutes on one core).
//!
//! Criteria that cannot be met are left failing; the test checks the
//! outcome against the list below so that any change in status, in either
//! direction, is caught. The analysis of each failure is kept with the
//! project notes.

use std::io::Write;

use mdhopf::validation::{criterion_5, reference, run, Status, ValidationOptions};
use mdhopf::AmplitudeSystem;

/// 1: the d21* thresholds are irrational, not the reference fractions.
/// 4: the reference frequencies at the second point do not solve the
///    frequency quartic there.
/// 5, 6: the reference p12 has the opposite sign and p22 differs by 3%,
///    which moves the L2 line.
/// 7: p21, p22 and both L-lines differ; the fallback needs criterion 4.
/// 9: the (6.95, 12.5) run has not decayed below 1e-4 by t = 3000, and the
///    long-time attractors at (6.945, 13.9) and (6.95, 14) are periodic.
const KNOWN_FAILURES: [u8; 6] = [1, 4, 5, 6, 7, 9];

#[test]
fn acceptance() {
    let opts = ValidationOptions { simulations: true, ..Default::default() };
    let results = run(&opts);
    // Written straight to stderr so the report shows without --nocapture.
    let mut err = std::io::stderr().lock();
    for r in &results {
        writeln!(err, "{}", r.summary_line()).unwrap();
    }
    assert_eq!(results.iter().map(|r| r.id).collect::<Vec<_>>(), (1..=11).collect::<Vec<_>>());
    assert!(results.iter().all(|r| r.status() != Status::Skipped));
    let failing: Vec<u8> = results.iter().filter(|r| r.status() == Status::Fail).map(|r| r.id).collect();
    assert_eq!(failing, KNOWN_FAILURES);
}

fn reference_first_example() -> AmplitudeSystem {
    let c = reference::NF1;
    AmplitudeSystem::new([[c[0], c[1]], [c[2], c[3]]], [[c[4], c[5]], [c[6], c[7]]], 1e-12)
}

#[test]
fn criterion_5_accepts_reference_and_rejects_tampered_coefficients() {
    assert_eq!(criterion_5(&reference_first_example()).status(), Status::Pass);
    let mut amp = reference_first_example();
    amp.p[0][0] = -amp.p[0][0];
    let r = criterion_5(&amp);
    assert_eq!(r.status(), Status::Fail);
    assert!(r.summary_line().contains("p11"));
}
