//! Shared fixtures for the benchmarks.

use mdhopf::validation::{analyse, case_one_curves, PointAnalysis};
use mdhopf::{case_one, HSolver, Tolerances};

/// Full analysis at the first worked example's double Hopf point.
pub fn first_example() -> PointAnalysis {
    analyse(&case_one(), case_one_curves(), HSolver::Auto, &Tolerances::default()).expect("first example analyses")
}
