//! Exact verification of the Lie-algebraic backbone.
//!
//! Everything the reduction and superposition machinery relies on is a
//! bracket identity between vector fields with Laurent-polynomial
//! coefficients, so it can be checked in exact rational arithmetic with no
//! tolerances at all. Three suites:
//!
//! * the sl(2) triple spanning the Milne-Pinney flow on (x, v),
//! * the same triple lifted to the six-variable system that carries the
//!   nonlinear solution and both linear partners at once,
//! * the gauge pair (v d/dv, x d/dv) acting on the five-field dissipative
//!   family, including the escape bracket showing the family itself is NOT
//!   a Lie algebra; only the gauge subalgebra is, which is exactly why the
//!   reduction goes through a gauge transformation.
//!
//!     cargo run --example algebra_structure

use ermakov::liealg::{catalog, verify_structure};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let suites = [
        ("Milne-Pinney sl(2) on (x, v)", catalog::pinney_sl2_suite()),
        ("coupled sl(2) on six variables", catalog::ermakov_sl2_suite()),
        ("gauge action on the dissipative family", catalog::gauge_action_suite()),
    ];
    for (name, suite) in suites {
        println!("== {name} ==");
        let report = verify_structure(&suite)?;
        print!("{report}");
        assert!(report.all_passed());
        println!();
    }
    Ok(())
}
