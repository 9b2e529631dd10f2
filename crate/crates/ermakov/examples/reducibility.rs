//! When is a dissipative cubic equation secretly a Milne-Pinney equation?
//!
//! The family x'' = a(t) x' + b(t) x + c(t)/x^3 reduces to Ermakov form
//! under a velocity gauge exactly when a = c'/(2c). The check below
//! evaluates the residual c'/(2c) - a on a grid, and on PASS returns the
//! gauge alpha = sqrt(c/k) together with the reduced frequency. Three
//! dissipative oscillators from the literature satisfy the condition with
//! gauges 1/sqrt(p), 1/p, and p^2; a constant velocity coefficient next to
//! a constant coupling misses it by exactly one.
//!
//!     cargo run --example reducibility

use ermakov::expr::{parse_expr, Expr};
use ermakov::reduce::{
    chini, colegrave_abdalla, reducibility_check, walter, Reducibility, SecondOrderSystem,
    DEFAULT_GRID_POINTS, DEFAULT_SEED,
};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let one = Expr::one;
    let cases = [
        ("Chini,             p = (1+t)^2", chini(&parse_expr("(1+t)^2")?, &one(), 1.0)),
        ("Walter,            p = 1+t^2  ", walter(&parse_expr("1+t^2")?, &one(), 1.0)),
        ("Colegrave-Abdalla, p = e^t    ", colegrave_abdalla(&parse_expr("exp(t)")?, 1.0)),
        ("control: a = 1, c = 1         ", SecondOrderSystem::new(one(), Expr::zero(), one())),
    ];

    for (name, sys) in &cases {
        match reducibility_check(sys, 0.0, 2.0, DEFAULT_GRID_POINTS, DEFAULT_SEED)? {
            Reducibility::Pass { k, gauge, max_residual, exact, .. } => {
                println!(
                    "{name}  PASS  residual {max_residual:.1e}{}",
                    if exact { ", exact off grid" } else { "" }
                );
                println!(
                    "{:32}k = {k}, alpha(0) = {}, alpha(1) = {:.6}",
                    "",
                    gauge.alpha().eval(0.0)?,
                    gauge.alpha().eval(1.0)?,
                );
            }
            Reducibility::Fail { max_residual, at_t } => {
                println!("{name}  FAIL  residual {max_residual:.3} at t = {at_t:.2}");
            }
        }
    }
    Ok(())
}
