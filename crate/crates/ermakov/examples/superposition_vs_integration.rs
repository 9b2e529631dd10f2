//! General solutions without integrating the nonlinear equation.
//!
//! The Milne-Pinney equation x'' = -w^2(t) x + k/x^3 admits a superposition
//! rule: every solution is an algebraic combination of two solutions of the
//! LINEAR oscillator y'' = -w^2(t) y, parametrized by two Ermakov invariants
//! and the pair's Wronskian. Here w^2(t) = 1 + 0.1 sin t. The constants are
//! extracted from the initial state alone, the linear pair is integrated
//! once, and the reconstruction is compared against brute-force RK4 of the
//! nonlinear equation itself.
//!
//!     cargo run --example superposition_vs_integration

use ermakov::expr::{parse_expr, Expr};
use ermakov::reduce::SecondOrderSystem;
use ermakov::superpose::{general_solution, SuperpositionConstants};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let omega_sq = parse_expr("1 + 0.1*sin(t)")?;
    let k = 1.0;
    let (x0, v0) = (1.2, 0.0);
    let (t0, t1, step) = (0.0, 10.0, 1e-3);

    // Invariants of the initial state against the canonical pair
    // y(t0) = 1, y'(t0) = 0 and z(t0) = 0, z'(t0) = 1; the branch sign is
    // chosen so the reconstructed velocity matches v0.
    let consts = SuperpositionConstants::matching((x0, v0), (1.0, 0.0), (0.0, 1.0), k, 0.0)?;
    println!(
        "matched constants: I1 = {:.6}, I2 = {:.6}, W = {}, branch {:?}",
        consts.i1(),
        consts.i2(),
        consts.w(),
        consts.branch(),
    );

    let sol = general_solution(&omega_sq, &Expr::one(), k, &consts, t0, t1, step)?;

    let b = parse_expr("-(1 + 0.1*sin(t))")?;
    let direct = SecondOrderSystem::new(Expr::zero(), b, Expr::one())
        .integrate(x0, v0, t0, t1, step)?;

    let mut worst_x = 0.0f64;
    let mut worst_v = 0.0f64;
    for ((_, ds), (_, rs)) in direct.iter().zip(sol.trajectory().iter()) {
        worst_x = worst_x.max((ds[0] - rs[0]).abs());
        worst_v = worst_v.max((ds[1] - rs[1]).abs());
    }
    println!("reconstruction vs direct RK4 over [0, 10]:");
    println!("  max |dx| = {worst_x:.3e}");
    println!("  max |dv| = {worst_v:.3e}");

    // A few samples of the orbit.
    println!("\n    t        x(t)      v(t)");
    for i in (0..direct.len()).step_by(2000) {
        let t = sol.trajectory().time(i);
        let s = sol.trajectory().state(i);
        println!("  {t:5.2}  {:9.6}  {:9.6}", s[0], s[1]);
    }
    Ok(())
}
