//! Stripping dissipation off a generalized Pinney equation.
//!
//! The damped equation x'' + g(t) x' + w^2(t) x = k(t)/x^3 turns into an
//! undamped one under the rescaling x = zeta(t) y with
//! zeta = zeta0 exp(-1/2 Int g): the image satisfies
//! y'' + W^2(t) y = k(t)/(zeta^4 y^3) with W^2 = w^2 - g^2/4 - g'/2.
//! This example reduces the constant-damping case, integrates the reduced
//! equation, pulls the solution back, and compares against integrating the
//! damped equation directly. It then shows the matched exponential-decay
//! coupling k(t) = k0 e^{-2 g0 t}, whose reduced coupling is the constant
//! k0: damping, frequency, and coupling conspire so the image is a plain
//! autonomous Milne-Pinney equation.
//!
//!     cargo run --example remove_damping

use ermakov::expr::Expr;
use ermakov::reduce::{remove_damping, GeneralizedPinney};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let damped = GeneralizedPinney::new(Expr::one(), Expr::one(), Expr::one());
    let (x0, v0) = (1.0, 0.0);
    let (t0, t1, step) = (0.0, 5.0, 1e-3);

    let original = damped.to_system().integrate(x0, v0, t0, t1, step)?;

    let reduced_problem = remove_damping(&damped, 1.0, t0)?.tabulate(t1, step)?;
    let (y0, vy0) = reduced_problem.matched_initial(x0, v0)?;
    let reduced = reduced_problem.integrate(y0, vy0, step)?;
    let pulled = reduced_problem.pull_back(&reduced)?;

    let mut worst = 0.0f64;
    for ((_, os), (_, ps)) in original.iter().zip(pulled.iter()) {
        worst = worst.max((os[0] - ps[0]).abs());
    }
    println!("constant damping g = 1, w = 1, k = 1 on [0, 5]:");
    println!("  zeta(5)        = {:.6e}", reduced_problem.zeta_at(5.0)?);
    println!("  reduced W^2    = {:.6} (constant)", reduced_problem.omega_sq_at(2.0)?);
    println!("  max |x_direct - zeta y| = {worst:.3e}");

    let ck = GeneralizedPinney::caldirola_kanai(1.0, Expr::one(), 1.0);
    let ck_reduced = remove_damping(&ck, 1.0, t0)?.tabulate(t1, step)?;
    let mut coupling_dev = 0.0f64;
    for i in 0..=50 {
        let t = 0.1 * i as f64;
        coupling_dev = coupling_dev.max((ck_reduced.coupling_at(t)? - 1.0).abs());
    }
    println!("\nmatched exponential coupling k(t) = e^(-2t):");
    println!("  max |k_reduced - 1| = {coupling_dev:.3e}");
    Ok(())
}
