//! Symbolic-numeric toolkit for dissipative Milne-Pinney and damped
//! time-dependent oscillator equations.
//!
//! The library brings a family of dissipative Ermakov-type systems
//!
//! ```text
//! x'' = a(t) x' + b(t) x + c(t) / x^3
//! ```
//!
//! to the classical Milne-Pinney form, certifies the Lie-algebraic structure
//! behind that reduction with exact arithmetic, and rebuilds general
//! solutions out of two solutions of the associated linear oscillator
//! through a nonlinear superposition rule.
//!
//! The pieces:
//!
//! * [`expr`] - a small symbolic expression type for time-dependent
//!   coefficients: parsing, exact differentiation, evaluation.
//! * [`odeint`] - fixed-step Runge-Kutta integration with compensated
//!   accumulation, uniform-grid trajectories, cumulative quadrature, and a
//!   guard for the `x = 0` singularity.
//! * [`liealg`] - vector fields with Laurent-polynomial coefficients over
//!   exact rationals, commutators, span membership, and a catalog of the
//!   sl(2) triples and gauge generators used by the reductions; every check
//!   is exact, never floating-point.
//! * [`reduce`] - damping removal `x = zeta(t) y`, time reparametrization
//!   `ds = alpha dt`, phase-space gauge transformations, the reducibility
//!   criterion `a = c'/(2c)` with its gauge `alpha = sqrt(c/k)`, and named
//!   literature systems.
//! * [`superpose`] - Ermakov invariants, the two-invariant superposition
//!   formula with its reality condition, branch handling, and invariant
//!   drift diagnostics.
//! * [`cli`] - a scenario-file front end emitting deterministic CSV.
//!
//! The `examples/` directory exercises each capability end to end; the
//! `ermakov` binary runs scenario files.

pub mod cli;
pub mod expr;
pub mod liealg;
pub mod odeint;
pub mod reduce;
pub mod superpose;
