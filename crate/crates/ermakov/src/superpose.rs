//! Ermakov invariants, Wronskian, and the nonlinear superposition rule that
//! reconstructs the Milne-Pinney general solution from two solutions of the
//! matching linear oscillator.
//!
//! The phase-space picture couples the nonlinear coordinate to two linear
//! partners through a shared velocity factor `f(t)`:
//!
//! ```text
//! x' = f v_x    v_x' = -w^2(t) x + f k / x^3
//! y' = f v_y    v_y' = -w^2(t) y
//! z' = f v_z    v_z' = -w^2(t) z
//! ```
//!
//! For the plain Milne-Pinney equation `f = 1` and `v` is the ordinary
//! velocity; a factor `f = e^{-F}` arises from gauge reductions (the
//! reducibility gauge `alpha` plays the role of `f`). The quantities
//!
//! ```text
//! I1 = 1/2 ((y v_x - x v_y)^2 + k (y/x)^2)
//! I2 = 1/2 ((z v_x - x v_z)^2 + k (z/x)^2)
//! W  = y v_z - z v_y
//! ```
//!
//! are exactly conserved, and the position is recovered algebraically:
//!
//! ```text
//! x = (sqrt(2)/|W|) (I2 y^2 + I1 z^2 +- sqrt(4 I1 I2 - k W^2) y z)^{1/2}
//! ```
//!
//! subject to the reality condition `4 I1 I2 >= k W^2`. Differentiating
//! `x^2` shows the factor cancels, leaving the velocity reconstruction
//! `v_x = (2 I2 y v_y + 2 I1 z v_z +- sqrt(d) (v_y z + y v_z)) / (W^2 x)`.
//!
//! Formulas that take the gauge exponent `F` directly (the invariant in
//! velocity-form variables) use `e^{2F} = 1/f^2`; pass `F = 0` for
//! phase-space inputs.

use crate::expr::{EvalError, Expr};
use crate::odeint::{rk4_integrate, OdeError, SingularGuard, Trajectory};

use thiserror::Error;

/// Relative tolerance for agreeing that a stored Wronskian matches the one
/// computed from a linear pair's initial data.
pub const WRONSKIAN_MATCH_TOL: f64 = 1e-9;

/// Errors from invariants and the superposition rule.
#[derive(Debug, Error)]
pub enum SuperposeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("invariant undefined where the nonlinear coordinate x vanishes")]
    ZeroPosition,
    #[error("linear pair is dependent: Wronskian is zero")]
    ZeroWronskian,
    #[error("superposition constant {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("invariant {name} = {value} must be nonnegative for positive coupling")]
    NegativeInvariant { name: &'static str, value: f64 },
    #[error("reality condition violated: 4 I1 I2 = {lhs} < k W^2 = {rhs}")]
    Reality { lhs: f64, rhs: f64 },
    #[error("superposition radicand {value} is negative at y = {y}, z = {z}")]
    NegativeRadicand { value: f64, y: f64, z: f64 },
    #[error("stored Wronskian {stored} does not match the pair's value {computed}")]
    WronskianMismatch { stored: f64, computed: f64 },
    #[error("trajectories must share grid and carry (position, velocity) states")]
    GridMismatch,
}

/// Which sign of the superposition formula to take. Both branches solve the
/// equation; they differ in the relative phase of the linear pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Branch, String> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            other => Err(format!("expected `plus` or `minus`, got `{other}`")),
        }
    }
}

// Treats tiny negative values produced by cancellation as zero; anything
// beyond the rounding scale stays negative for the caller to reject.
fn clamp_cancellation(value: f64, scale: f64) -> f64 {
    if value < 0.0 && value >= -32.0 * f64::EPSILON * scale {
        0.0
    } else {
        value
    }
}

/// The Ermakov invariant of a nonlinear state `(x, v_x)` against a linear
/// partner `(y, v_y)`:
/// `I = 1/2 (e^{2F} (y v_x - x v_y)^2 + k (y/x)^2)`.
///
/// Phase-space inputs take `gauge_exponent = 0`; velocity-form inputs
/// (`x' = e^{-F} v`) take the actual `F(t)`.
pub fn ermakov_invariant(
    xp: (f64, f64),
    yp: (f64, f64),
    k: f64,
    gauge_exponent: f64,
) -> Result<f64, SuperposeError> {
    let (x, vx) = xp;
    let (y, vy) = yp;
    if x == 0.0 {
        return Err(SuperposeError::ZeroPosition);
    }
    let cross = y * vx - x * vy;
    let ratio = y / x;
    Ok(0.5 * ((2.0 * gauge_exponent).exp() * cross * cross + k * ratio * ratio))
}

/// The Wronskian `W = y v_z - z v_y` of two linear states.
pub fn wronskian(yp: (f64, f64), zp: (f64, f64)) -> f64 {
    yp.0 * zp.1 - zp.0 * yp.1
}

/// The constants `(I1, I2, W)` and sign branch that select one solution out
/// of the superposition rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionConstants {
    i1: f64,
    i2: f64,
    w: f64,
    branch: Branch,
}

impl SuperpositionConstants {
    /// Builds constants, rejecting nonfinite values and a zero Wronskian.
    /// The coupling-dependent reality condition is checked where the
    /// constants meet `k`: see [`SuperpositionConstants::validate_for`].
    pub fn new(
        i1: f64,
        i2: f64,
        w: f64,
        branch: Branch,
    ) -> Result<SuperpositionConstants, SuperposeError> {
        for (name, value) in [("I1", i1), ("I2", i2), ("W", w)] {
            if !value.is_finite() {
                return Err(SuperposeError::NonFinite { name, value });
            }
        }
        if w == 0.0 {
            return Err(SuperposeError::ZeroWronskian);
        }
        Ok(SuperpositionConstants { i1, i2, w, branch })
    }

    /// Constants matched to a reference nonlinear state: the invariants are
    /// computed against the two linear states at the same instant, and the
    /// branch is chosen so the reconstructed velocity agrees with the
    /// reference. The reference position must be positive (the rule as
    /// written returns the positive root).
    pub fn matching(
        reference: (f64, f64),
        y0: (f64, f64),
        z0: (f64, f64),
        k: f64,
        gauge_exponent: f64,
    ) -> Result<SuperpositionConstants, SuperposeError> {
        let i1 = ermakov_invariant(reference, y0, k, gauge_exponent)?;
        let i2 = ermakov_invariant(reference, z0, k, gauge_exponent)?;
        let w = wronskian(y0, z0);
        let plus = SuperpositionConstants::new(i1, i2, w, Branch::Plus)?;
        let minus = SuperpositionConstants { branch: Branch::Minus, ..plus };
        let (_, v_plus) = superpose_state(y0, z0, &plus, k)?;
        let (_, v_minus) = superpose_state(y0, z0, &minus, k)?;
        if (v_minus - reference.1).abs() < (v_plus - reference.1).abs() {
            Ok(minus)
        } else {
            Ok(plus)
        }
    }

    pub fn i1(&self) -> f64 {
        self.i1
    }

    pub fn i2(&self) -> f64 {
        self.i2
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Same constants on the other sign branch.
    pub fn with_branch(&self, branch: Branch) -> SuperpositionConstants {
        SuperpositionConstants { branch, ..*self }
    }

    /// Checks the reality condition `4 I1 I2 >= k W^2` (boundary equality
    /// accepted) and, for positive coupling, nonnegativity of the
    /// invariants.
    pub fn validate_for(&self, k: f64) -> Result<(), SuperposeError> {
        if k > 0.0 {
            for (name, value) in [("I1", self.i1), ("I2", self.i2)] {
                if value < 0.0 {
                    return Err(SuperposeError::NegativeInvariant { name, value });
                }
            }
        }
        self.discriminant(k).map(|_| ())
    }

    /// The radicand constant `4 I1 I2 - k W^2`, clamped to zero when
    /// cancellation leaves rounding residue, or an error when genuinely
    /// negative.
    pub fn discriminant(&self, k: f64) -> Result<f64, SuperposeError> {
        let lhs = 4.0 * self.i1 * self.i2;
        let rhs = k * self.w * self.w;
        let d = clamp_cancellation(lhs - rhs, lhs.abs() + rhs.abs());
        if d < 0.0 {
            return Err(SuperposeError::Reality { lhs, rhs });
        }
        Ok(d)
    }
}

/// The superposed position
/// `x = (sqrt(2)/|W|) (I2 y^2 + I1 z^2 +- sqrt(d) y z)^{1/2}` with
/// `d = 4 I1 I2 - k W^2`, on the constants' stored branch.
pub fn superpose(
    y: f64,
    z: f64,
    consts: &SuperpositionConstants,
    k: f64,
) -> Result<f64, SuperposeError> {
    consts.validate_for(k)?;
    let sd = consts.discriminant(k)?.sqrt();
    let terms = [consts.i2 * y * y, consts.i1 * z * z, consts.branch.sign() * sd * y * z];
    let radicand = clamp_cancellation(
        terms.iter().sum(),
        terms.iter().map(|t| t.abs()).sum(),
    );
    if radicand < 0.0 {
        return Err(SuperposeError::NegativeRadicand { value: radicand, y, z });
    }
    Ok(std::f64::consts::SQRT_2 * radicand.sqrt() / consts.w.abs())
}

/// Position and phase-space velocity from full linear states:
/// `v_x = (2 I2 y v_y + 2 I1 z v_z +- sqrt(d) (v_y z + y v_z)) / (W^2 x)`,
/// the derivative of the position formula (the velocity factor cancels).
pub fn superpose_state(
    yp: (f64, f64),
    zp: (f64, f64),
    consts: &SuperpositionConstants,
    k: f64,
) -> Result<(f64, f64), SuperposeError> {
    let x = superpose(yp.0, zp.0, consts, k)?;
    if x == 0.0 {
        return Err(SuperposeError::ZeroPosition);
    }
    let sd = consts.discriminant(k)?.sqrt();
    let numer = 2.0 * consts.i2 * yp.0 * yp.1
        + 2.0 * consts.i1 * zp.0 * zp.1
        + consts.branch.sign() * sd * (yp.1 * zp.0 + yp.0 * zp.1);
    Ok((x, numer / (consts.w * consts.w * x)))
}

/// Two independent solutions of the same linear oscillator on a shared
/// grid, with the velocity factor and the coupling they are meant to
/// superpose against.
#[derive(Debug, Clone)]
pub struct LinearPair {
    y: Trajectory,
    z: Trajectory,
    factor: Expr,
    k: f64,
}

impl LinearPair {
    /// Wraps externally produced trajectories after checking that they
    /// share a grid, carry `(position, velocity)` states, and are
    /// independent at the start.
    pub fn new(
        y: Trajectory,
        z: Trajectory,
        factor: Expr,
        k: f64,
    ) -> Result<LinearPair, SuperposeError> {
        if y.dim() != 2 || z.dim() != 2 || !y.shares_grid(&z) {
            return Err(SuperposeError::GridMismatch);
        }
        let pair = LinearPair { y, z, factor, k };
        if pair.initial_wronskian() == 0.0 {
            return Err(SuperposeError::ZeroWronskian);
        }
        Ok(pair)
    }

    /// Integrates `y' = f v, v' = -w^2 y` for both members over `[t0, t1]`
    /// from the initial `(y, v_y)` and `(z, v_z)` states.
    pub fn integrate(
        omega_sq: &Expr,
        factor: &Expr,
        k: f64,
        t0: f64,
        t1: f64,
        step: f64,
        initial: ((f64, f64), (f64, f64)),
    ) -> Result<LinearPair, SuperposeError> {
        let (y0, z0) = initial;
        let field = |t: f64, state: &[f64], out: &mut [f64]| -> Result<(), OdeError> {
            let f = factor.eval(t)?;
            let w2 = omega_sq.eval(t)?;
            out[0] = f * state[1];
            out[1] = -w2 * state[0];
            out[2] = f * state[3];
            out[3] = -w2 * state[2];
            Ok(())
        };
        let initial = [y0.0, y0.1, z0.0, z0.1];
        let joint = rk4_integrate(field, t0, t1, step, &initial, &SingularGuard::none())?;
        let mut y_states = Vec::with_capacity(joint.len());
        let mut z_states = Vec::with_capacity(joint.len());
        for (_, state) in joint.iter() {
            y_states.push(vec![state[0], state[1]]);
            z_states.push(vec![state[2], state[3]]);
        }
        LinearPair::new(
            Trajectory::from_uniform(t0, step, y_states)?,
            Trajectory::from_uniform(t0, step, z_states)?,
            factor.clone(),
            k,
        )
    }

    /// The canonical pair: `y` from `(1, 0)` and `z` from `(0, 1)`, so the
    /// Wronskian is exactly one at the start.
    pub fn canonical(
        omega_sq: &Expr,
        factor: &Expr,
        k: f64,
        t0: f64,
        t1: f64,
        step: f64,
    ) -> Result<LinearPair, SuperposeError> {
        LinearPair::integrate(omega_sq, factor, k, t0, t1, step, ((1.0, 0.0), (0.0, 1.0)))
    }

    pub fn y(&self) -> &Trajectory {
        &self.y
    }

    pub fn z(&self) -> &Trajectory {
        &self.z
    }

    pub fn factor(&self) -> &Expr {
        &self.factor
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t0(&self) -> f64 {
        self.y.t0()
    }

    pub fn step(&self) -> f64 {
        self.y.step()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn states_at(&self, i: usize) -> ((f64, f64), (f64, f64)) {
        let y = self.y.state(i);
        let z = self.z.state(i);
        ((y[0], y[1]), (z[0], z[1]))
    }

    /// Wronskian at sample `i`; constant along exact solutions.
    pub fn wronskian_at(&self, i: usize) -> f64 {
        let (yp, zp) = self.states_at(i);
        wronskian(yp, zp)
    }

    pub fn initial_wronskian(&self) -> f64 {
        self.wronskian_at(0)
    }
}

/// Per-sample conserved-quantity diagnostics attached to a reconstructed
/// solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSample {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub w: f64,
}

/// A Milne-Pinney solution reconstructed by superposition, with the linear
/// pair it came from and per-sample invariant diagnostics.
#[derive(Debug, Clone)]
pub struct GeneralSolution {
    trajectory: Trajectory,
    pair: LinearPair,
    constants: SuperpositionConstants,
    diagnostics: Vec<InvariantSample>,
}

impl GeneralSolution {
    /// States are `(x, v_x)` in the phase-space convention; the physical
    /// velocity is `x' = f(t) v_x`.
    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn pair(&self) -> &LinearPair {
        &self.pair
    }

    pub fn constants(&self) -> &SuperpositionConstants {
        &self.constants
    }

    pub fn diagnostics(&self) -> &[InvariantSample] {
        &self.diagnostics
    }

    /// `x'(t_i) = f(t_i) v_x(t_i)`.
    pub fn physical_velocity(&self, i: usize) -> Result<f64, SuperposeError> {
        let t = self.trajectory.time(i);
        Ok(self.pair.factor().eval(t)? * self.trajectory.state(i)[1])
    }

    /// Worst drift of the recomputed `(I1, I2)` from their first sample.
    pub fn max_invariant_drift(&self) -> (f64, f64) {
        let first = self.diagnostics[0];
        let mut worst = (0.0f64, 0.0f64);
        for s in &self.diagnostics {
            worst.0 = worst.0.max((s.i1 - first.i1).abs());
            worst.1 = worst.1.max((s.i2 - first.i2).abs());
        }
        worst
    }
}

/// Applies the superposition rule pointwise along a linear pair. The
/// stored Wronskian must match the pair's initial one to about 1e-9; the
/// diagnostics recompute `(I1, I2, W)` at every sample.
pub fn superpose_pair(
    pair: LinearPair,
    consts: &SuperpositionConstants,
) -> Result<GeneralSolution, SuperposeError> {
    consts.validate_for(pair.k())?;
    let computed = pair.initial_wronskian();
    if (computed - consts.w).abs() > WRONSKIAN_MATCH_TOL * (1.0 + consts.w.abs()) {
        return Err(SuperposeError::WronskianMismatch { stored: consts.w, computed });
    }

    let k = pair.k();
    let mut states = Vec::with_capacity(pair.len());
    let mut diagnostics = Vec::with_capacity(pair.len());
    for i in 0..pair.len() {
        let (yp, zp) = pair.states_at(i);
        let (x, vx) = superpose_state(yp, zp, consts, k)?;
        let t = pair.y().time(i);
        diagnostics.push(InvariantSample {
            t,
            i1: ermakov_invariant((x, vx), yp, k, 0.0)?,
            i2: ermakov_invariant((x, vx), zp, k, 0.0)?,
            w: wronskian(yp, zp),
        });
        states.push(vec![x, vx]);
    }
    let trajectory = Trajectory::from_uniform(pair.t0(), pair.step(), states)?;
    Ok(GeneralSolution { trajectory, pair, constants: *consts, diagnostics })
}

/// Reconstructs the general solution of `x'' = -w^2(t) x + k/x^3` (and its
/// factored variants) over `[t0, t1]`: integrates the canonical linear
/// pair, then superposes with the given constants. `factor` is the
/// velocity factor `f`; pass the constant one for the plain equation.
pub fn general_solution(
    omega_sq: &Expr,
    factor: &Expr,
    k: f64,
    consts: &SuperpositionConstants,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<GeneralSolution, SuperposeError> {
    let pair = LinearPair::canonical(omega_sq, factor, k, t0, t1, step)?;
    superpose_pair(pair, consts)
}

/// Max over samples of `|I(t_i) - I(t_0)|` for the invariant of `x`
/// against `y`, with the gauge exponent evaluated per sample. Both
/// trajectories must share the grid and carry `(position, velocity)`
/// states.
pub fn invariant_drift(
    x: &Trajectory,
    y: &Trajectory,
    k: f64,
    gauge_exponent: &Expr,
) -> Result<f64, SuperposeError> {
    if x.dim() != 2 || y.dim() != 2 || !x.shares_grid(y) {
        return Err(SuperposeError::GridMismatch);
    }
    let mut base = None;
    let mut worst = 0.0f64;
    for ((t, xs), (_, ys)) in x.iter().zip(y.iter()) {
        let f = gauge_exponent.eval(t)?;
        let value = ermakov_invariant((xs[0], xs[1]), (ys[0], ys[1]), k, f)?;
        match base {
            None => base = Some(value),
            Some(first) => worst = worst.max((value - first).abs()),
        }
    }
    Ok(worst)
}
