//! Coefficient transformations that turn dissipative oscillator equations
//! into Lie-system form.
//!
//! Three mechanisms are implemented, all for equations in the family
//! `x'' = a(t) x' + b(t) x + c(t) / x^3`:
//!
//! * **Damping removal by rescaling.** Writing `x = zeta(t) y` with
//!   `zeta(t) = zeta0 exp(-1/2 Int gamma)` turns
//!   `x'' + gamma(t) x' + w^2(t) x = k(t)/x^3` into the velocity-free
//!   `y'' + W^2(t) y = k(t) / (zeta^4(t) y^3)` where
//!   `W^2 = w^2 - gamma^2/4 - gamma'/2`. See [`remove_damping`].
//!
//! * **Time reparametrization.** A new time `s` with `ds/dt = alpha(t) > 0`
//!   maps the family onto itself with coefficients
//!   `a_s = (a - alpha'/alpha)/alpha`, `b_s = b/alpha^2`, `c_s = c/alpha^2`
//!   composed with `t(s)`; the choice `alpha = exp(Int a)` kills the velocity
//!   term exactly. See [`reparametrize`].
//!
//! * **Velocity gauge change.** The time-dependent diffeomorphism `x = x'`,
//!   `v = alpha(t) v' + beta(t) x'` acts on five-coefficient systems
//!   `x' = d v + e x`, `v' = a v + b x + c/x^3`; the reducibility condition
//!   `a = c'/(2c)` decides when a gauge `alpha = sqrt(c/k)`, `beta = 0`
//!   lands in Ermakov form with constant coupling `k`. See
//!   [`quasi_lie_transform`] and [`reducibility_check`].
//!
//! Symbolic assembly keeps the coefficient algebra exact; grids only enter
//! where a window must be scanned (sign checks, residual maxima) or an
//! integral has no closed form.

use crate::expr::{EvalError, Expr};
use crate::odeint::{
    cumulative_integral, rk4_integrate, CumulativeIntegral, MonotoneMap, OdeError, SingularGuard,
    Trajectory,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Grid size used by [`reducibility_check`] when callers have no reason to
/// choose another.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Relative tolerance for the reducibility residual `c'/(2c) - a`.
pub const REDUCIBILITY_TOL: f64 = 1e-9;

/// Number of random probe points behind the `exact` flag of a reducibility
/// pass.
pub const EXACT_PROBES: usize = 20;

/// Absolute tolerance at the random probe points for the `exact` flag.
pub const EXACT_PROBE_TOL: f64 = 1e-13;

/// Default seed for the randomized probe points; overridable for
/// reproducibility sweeps.
pub const DEFAULT_SEED: u64 = 42;

/// Errors from the reduction pipeline.
#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("scale factor must be nonzero and finite, got {value}")]
    ZeroScale { value: f64 },
    #[error("coupling c(t) vanishes or changes sign near t = {t}")]
    CouplingSignChange { t: f64 },
    #[error("reparametrization rate alpha(t) = {value} at t = {t} is not positive")]
    NonPositiveAlpha { t: f64, value: f64 },
    #[error("a reducibility grid needs at least 2 points, got {points}")]
    BadGrid { points: usize },
    #[error("unknown named system `{name}`")]
    UnknownSystem { name: String },
    #[error("named system `{system}` needs parameter `{name}`")]
    MissingParameter { system: &'static str, name: &'static str },
}

// Peephole constructors: keep assembled coefficient trees free of the
// `+ 0`, `* 1` noise that the general formulas would otherwise produce, so
// identity gauges return the original expressions structurally unchanged.

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

fn plus(lhs: Expr, rhs: Expr) -> Expr {
    if is_const(&lhs, 0.0) {
        rhs
    } else if is_const(&rhs, 0.0) {
        lhs
    } else {
        lhs + rhs
    }
}

fn minus(lhs: Expr, rhs: Expr) -> Expr {
    if is_const(&rhs, 0.0) {
        lhs
    } else if is_const(&lhs, 0.0) {
        -rhs
    } else {
        lhs - rhs
    }
}

fn times(lhs: Expr, rhs: Expr) -> Expr {
    if is_const(&lhs, 0.0) || is_const(&rhs, 0.0) {
        Expr::zero()
    } else if is_const(&lhs, 1.0) {
        rhs
    } else if is_const(&rhs, 1.0) {
        lhs
    } else {
        lhs * rhs
    }
}

fn over(numer: Expr, denom: Expr) -> Expr {
    if is_const(&numer, 0.0) {
        Expr::zero()
    } else if is_const(&denom, 1.0) {
        numer
    } else {
        numer / denom
    }
}

fn square(e: Expr) -> Expr {
    if is_const(&e, 0.0) {
        Expr::zero()
    } else if is_const(&e, 1.0) {
        Expr::one()
    } else {
        e.squared()
    }
}

/// The equation `x'' = a(t) x' + b(t) x + c(t) / x^3` by its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    a: Expr,
    b: Expr,
    c: Expr,
}

impl SecondOrderSystem {
    pub fn new(a: Expr, b: Expr, c: Expr) -> SecondOrderSystem {
        SecondOrderSystem { a, b, c }
    }

    pub fn a(&self) -> &Expr {
        &self.a
    }

    pub fn b(&self) -> &Expr {
        &self.b
    }

    pub fn c(&self) -> &Expr {
        &self.c
    }

    /// Right-hand side of the first-order form `x' = v`,
    /// `v' = a v + b x + c / x^3` for the numerical integrator.
    pub fn field(&self) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<(), OdeError> + '_ {
        move |t, state, out| {
            let a = self.a.eval(t)?;
            let b = self.b.eval(t)?;
            let c = self.c.eval(t)?;
            let x = state[0];
            let v = state[1];
            out[0] = v;
            let cubic = if c == 0.0 { 0.0 } else { c / (x * x * x) };
            out[1] = a * v + b * x + cubic;
            Ok(())
        }
    }

    /// Integrates from `(x0, v0)` with the default singularity guard on `x`
    /// (skipped when `c` is the literal zero constant, since the equation is
    /// then linear and free to cross `x = 0`).
    pub fn integrate(
        &self,
        x0: f64,
        v0: f64,
        t0: f64,
        t1: f64,
        step: f64,
    ) -> Result<Trajectory, ReduceError> {
        let guard =
            if is_const(&self.c, 0.0) { SingularGuard::none() } else { SingularGuard::on(&[0]) };
        self.integrate_with_guard(x0, v0, t0, t1, step, &guard)
    }

    pub fn integrate_with_guard(
        &self,
        x0: f64,
        v0: f64,
        t0: f64,
        t1: f64,
        step: f64,
        guard: &SingularGuard,
    ) -> Result<Trajectory, ReduceError> {
        Ok(rk4_integrate(self.field(), t0, t1, step, &[x0, v0], guard)?)
    }
}

/// The damped form `x'' + gamma(t) x' + w^2(t) x = k(t) / x^3`, the natural
/// input for damping removal. `w` is the frequency itself (not squared).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedPinney {
    gamma: Expr,
    omega: Expr,
    coupling: Expr,
}

impl GeneralizedPinney {
    pub fn new(gamma: Expr, omega: Expr, coupling: Expr) -> GeneralizedPinney {
        GeneralizedPinney { gamma, omega, coupling }
    }

    /// Constant damping `gamma0` with coupling `k0 exp(-2 gamma0 t)`: the
    /// exponential decay exactly compensates the rescaling, so removal
    /// produces a constant coupling `k0`.
    pub fn caldirola_kanai(gamma0: f64, omega: Expr, k0: f64) -> GeneralizedPinney {
        let decay = (Expr::constant(-2.0 * gamma0) * Expr::time()).exp();
        GeneralizedPinney {
            gamma: Expr::constant(gamma0),
            omega,
            coupling: times(Expr::constant(k0), decay),
        }
    }

    pub fn gamma(&self) -> &Expr {
        &self.gamma
    }

    pub fn omega(&self) -> &Expr {
        &self.omega
    }

    pub fn coupling(&self) -> &Expr {
        &self.coupling
    }

    /// The same equation as a [`SecondOrderSystem`]: `a = -gamma`,
    /// `b = -w^2`, `c = k`.
    pub fn to_system(&self) -> SecondOrderSystem {
        SecondOrderSystem {
            a: -self.gamma.clone(),
            b: -self.omega.clone().squared(),
            c: self.coupling.clone(),
        }
    }
}

/// The rescaling factor `zeta(t) = zeta0 exp(-1/2 Int_{t0}^t gamma)`,
/// defined by its data; evaluation requires tabulating a window.
#[derive(Debug, Clone)]
pub struct ZetaFactor {
    gamma: Expr,
    zeta0: f64,
    t0: f64,
}

/// Builds the rescaling factor that removes the velocity term produced by
/// damping `gamma`. `zeta(t0) = zeta0` exactly.
pub fn zeta_factor(gamma: Expr, zeta0: f64, t0: f64) -> Result<ZetaFactor, ReduceError> {
    if zeta0 == 0.0 || !zeta0.is_finite() {
        return Err(ReduceError::ZeroScale { value: zeta0 });
    }
    Ok(ZetaFactor { gamma, zeta0, t0 })
}

impl ZetaFactor {
    pub fn gamma(&self) -> &Expr {
        &self.gamma
    }

    pub fn zeta0(&self) -> f64 {
        self.zeta0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Tabulates `Int gamma` over `[t0, t1]` so `zeta` can be evaluated
    /// anywhere in the window.
    pub fn table(&self, t1: f64, step: f64) -> Result<ZetaTable, ReduceError> {
        let integral = cumulative_integral(&self.gamma, self.t0, t1, step)?;
        Ok(ZetaTable { integral, gamma: self.gamma.clone(), zeta0: self.zeta0 })
    }
}

/// A tabulated rescaling factor over a fixed window.
#[derive(Debug, Clone)]
pub struct ZetaTable {
    integral: CumulativeIntegral,
    gamma: Expr,
    zeta0: f64,
}

impl ZetaTable {
    pub fn t0(&self) -> f64 {
        self.integral.t0()
    }

    pub fn t1(&self) -> f64 {
        self.integral.t1()
    }

    /// `zeta(t)` anywhere in the window.
    pub fn value_at(&self, t: f64) -> Result<f64, ReduceError> {
        Ok(self.zeta0 * (-0.5 * self.integral.value_at(t)?).exp())
    }

    /// `zeta'(t) = -gamma(t) zeta(t) / 2`, the identity that defines zeta.
    pub fn derivative_at(&self, t: f64) -> Result<f64, ReduceError> {
        Ok(-0.5 * self.gamma.eval(t)? * self.value_at(t)?)
    }
}

/// The reduced frequency `W^2 = w^2 - gamma^2/4 - gamma'/2` that the
/// rescaled coordinate oscillates with, assembled symbolically.
pub fn omega_reduced(omega: &Expr, gamma: &Expr) -> Expr {
    let half_rate = over(gamma.derivative(), Expr::constant(2.0));
    let quarter_sq = over(gamma.clone().squared(), Expr::constant(4.0));
    minus(minus(omega.clone().squared(), quarter_sq), half_rate)
}

/// Removes the velocity term of a damped generalized Pinney equation: the
/// substitution `x = zeta(t) y` yields `y'' + W^2(t) y = k(t)/(zeta^4 y^3)`.
///
/// The result holds the symbolic pieces; call [`DampingRemoved::tabulate`]
/// to fix a window and integrate or evaluate.
pub fn remove_damping(
    sys: &GeneralizedPinney,
    zeta0: f64,
    t0: f64,
) -> Result<DampingRemoved, ReduceError> {
    Ok(DampingRemoved {
        omega_sq: omega_reduced(&sys.omega, &sys.gamma),
        zeta: zeta_factor(sys.gamma.clone(), zeta0, t0)?,
        coupling: sys.coupling.clone(),
    })
}

/// Output of [`remove_damping`]: the reduced frequency, the rescaling
/// factor, and the original coupling `k(t)` (the reduced coupling
/// `k/zeta^4` needs zeta values, hence a window).
#[derive(Debug, Clone)]
pub struct DampingRemoved {
    omega_sq: Expr,
    zeta: ZetaFactor,
    coupling: Expr,
}

impl DampingRemoved {
    /// `W^2(t)` of the reduced oscillator.
    pub fn omega_sq(&self) -> &Expr {
        &self.omega_sq
    }

    pub fn zeta(&self) -> &ZetaFactor {
        &self.zeta
    }

    /// Original coupling `k(t)`.
    pub fn coupling(&self) -> &Expr {
        &self.coupling
    }

    /// Fixes the working window `[t0, t1]`.
    pub fn tabulate(&self, t1: f64, step: f64) -> Result<ReducedDamping, ReduceError> {
        Ok(ReducedDamping {
            table: self.zeta.table(t1, step)?,
            omega_sq: self.omega_sq.clone(),
            coupling: self.coupling.clone(),
        })
    }
}

/// A damping-removed system on a fixed window, ready for evaluation and
/// integration.
#[derive(Debug, Clone)]
pub struct ReducedDamping {
    table: ZetaTable,
    omega_sq: Expr,
    coupling: Expr,
}

impl ReducedDamping {
    pub fn t0(&self) -> f64 {
        self.table.t0()
    }

    pub fn t1(&self) -> f64 {
        self.table.t1()
    }

    pub fn zeta_at(&self, t: f64) -> Result<f64, ReduceError> {
        self.table.value_at(t)
    }

    pub fn zeta_derivative_at(&self, t: f64) -> Result<f64, ReduceError> {
        self.table.derivative_at(t)
    }

    pub fn omega_sq_at(&self, t: f64) -> Result<f64, ReduceError> {
        Ok(self.omega_sq.eval(t)?)
    }

    /// Reduced coupling `k(t) / zeta^4(t)`.
    pub fn coupling_at(&self, t: f64) -> Result<f64, ReduceError> {
        let zeta = self.table.value_at(t)?;
        Ok(self.coupling.eval(t)? / (zeta * zeta * zeta * zeta))
    }

    /// Matched initial data for the reduced coordinate: `y = x/zeta`,
    /// `y' = (x' - zeta' y)/zeta` at the window start.
    pub fn matched_initial(&self, x0: f64, v0: f64) -> Result<(f64, f64), ReduceError> {
        let t0 = self.t0();
        let zeta = self.zeta_at(t0)?;
        let zeta_dot = self.zeta_derivative_at(t0)?;
        let y0 = x0 / zeta;
        Ok((y0, (v0 - zeta_dot * y0) / zeta))
    }

    /// Integrates `y'' = -W^2(t) y + (k/zeta^4)(t) / y^3` over the window.
    pub fn integrate(&self, y0: f64, vy0: f64, step: f64) -> Result<Trajectory, ReduceError> {
        let field = |t: f64, state: &[f64], out: &mut [f64]| -> Result<(), OdeError> {
            let y = state[0];
            let v = state[1];
            let omega_sq = self.omega_sq.eval(t)?;
            let c = self
                .coupling_at(t)
                .map_err(|e| reduce_to_ode(e, t))?;
            out[0] = v;
            let cubic = if c == 0.0 { 0.0 } else { c / (y * y * y) };
            out[1] = -omega_sq * y + cubic;
            Ok(())
        };
        let guard =
            if is_const(&self.coupling, 0.0) { SingularGuard::none() } else { SingularGuard::on(&[0]) };
        Ok(rk4_integrate(field, self.t0(), self.t1(), step, &[y0, vy0], &guard)?)
    }

    /// Pulls a reduced trajectory back to the original coordinate:
    /// `x = zeta y`, `x' = zeta' y + zeta y'` sample by sample.
    pub fn pull_back(&self, reduced: &Trajectory) -> Result<Trajectory, ReduceError> {
        let mut states = Vec::with_capacity(reduced.len());
        for (t, state) in reduced.iter() {
            let zeta = self.zeta_at(t)?;
            let zeta_dot = self.zeta_derivative_at(t)?;
            states.push(vec![zeta * state[0], zeta_dot * state[0] + zeta * state[1]]);
        }
        Ok(Trajectory::from_uniform(reduced.t0(), reduced.step(), states)?)
    }
}

// Flattens a ReduceError raised inside an integration callback into the
// OdeError layer the integrator can carry.
fn reduce_to_ode(e: ReduceError, t: f64) -> OdeError {
    match e {
        ReduceError::Eval(inner) => OdeError::Eval(inner),
        ReduceError::Ode(inner) => inner,
        _ => OdeError::NonFinite { component: 0, t },
    }
}

/// Changes the time variable to `s` with `ds/dt = alpha(t) > 0` over
/// `[t0, t1]`, tabulating the map `s(t)` at the given step.
///
/// The transformed equation is again in the family:
/// `x'' = a_s x' + b_s x + c_s / x^3` with respect to `s`, where
/// `a_s = (a - alpha'/alpha)/alpha`, `b_s = b/alpha^2`, `c_s = c/alpha^2`,
/// all evaluated at `t(s)`. Choosing `alpha = exp(Int a)` makes `a_s`
/// vanish identically: the cancellation `a - alpha'/alpha` is then exact
/// even in floating point.
pub fn reparametrize(
    sys: &SecondOrderSystem,
    alpha: &Expr,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Reparametrized, ReduceError> {
    let integral = cumulative_integral(alpha, t0, t1, step)?;
    for &t in integral.times() {
        let value = alpha.eval(t)?;
        if !value.is_finite() || value <= 0.0 {
            return Err(ReduceError::NonPositiveAlpha { t, value });
        }
    }
    let map = integral.to_monotone_map()?;
    Ok(Reparametrized {
        system: sys.clone(),
        alpha: alpha.clone(),
        alpha_dot: alpha.derivative(),
        map,
    })
}

/// A reparametrized system: coefficient evaluation in the new time `s`,
/// the monotone map `s(t)`, and integration in `s`.
#[derive(Debug, Clone)]
pub struct Reparametrized {
    system: SecondOrderSystem,
    alpha: Expr,
    alpha_dot: Expr,
    map: MonotoneMap,
}

impl Reparametrized {
    /// The tabulated map `t -> s`, with `s(t0) = 0`.
    pub fn map(&self) -> &MonotoneMap {
        &self.map
    }

    /// `[s0, s1]`, the image of the time window.
    pub fn s_range(&self) -> (f64, f64) {
        self.map.range()
    }

    /// `t(s)` by monotone inversion.
    pub fn time_for(&self, s: f64) -> Result<f64, ReduceError> {
        Ok(self.map.invert(s)?)
    }

    /// `s(t)`.
    pub fn s_for(&self, t: f64) -> Result<f64, ReduceError> {
        Ok(self.map.value(t)?)
    }

    /// All three transformed coefficients at `s` (one inversion per call).
    pub fn coefficients_at(&self, s: f64) -> Result<(f64, f64, f64), ReduceError> {
        self.coefficients_at_time(self.time_for(s)?)
    }

    /// The transformed coefficients evaluated directly at original time
    /// `t`, skipping the inversion when `t` is already known.
    pub fn coefficients_at_time(&self, t: f64) -> Result<(f64, f64, f64), ReduceError> {
        let alpha = self.alpha.eval(t)?;
        let alpha_dot = self.alpha_dot.eval(t)?;
        let a = self.system.a.eval(t)?;
        let b = self.system.b.eval(t)?;
        let c = self.system.c.eval(t)?;
        let alpha_sq = alpha * alpha;
        Ok(((a - alpha_dot / alpha) / alpha, b / alpha_sq, c / alpha_sq))
    }

    /// Velocity coefficient `a_s(s)`.
    pub fn a_at(&self, s: f64) -> Result<f64, ReduceError> {
        Ok(self.coefficients_at(s)?.0)
    }

    /// Position coefficient `b_s(s)`.
    pub fn b_at(&self, s: f64) -> Result<f64, ReduceError> {
        Ok(self.coefficients_at(s)?.1)
    }

    /// Nonlinear coefficient `c_s(s)`.
    pub fn c_at(&self, s: f64) -> Result<f64, ReduceError> {
        Ok(self.coefficients_at(s)?.2)
    }

    /// Converts a velocity `dx/dt` at time `t` into the slope `dx/ds`.
    pub fn slope_from_velocity(&self, t: f64, v: f64) -> Result<f64, ReduceError> {
        Ok(v / self.alpha.eval(t)?)
    }

    /// Integrates the transformed equation over the full `s` window from
    /// `x(s0) = x0`, `dx/ds(s0) = xp0`.
    pub fn integrate_in_s(
        &self,
        x0: f64,
        xp0: f64,
        step: f64,
    ) -> Result<Trajectory, ReduceError> {
        let field = |s: f64, state: &[f64], out: &mut [f64]| -> Result<(), OdeError> {
            let (a_s, b_s, c_s) = self.coefficients_at(s).map_err(|e| reduce_to_ode(e, s))?;
            let x = state[0];
            let v = state[1];
            out[0] = v;
            let cubic = if c_s == 0.0 { 0.0 } else { c_s / (x * x * x) };
            out[1] = a_s * v + b_s * x + cubic;
            Ok(())
        };
        let guard =
            if is_const(&self.system.c, 0.0) { SingularGuard::none() } else { SingularGuard::on(&[0]) };
        let (s0, s1) = self.s_range();
        Ok(rk4_integrate(field, s0, s1, step, &[x0, xp0], &guard)?)
    }

    /// Position at original time `t` read off an `s`-domain trajectory.
    pub fn position_at_time(&self, in_s: &Trajectory, t: f64) -> Result<f64, ReduceError> {
        let s = self.s_for(t)?;
        Ok(in_s.sample_at(s)?[0])
    }
}

/// The velocity gauge `x = x'`, `v = alpha(t) v' + beta(t) x'` with
/// `alpha` nonvanishing.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform {
    alpha: Expr,
    beta: Expr,
}

impl GaugeTransform {
    pub fn new(alpha: Expr, beta: Expr) -> GaugeTransform {
        GaugeTransform { alpha, beta }
    }

    pub fn identity() -> GaugeTransform {
        GaugeTransform { alpha: Expr::one(), beta: Expr::zero() }
    }

    pub fn alpha(&self) -> &Expr {
        &self.alpha
    }

    pub fn beta(&self) -> &Expr {
        &self.beta
    }

    /// The inverse gauge `x' = x`, `v' = -(beta/alpha) x + (1/alpha) v`,
    /// i.e. the pair `(1/alpha, -beta/alpha)`.
    pub fn inverse(&self) -> GaugeTransform {
        GaugeTransform {
            alpha: over(Expr::one(), self.alpha.clone()),
            beta: -over(self.beta.clone(), self.alpha.clone()),
        }
    }
}

/// Coefficients of the gauge-transformed first-order system
/// `x' = d v + e x`, `v' = a v + b x + c / x^3`. Second-order inputs have
/// `d = 1`, `e = 0`; only systems of that shape correspond to a
/// second-order equation again.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCoefficients {
    a: Expr,
    b: Expr,
    c: Expr,
    d: Expr,
    e: Expr,
}

impl TransformedCoefficients {
    /// Embeds a second-order system: `d = 1`, `e = 0`.
    pub fn from_system(sys: &SecondOrderSystem) -> TransformedCoefficients {
        TransformedCoefficients {
            a: sys.a.clone(),
            b: sys.b.clone(),
            c: sys.c.clone(),
            d: Expr::one(),
            e: Expr::zero(),
        }
    }

    pub fn a(&self) -> &Expr {
        &self.a
    }

    pub fn b(&self) -> &Expr {
        &self.b
    }

    pub fn c(&self) -> &Expr {
        &self.c
    }

    pub fn d(&self) -> &Expr {
        &self.d
    }

    pub fn e(&self) -> &Expr {
        &self.e
    }

    /// Applies a gauge. For `d = 1`, `e = 0` inputs this is the familiar
    /// five-equation law `a' = a - beta - alpha'/alpha`,
    /// `b' = (b + a beta - beta^2 - beta')/alpha`, `c' = c/alpha`,
    /// `d' = alpha`, `e' = beta`; the general form below extends it to
    /// arbitrary `(d, e)` so that transforms compose and invert.
    pub fn transform(&self, g: &GaugeTransform) -> TransformedCoefficients {
        let alpha = g.alpha.clone();
        let beta = g.beta.clone();
        let d_beta = times(self.d.clone(), beta.clone());
        let log_slope = over(g.alpha.derivative(), alpha.clone());
        let b_sum = minus(
            minus(
                minus(
                    plus(self.b.clone(), times(self.a.clone(), beta.clone())),
                    times(self.e.clone(), beta.clone()),
                ),
                times(self.d.clone(), square(beta.clone())),
            ),
            g.beta.derivative(),
        );
        TransformedCoefficients {
            a: minus(minus(self.a.clone(), d_beta.clone()), log_slope),
            b: over(b_sum, alpha.clone()),
            c: over(self.c.clone(), alpha.clone()),
            d: times(self.d.clone(), alpha),
            e: plus(self.e.clone(), d_beta),
        }
    }
}

/// Gauge-transforms a second-order system, returning all five coefficients
/// of the resulting first-order family member.
pub fn quasi_lie_transform(
    sys: &SecondOrderSystem,
    g: &GaugeTransform,
) -> TransformedCoefficients {
    TransformedCoefficients::from_system(sys).transform(g)
}

/// Outcome of [`reducibility_check`].
#[derive(Debug, Clone)]
pub enum Reducibility {
    /// The condition `a = c'/(2c)` holds on the grid: the gauge
    /// `alpha = sqrt(c/k)`, `beta = 0` (normalized so `alpha(t0) = 1`,
    /// hence `k = c(t0)`) lands in Ermakov form
    /// `x' = alpha v`, `v' = -W^2 x + alpha k / x^3` with
    /// `W^2 = -b / alpha`.
    Pass {
        k: f64,
        gauge: GaugeTransform,
        omega_sq: Expr,
        max_residual: f64,
        /// The residual also vanished to 1e-13 at randomized probe points,
        /// evidence that the condition holds identically rather than only
        /// on the grid.
        exact: bool,
    },
    /// The condition fails; the worst residual and where it occurred.
    Fail { max_residual: f64, at_t: f64 },
}

impl Reducibility {
    pub fn passed(&self) -> bool {
        matches!(self, Reducibility::Pass { .. })
    }
}

/// Tests the reducibility condition `a(t) = c'(t)/(2 c(t))` on a uniform
/// grid over `[t0, t1]` and, on success, returns the Ermakov-form gauge.
///
/// The residual `r = c'/(2c) - a` is assembled symbolically and scanned on
/// `grid_points` nodes; PASS means `max|r| <= 1e-9 (1 + max|a|)`. The
/// coupling must keep one sign across the grid. The `seed` feeds the
/// randomized off-grid probes behind the `exact` flag.
pub fn reducibility_check(
    sys: &SecondOrderSystem,
    t0: f64,
    t1: f64,
    grid_points: usize,
    seed: u64,
) -> Result<Reducibility, ReduceError> {
    if grid_points < 2 {
        return Err(ReduceError::BadGrid { points: grid_points });
    }
    let residual = minus(
        over(sys.c.derivative(), times(Expr::constant(2.0), sys.c.clone())),
        sys.a.clone(),
    );

    let c0 = sys.c.eval(t0)?;
    let c_sign = c0.signum();
    let mut max_residual = 0.0f64;
    let mut at_t = t0;
    let mut max_a = 0.0f64;
    let span = t1 - t0;
    for i in 0..grid_points {
        let t = t0 + span * (i as f64) / ((grid_points - 1) as f64);
        let c = sys.c.eval(t)?;
        if c == 0.0 || c.signum() != c_sign {
            return Err(ReduceError::CouplingSignChange { t });
        }
        let r = residual.eval(t)?.abs();
        if r > max_residual {
            max_residual = r;
            at_t = t;
        }
        max_a = max_a.max(sys.a.eval(t)?.abs());
    }

    if max_residual > REDUCIBILITY_TOL * (1.0 + max_a) {
        return Ok(Reducibility::Fail { max_residual, at_t });
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut exact = true;
    for _ in 0..EXACT_PROBES {
        let t = t0 + span * rng.random_range(0.0..1.0);
        if residual.eval(t)?.abs() > EXACT_PROBE_TOL {
            exact = false;
            break;
        }
    }

    let k = c0;
    let alpha = over(sys.c.clone(), Expr::constant(k)).sqrt();
    let omega_sq = -over(sys.b.clone(), alpha.clone());
    let gauge = GaugeTransform { alpha, beta: Expr::zero() };
    Ok(Reducibility::Pass { k, gauge, omega_sq, max_residual, exact })
}

/// Chini's equation `x'' + (p'/2p) x' + (q/p) x = k/(p x^3)`:
/// `a = -p'/(2p)`, `b = -q/p`, `c = k/p`. Always reducible, with gauge
/// `alpha = 1/sqrt(p)` for `p(t0) = 1`.
pub fn chini(p: &Expr, q: &Expr, k: f64) -> SecondOrderSystem {
    SecondOrderSystem {
        a: -over(p.derivative(), times(Expr::constant(2.0), p.clone())),
        b: -over(q.clone(), p.clone()),
        c: over(Expr::constant(k), p.clone()),
    }
}

/// Walter's equation `x'' + (p'/p) x' + (q/p) x = k/(p^2 x^3)`:
/// `a = -p'/p`, `b = -q/p`, `c = k/p^2`. Always reducible, with gauge
/// `alpha = 1/p` for `p(t0) = 1`.
pub fn walter(p: &Expr, q: &Expr, k: f64) -> SecondOrderSystem {
    SecondOrderSystem {
        a: -over(p.derivative(), p.clone()),
        b: -over(q.clone(), p.clone()),
        c: over(Expr::constant(k), p.clone().squared()),
    }
}

/// The Colegrave-Abdalla equation `x'' - (2p'/p) x' + p^2 x = k p^4/x^3`:
/// `a = 2p'/p`, `b = -p^2`, `c = k p^4`. Always reducible, with gauge
/// `alpha = p^2` for `p(t0) = 1`.
pub fn colegrave_abdalla(p: &Expr, k: f64) -> SecondOrderSystem {
    SecondOrderSystem {
        a: over(times(Expr::constant(2.0), p.derivative()), p.clone()),
        b: -p.clone().squared(),
        c: times(Expr::constant(k), p.clone().pow(Expr::constant(4.0))),
    }
}

/// The Caldirola-Kanai oscillator `x'' + gamma0 x' + w^2 x = k0
/// exp(-2 gamma0 t)/x^3` as a family member: `a = -gamma0`, `b = -w^2`,
/// `c = k0 exp(-2 gamma0 t)`.
pub fn caldirola_kanai(gamma0: f64, omega: &Expr, k0: f64) -> SecondOrderSystem {
    GeneralizedPinney::caldirola_kanai(gamma0, omega.clone(), k0).to_system()
}

/// Parameters for [`named_system`]. Unused fields may stay `None`;
/// `q`, `k`, `k0` default to one and `omega` to the constant frequency one.
#[derive(Debug, Clone, Default)]
pub struct NamedSystemParams {
    pub p: Option<Expr>,
    pub q: Option<Expr>,
    pub k: Option<f64>,
    pub gamma0: Option<f64>,
    pub omega: Option<Expr>,
    pub k0: Option<f64>,
}

/// Looks up a literature system by name: `chini`, `walter`,
/// `colegrave-abdalla`, or `caldirola-kanai` (hyphen or underscore).
pub fn named_system(
    name: &str,
    params: &NamedSystemParams,
) -> Result<SecondOrderSystem, ReduceError> {
    let normalized = name.to_ascii_lowercase().replace('_', "-");
    let k = params.k.unwrap_or(1.0);
    let q = params.q.clone().unwrap_or_else(Expr::one);
    let need_p = |system: &'static str| {
        params.p.clone().ok_or(ReduceError::MissingParameter { system, name: "p" })
    };
    match normalized.as_str() {
        "chini" => Ok(chini(&need_p("chini")?, &q, k)),
        "walter" => Ok(walter(&need_p("walter")?, &q, k)),
        "colegrave-abdalla" => Ok(colegrave_abdalla(&need_p("colegrave-abdalla")?, k)),
        "caldirola-kanai" => {
            let gamma0 = params.gamma0.ok_or(ReduceError::MissingParameter {
                system: "caldirola-kanai",
                name: "gamma0",
            })?;
            let omega = params.omega.clone().unwrap_or_else(Expr::one);
            Ok(caldirola_kanai(gamma0, &omega, params.k0.unwrap_or(1.0)))
        }
        _ => Err(ReduceError::UnknownSystem { name: name.to_owned() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn expr(src: &str) -> Expr {
        parse_expr(src).unwrap()
    }

    #[test]
    fn zeta_is_constant_without_damping() {
        let table = zeta_factor(Expr::zero(), 2.5, 0.0).unwrap().table(5.0, 1e-2).unwrap();
        for t in [0.0, 1.3, 5.0] {
            assert_eq!(table.value_at(t).unwrap(), 2.5);
            assert_eq!(table.derivative_at(t).unwrap(), 0.0);
        }
    }

    // Frozen values: e^-1 = 0.3678794411714423 and
    // Int_0^3 dt/(1+t) = log 4, so zeta(3) = exp(-log(4)/2) = 1/2.
    #[test]
    fn zeta_matches_closed_forms() {
        let constant = zeta_factor(expr("2"), 1.0, 0.0).unwrap().table(2.0, 1e-3).unwrap();
        let z1 = constant.value_at(1.0).unwrap();
        assert!((z1 - 0.3678794411714423).abs() <= 1e-9, "zeta(1) = {z1}");

        let hyperbolic = zeta_factor(expr("1/(1+t)"), 1.0, 0.0).unwrap().table(4.0, 1e-3).unwrap();
        let z3 = hyperbolic.value_at(3.0).unwrap();
        assert!((z3 - 0.5).abs() <= 1e-8, "zeta(3) = {z3}");
    }

    #[test]
    fn zeta_rejects_zero_scale() {
        assert!(matches!(
            zeta_factor(Expr::zero(), 0.0, 0.0),
            Err(ReduceError::ZeroScale { .. })
        ));
    }

    #[test]
    fn reduced_frequency_matches_hand_values() {
        // gamma = 0: W^2 = w^2.
        let plain = omega_reduced(&expr("t"), &Expr::zero());
        assert!((plain.eval(3.0).unwrap() - 9.0).abs() <= 1e-15);

        // Constant gamma0 = 3: W^2 = w^2 - 9/4.
        let damped = omega_reduced(&expr("t"), &expr("3"));
        assert!((damped.eval(2.0).unwrap() - (4.0 - 2.25)).abs() <= 1e-15);

        // gamma = 2t, w = 2: W^2 = 4 - t^2 - 1, so W^2(1) = 2.
        let ramp = omega_reduced(&expr("2"), &expr("2*t"));
        assert!((ramp.eval(1.0).unwrap() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn matched_coupling_decay_reduces_to_constant() {
        // gamma0 = 1, k(t) = e^{-2t}: zeta^4 = e^{-2t} exactly compensates.
        let sys = GeneralizedPinney::caldirola_kanai(1.0, Expr::one(), 1.0);
        let reduced = remove_damping(&sys, 1.0, 0.0).unwrap().tabulate(5.0, 1e-3).unwrap();
        for t in [0.0, 0.7, 2.5, 4.99, 5.0] {
            let c = reduced.coupling_at(t).unwrap();
            assert!((c - 1.0).abs() <= 1e-12, "coupling at {t} = {c}");
        }
    }

    #[test]
    fn zero_damping_reduction_is_the_identity() {
        let sys = GeneralizedPinney::new(Expr::zero(), Expr::one(), expr("2"));
        let reduced = remove_damping(&sys, 1.0, 0.0).unwrap().tabulate(3.0, 1e-2).unwrap();
        assert_eq!(reduced.zeta_at(1.7).unwrap(), 1.0);
        assert_eq!(reduced.coupling_at(1.7).unwrap(), 2.0);
        assert!((reduced.omega_sq_at(0.4).unwrap() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn rescaled_solution_tracks_the_damped_equation() {
        // gamma = 1, w = 1, k = 1 on [0, 2]: integrate both pictures and
        // compare x against zeta * y.
        let sys = GeneralizedPinney::new(Expr::one(), Expr::one(), Expr::one());
        let step = 1e-3;
        let original = sys.to_system().integrate(1.0, 0.0, 0.0, 2.0, step).unwrap();
        let reduced = remove_damping(&sys, 1.0, 0.0).unwrap().tabulate(2.0, step).unwrap();
        let (y0, vy0) = reduced.matched_initial(1.0, 0.0).unwrap();
        let in_y = reduced.integrate(y0, vy0, step).unwrap();
        let pulled = reduced.pull_back(&in_y).unwrap();
        assert!(original.shares_grid(&pulled));
        let mut worst = 0.0f64;
        for (a, b) in original.iter().zip(pulled.iter()) {
            worst = worst.max((a.1[0] - b.1[0]).abs()).max((a.1[1] - b.1[1]).abs());
        }
        assert!(worst <= 1e-6, "max pull-back mismatch {worst}");
    }

    #[test]
    fn identity_reparametrization_shifts_time_only() {
        let sys = SecondOrderSystem::new(expr("t"), expr("1+t"), Expr::one());
        let rep = reparametrize(&sys, &Expr::one(), 1.0, 3.0, 1e-2).unwrap();
        let (s0, s1) = rep.s_range();
        assert_eq!(s0, 0.0);
        assert!((s1 - 2.0).abs() <= 1e-12);
        // s = t - 1, so coefficients at s are the originals at t = s + 1.
        let (a, b, c) = rep.coefficients_at(0.5).unwrap();
        assert!((a - 1.5).abs() <= 1e-9);
        assert!((b - 2.5).abs() <= 1e-9);
        assert!((c - 1.0).abs() <= 1e-9);
    }

    // Frozen value: with alpha = 1/(1+t), s(t) = log(1+t), so
    // t(log 2) = 1 with log 2 = 0.6931471805599453.
    #[test]
    #[allow(clippy::approx_constant)]
    fn reciprocal_rate_gives_logarithmic_map() {
        let sys = SecondOrderSystem::new(Expr::zero(), Expr::one(), Expr::one());
        let rep = reparametrize(&sys, &expr("1/(1+t)"), 0.0, 5.0, 1e-3).unwrap();
        let t = rep.time_for(0.6931471805599453).unwrap();
        assert!((t - 1.0).abs() <= 1e-8, "t(log 2) = {t}");
    }

    #[test]
    fn velocity_killing_rate_zeroes_the_slope_coefficient_exactly() {
        let sys = SecondOrderSystem::new(Expr::one(), -Expr::one(), Expr::one());
        let rep = reparametrize(&sys, &Expr::time().exp(), 0.0, 2.0, 1e-3).unwrap();
        let (_, s1) = rep.s_range();
        for i in 0..=10 {
            let s = s1 * (i as f64) / 10.0;
            assert_eq!(rep.a_at(s).unwrap(), 0.0, "a_s at s = {s}");
        }
    }

    #[test]
    fn nonpositive_rate_is_rejected() {
        let sys = SecondOrderSystem::new(Expr::zero(), Expr::one(), Expr::one());
        let err = reparametrize(&sys, &expr("1-t"), 0.0, 2.0, 1e-2).unwrap_err();
        assert!(matches!(err, ReduceError::NonPositiveAlpha { .. }), "got {err}");
    }

    #[test]
    fn identity_gauge_preserves_coefficients_structurally() {
        let sys = SecondOrderSystem::new(expr("sin(t)"), expr("1+t^2"), expr("exp(-t)"));
        let out = quasi_lie_transform(&sys, &GaugeTransform::identity());
        assert_eq!(out.a(), sys.a());
        assert_eq!(out.b(), sys.b());
        assert_eq!(out.c(), sys.c());
        assert_eq!(out.d(), &Expr::one());
        assert_eq!(out.e(), &Expr::zero());
    }

    #[test]
    fn gauge_then_inverse_recovers_coefficients() {
        let sys = SecondOrderSystem::new(expr("sin(t)"), expr("1+t^2"), expr("exp(-t)"));
        let g = GaugeTransform::new(expr("exp(-0.5*t)"), expr("sin(t)/4"));
        let round = quasi_lie_transform(&sys, &g).transform(&g.inverse());
        for i in 0..=30 {
            let t = 0.1 * f64::from(i);
            let close = |lhs: &Expr, rhs: &Expr| {
                let l = lhs.eval(t).unwrap();
                let r = rhs.eval(t).unwrap();
                assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()), "{lhs} vs {rhs} at {t}");
            };
            close(round.a(), sys.a());
            close(round.b(), sys.b());
            close(round.c(), sys.c());
            close(round.d(), &Expr::one());
            close(round.e(), &Expr::zero());
        }
    }

    #[test]
    fn exponential_gauge_flattens_constant_damping() {
        // a = -1, b = -1, c = e^{-2t}; alpha = e^{-t} makes a' vanish and
        // the effective coupling c'/alpha constant.
        let sys = caldirola_kanai(1.0, &Expr::one(), 1.0);
        let g = GaugeTransform::new(expr("exp(-t)"), Expr::zero());
        let out = quasi_lie_transform(&sys, &g);
        for i in 0..=20 {
            let t = 0.25 * f64::from(i);
            let a = out.a().eval(t).unwrap();
            assert!(a.abs() <= 1e-13, "a' at {t} = {a}");
            let effective = out.c().eval(t).unwrap() / g.alpha().eval(t).unwrap();
            assert!((effective - 1.0).abs() <= 1e-13, "c'/alpha at {t} = {effective}");
        }
    }

    #[test]
    fn literature_systems_pass_reducibility_with_the_quoted_gauges() {
        let cases: [(SecondOrderSystem, Expr); 3] = [
            (chini(&expr("(1+t)^2"), &Expr::one(), 1.0), expr("1/sqrt((1+t)^2)")),
            (walter(&expr("1+t^2"), &Expr::one(), 2.0), expr("1/(1+t^2)")),
            (colegrave_abdalla(&expr("exp(t)"), 1.0), expr("exp(2*t)")),
        ];
        for (sys, alpha_expected) in &cases {
            let result = reducibility_check(sys, 0.0, 5.0, DEFAULT_GRID_POINTS, DEFAULT_SEED)
                .unwrap();
            let Reducibility::Pass { k, gauge, omega_sq, max_residual, exact } = result else {
                panic!("expected PASS, got {result:?}");
            };
            assert!(exact, "expected identically-zero residual, max {max_residual}");
            assert!((k - sys.c().eval(0.0).unwrap()).abs() <= 1e-15);
            for i in 0..=25 {
                let t = 0.2 * f64::from(i);
                let got = gauge.alpha().eval(t).unwrap();
                let want = alpha_expected.eval(t).unwrap();
                assert!(
                    (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                    "alpha({t}) = {got}, expected {want}"
                );
                // Ermakov form: c'/alpha = k and W^2 = -b/alpha, both finite.
                let coupling = sys.c().eval(t).unwrap() / got;
                assert!((coupling / got - k).abs() <= 1e-10 * k.abs());
                assert!(omega_sq.eval(t).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn constant_mismatch_fails_reducibility() {
        let sys = SecondOrderSystem::new(Expr::one(), Expr::zero(), Expr::one());
        let result = reducibility_check(&sys, 0.0, 5.0, 101, DEFAULT_SEED).unwrap();
        let Reducibility::Fail { max_residual, .. } = result else {
            panic!("expected FAIL, got {result:?}");
        };
        assert!((max_residual - 1.0).abs() <= 1e-15, "residual {max_residual}");
    }

    #[test]
    fn sign_changing_coupling_is_rejected() {
        let sys = SecondOrderSystem::new(Expr::zero(), Expr::zero(), expr("1-t"));
        let err = reducibility_check(&sys, 0.0, 2.0, 101, DEFAULT_SEED).unwrap_err();
        assert!(matches!(err, ReduceError::CouplingSignChange { .. }), "got {err}");
    }

    #[test]
    fn named_lookup_covers_the_catalog_and_rejects_strangers() {
        let params = NamedSystemParams {
            p: Some(Expr::one()),
            q: Some(expr("2")),
            k: Some(3.0),
            ..NamedSystemParams::default()
        };
        // Constant p = 1 collapses Chini to a plain Milne-Pinney equation.
        let sys = named_system("chini", &params).unwrap();
        assert_eq!(sys.a().eval(1.0).unwrap(), 0.0);
        assert_eq!(sys.b().eval(1.0).unwrap(), -2.0);
        assert_eq!(sys.c().eval(1.0).unwrap(), 3.0);

        assert!(named_system("walter", &params).is_ok());
        assert!(named_system("Colegrave_Abdalla", &params).is_ok());
        assert!(matches!(
            named_system("caldirola-kanai", &params),
            Err(ReduceError::MissingParameter { name: "gamma0", .. })
        ));
        assert!(matches!(
            named_system("chini", &NamedSystemParams::default()),
            Err(ReduceError::MissingParameter { name: "p", .. })
        ));
        assert!(matches!(
            named_system("airy", &params),
            Err(ReduceError::UnknownSystem { .. })
        ));
    }
}
