//! Fixed-step numerical integration and quadrature.
//!
//! The integrator is the classical fourth-order Runge-Kutta scheme with a
//! uniform step; the final step is shortened so the last sample lands exactly
//! on the requested end time. State updates use compensated (Kahan) summation
//! so that rounding stays well below the `O(h^4)` truncation error even over
//! tens of thousands of steps, and an exact fixed point of the field is
//! preserved bit-for-bit.
//!
//! Building on the integrator:
//!
//! * [`cumulative_integral`] computes `I(t) = ∫ e(t') dt'` by augmenting the
//!   state with `İ = e(t)`, returning a table that interpolates `I` at
//!   arbitrary points with a cubic Hermite rule (the integrand supplies the
//!   exact endpoint slopes);
//! * [`MonotoneMap`] stores a strictly increasing sampled map `t ↦ s` and
//!   inverts it by bracketing bisection refined with local interpolation.
//!
//! Singular right-hand sides such as `1/x^3` are protected by a
//! [`SingularGuard`]: integration aborts with the failing position and time
//! as soon as a designated component enters the guard band, instead of
//! producing infinities.

use thiserror::Error;

use crate::expr::{EvalError, Expr};

/// Default singularity guard band: integration aborts when a designated
/// component has absolute value below this.
pub const DEFAULT_X_MIN: f64 = 1e-8;

/// Tolerance target for [`MonotoneMap::invert`], relative to `1 + |s|`.
pub const INVERT_TOL: f64 = 1e-10;

/// Integration and interpolation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time window is empty: t1 = {t1} does not exceed t0 = {t0}")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("initial state must be non-empty and finite")]
    BadInitialState,
    #[error("component {component} hit the singular guard band at t = {t}: |{value}| < {x_min}")]
    Singularity { component: usize, t: f64, value: f64, x_min: f64 },
    #[error("component {component} became non-finite at t = {t}")]
    NonFinite { component: usize, t: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("t = {t} is outside the sampled range [{min}, {max}]")]
    OutOfRange { t: f64, min: f64, max: f64 },
    #[error("samples must be strictly increasing: violation at index {index}")]
    NotIncreasing { index: usize },
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("trajectory states must share one dimension")]
    RaggedStates,
}

/// Abort condition for state components that must stay away from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularGuard {
    components: Vec<usize>,
    x_min: f64,
}

impl SingularGuard {
    /// No guarded components.
    pub fn none() -> Self {
        SingularGuard { components: Vec::new(), x_min: DEFAULT_X_MIN }
    }

    /// Guard the listed components with the default band [`DEFAULT_X_MIN`].
    pub fn on(components: &[usize]) -> Self {
        SingularGuard { components: components.to_vec(), x_min: DEFAULT_X_MIN }
    }

    /// Replace the guard band.
    pub fn with_x_min(mut self, x_min: f64) -> Self {
        self.x_min = x_min;
        self
    }

    /// The active guard band.
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    fn check(&self, t: f64, state: &[f64]) -> Result<(), OdeError> {
        for &i in &self.components {
            let value = state[i];
            if value.abs() < self.x_min {
                return Err(OdeError::Singularity { component: i, t, value, x_min: self.x_min });
            }
        }
        for (i, value) in state.iter().enumerate() {
            if !value.is_finite() {
                return Err(OdeError::NonFinite { component: i, t });
            }
        }
        Ok(())
    }
}

impl Default for SingularGuard {
    fn default() -> Self {
        SingularGuard::none()
    }
}

/// A uniformly sampled solution.
///
/// Sample `i` sits at `t0 + i*step`, except that the final sample sits at the
/// exact end time of the integration window, which coincides with the grid
/// when the window is a whole number of steps. Times are stored implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    step: f64,
    end: f64,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Builds a trajectory from uniformly spaced states (the final sample on
    /// the grid). All states must share one nonzero dimension.
    pub fn from_uniform(t0: f64, step: f64, states: Vec<Vec<f64>>) -> Result<Self, OdeError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(OdeError::BadStep(step));
        }
        if states.len() < 2 {
            return Err(OdeError::TooFewSamples(states.len()));
        }
        let dim = states[0].len();
        if dim == 0 || states.iter().any(|s| s.len() != dim) {
            return Err(OdeError::RaggedStates);
        }
        let end = t0 + (states.len() - 1) as f64 * step;
        Ok(Trajectory { t0, step, end, states })
    }

    fn new(t0: f64, step: f64, end: f64, states: Vec<Vec<f64>>) -> Self {
        Trajectory { t0, step, end, states }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Exact time of the final sample.
    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.states.len() {
            self.end
        } else {
            self.t0 + i as f64 * self.step
        }
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    /// Iterates over `(time, state)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.states.iter().enumerate().map(|(i, s)| (self.time(i), s.as_slice()))
    }

    /// Whether two trajectories share `t0`, `step`, and length.
    pub fn shares_grid(&self, other: &Trajectory) -> bool {
        self.t0 == other.t0 && self.step == other.step && self.len() == other.len()
    }

    /// Interpolates the state at an arbitrary `t` inside the sampled window
    /// with a cubic Hermite rule; segment slopes come from central
    /// differences. Interpolation error is `O(step^3)`.
    pub fn sample_at(&self, t: f64) -> Result<Vec<f64>, OdeError> {
        let n = self.states.len();
        let lo = self.t0.min(self.end);
        let hi = self.t0.max(self.end);
        if !(lo..=hi).contains(&t) {
            return Err(OdeError::OutOfRange { t, min: lo, max: hi });
        }
        // Locate the segment; the last segment may be shorter than `step`.
        let mut i = ((t - self.t0) / self.step).floor() as usize;
        if i + 2 > n {
            i = n - 2;
        }
        if t >= self.time(i + 1) && i + 2 < n {
            i += 1;
        }
        let (ta, tb) = (self.time(i), self.time(i + 1));
        let h = tb - ta;
        let u = ((t - ta) / h).clamp(0.0, 1.0);
        let slope = |j: usize, col: usize| -> f64 {
            if j == 0 {
                (self.states[1][col] - self.states[0][col]) / (self.time(1) - self.time(0))
            } else if j + 1 == n {
                (self.states[n - 1][col] - self.states[n - 2][col])
                    / (self.time(n - 1) - self.time(n - 2))
            } else {
                (self.states[j + 1][col] - self.states[j - 1][col])
                    / (self.time(j + 1) - self.time(j - 1))
            }
        };
        let dim = self.dim();
        let mut out = Vec::with_capacity(dim);
        for col in 0..dim {
            let pa = self.states[i][col];
            let pb = self.states[i + 1][col];
            out.push(hermite(u, h, pa, slope(i, col), pb, slope(i + 1, col)));
        }
        Ok(out)
    }
}

/// Cubic Hermite basis on `u` in `[0, 1]` with segment width `h`.
fn hermite(u: f64, h: f64, pa: f64, ma: f64, pb: f64, mb: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * pa
        + (u3 - 2.0 * u2 + u) * h * ma
        + (-2.0 * u3 + 3.0 * u2) * pb
        + (u3 - u2) * h * mb
}

/// Step schedule over `[t0, t1]`: `n` RK4 steps, where step `i` runs from
/// `time(i)` to `time(i+1)`. When the window is a whole number of steps
/// (within 1e-9 relative), every node lies on the uniform grid; otherwise
/// the final step is shortened to land exactly on `t1`.
struct Schedule {
    t0: f64,
    step: f64,
    t1: f64,
    n_steps: usize,
}

impl Schedule {
    fn new(t0: f64, t1: f64, step: f64) -> Result<Self, OdeError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(OdeError::BadStep(step));
        }
        if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
            return Err(OdeError::EmptyWindow { t0, t1 });
        }
        let span = t1 - t0;
        let whole = (span / step).round();
        let n_steps = if whole >= 1.0 && (whole * step - span).abs() <= 1e-9 * step.max(span) {
            whole as usize
        } else {
            (span / step).floor() as usize + 1
        };
        Ok(Schedule { t0, step, t1, n_steps })
    }

    fn node(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.step
        }
    }
}

/// Integrates `dy/dt = field(t, y)` with classical RK4 at a fixed step.
///
/// Samples run from `t0` to `t1` inclusive; the final step is shortened to
/// land exactly on `t1`. The `guard` aborts integration when a designated
/// component enters its band, and any non-finite state aborts with the
/// failing component and time. Integration is a pure function of its inputs.
pub fn rk4_integrate<F>(
    field: F,
    t0: f64,
    t1: f64,
    step: f64,
    initial: &[f64],
    guard: &SingularGuard,
) -> Result<Trajectory, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), OdeError>,
{
    let schedule = Schedule::new(t0, t1, step)?;
    let dim = initial.len();
    if dim == 0 || initial.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::BadInitialState);
    }

    let mut state = initial.to_vec();
    let mut compensation = vec![0.0; dim];
    let mut stage = vec![0.0; dim];
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];

    guard.check(t0, &state)?;
    let mut states = Vec::with_capacity(schedule.n_steps + 1);
    states.push(state.clone());

    for i in 0..schedule.n_steps {
        let t = schedule.node(i);
        let t_next = schedule.node(i + 1);
        let h = t_next - t;
        let half = 0.5 * h;

        field(t, &state, &mut k1)?;
        for j in 0..dim {
            stage[j] = state[j] + half * k1[j];
        }
        field(t + half, &stage, &mut k2)?;
        for j in 0..dim {
            stage[j] = state[j] + half * k2[j];
        }
        field(t + half, &stage, &mut k3)?;
        for j in 0..dim {
            stage[j] = state[j] + h * k3[j];
        }
        field(t_next, &stage, &mut k4)?;

        let sixth = h / 6.0;
        for j in 0..dim {
            let delta = sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            // Kahan update keeps accumulated rounding below truncation error.
            let y = delta - compensation[j];
            let sum = state[j] + y;
            compensation[j] = (sum - state[j]) - y;
            state[j] = sum;
        }

        guard.check(t_next, &state)?;
        states.push(state.clone());
    }

    Ok(Trajectory::new(schedule.t0, schedule.step, schedule.t1, states))
}

/// Sampled cumulative integral `I(t) = ∫_{t0}^{t} e(t') dt'`.
///
/// Node values come from RK4 quadrature; between nodes a cubic Hermite rule
/// interpolates with the exact slopes `İ = e(t)`, so off-node queries keep
/// `O(step^4)` accuracy (RK4's own order).
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    times: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Integrates `e` from `t0` to `t1` by augmenting the RK4 state with
/// `İ = e(t)`, `I(t0) = 0`. Domain violations of `e` propagate.
pub fn cumulative_integral(
    e: &Expr,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<CumulativeIntegral, OdeError> {
    let field = |t: f64, _y: &[f64], dy: &mut [f64]| -> Result<(), OdeError> {
        dy[0] = e.eval(t)?;
        Ok(())
    };
    let trajectory = rk4_integrate(field, t0, t1, step, &[0.0], &SingularGuard::none())?;
    let mut times = Vec::with_capacity(trajectory.len());
    let mut values = Vec::with_capacity(trajectory.len());
    let mut slopes = Vec::with_capacity(trajectory.len());
    for (t, state) in trajectory.iter() {
        times.push(t);
        values.push(state[0]);
        slopes.push(e.eval(t)?);
    }
    Ok(CumulativeIntegral { times, values, slopes })
}

impl CumulativeIntegral {
    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t1(&self) -> f64 {
        *self.times.last().expect("cumulative integral has samples")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Node times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Node values of `I`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value of `I` at any `t` within the sampled window.
    pub fn value_at(&self, t: f64) -> Result<f64, OdeError> {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return Err(OdeError::OutOfRange { t, min: self.times[0], max: self.times[n - 1] });
        }
        let i = segment_index(&self.times, t);
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        let u = ((t - ta) / h).clamp(0.0, 1.0);
        Ok(hermite(u, h, self.values[i], self.slopes[i], self.values[i + 1], self.slopes[i + 1]))
    }

    /// Reinterprets the samples as a monotone map `t ↦ I(t)`; fails when the
    /// node values are not strictly increasing.
    pub fn to_monotone_map(&self) -> Result<MonotoneMap, OdeError> {
        MonotoneMap::with_slopes(self.times.clone(), self.values.clone(), self.slopes.clone())
    }
}

/// Index of the segment containing `t` in a sorted node list.
fn segment_index(times: &[f64], t: f64) -> usize {
    let n = times.len();
    match times.binary_search_by(|probe| probe.partial_cmp(&t).expect("finite times")) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

/// Interpolation rule for [`MonotoneMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    Cubic,
}

/// A strictly increasing sampled map `t ↦ s` with an inverse.
///
/// Strict monotonicity of the `s` samples is enforced at construction. The
/// cubic rule uses exact slopes when the map was built from a
/// [`CumulativeIntegral`], and central differences otherwise.
#[derive(Debug, Clone)]
pub struct MonotoneMap {
    ts: Vec<f64>,
    ss: Vec<f64>,
    slopes: Option<Vec<f64>>,
    interpolation: Interpolation,
}

impl MonotoneMap {
    /// Builds a map from `(t, s)` pairs with the given interpolation rule.
    pub fn new(pairs: &[(f64, f64)], interpolation: Interpolation) -> Result<Self, OdeError> {
        let ts: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ss: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut map = MonotoneMap { ts, ss, slopes: None, interpolation };
        map.validate()?;
        Ok(map)
    }

    fn with_slopes(ts: Vec<f64>, ss: Vec<f64>, slopes: Vec<f64>) -> Result<Self, OdeError> {
        let mut map = MonotoneMap { ts, ss, slopes: Some(slopes), interpolation: Interpolation::Cubic };
        map.validate()?;
        Ok(map)
    }

    fn validate(&mut self) -> Result<(), OdeError> {
        if self.ts.len() < 2 {
            return Err(OdeError::TooFewSamples(self.ts.len()));
        }
        for i in 1..self.ts.len() {
            let t_bad = !self.ts[i].is_finite() || self.ts[i] <= self.ts[i - 1];
            let s_bad = !self.ss[i].is_finite() || self.ss[i] <= self.ss[i - 1];
            if t_bad || s_bad {
                return Err(OdeError::NotIncreasing { index: i });
            }
        }
        if !self.ts[0].is_finite() || !self.ss[0].is_finite() {
            return Err(OdeError::NotIncreasing { index: 0 });
        }
        Ok(())
    }

    /// Domain `[t_first, t_last]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().expect("non-empty"))
    }

    /// Range `[s_first, s_last]`.
    pub fn range(&self) -> (f64, f64) {
        (self.ss[0], *self.ss.last().expect("non-empty"))
    }

    fn slope(&self, i: usize) -> f64 {
        if let Some(slopes) = &self.slopes {
            return slopes[i];
        }
        let n = self.ts.len();
        if i == 0 {
            (self.ss[1] - self.ss[0]) / (self.ts[1] - self.ts[0])
        } else if i + 1 == n {
            (self.ss[n - 1] - self.ss[n - 2]) / (self.ts[n - 1] - self.ts[n - 2])
        } else {
            (self.ss[i + 1] - self.ss[i - 1]) / (self.ts[i + 1] - self.ts[i - 1])
        }
    }

    /// Forward evaluation `s(t)`.
    pub fn value(&self, t: f64) -> Result<f64, OdeError> {
        let (lo, hi) = self.domain();
        if t < lo || t > hi {
            return Err(OdeError::OutOfRange { t, min: lo, max: hi });
        }
        let i = segment_index(&self.ts, t);
        let (ta, tb) = (self.ts[i], self.ts[i + 1]);
        let h = tb - ta;
        let u = ((t - ta) / h).clamp(0.0, 1.0);
        Ok(match self.interpolation {
            Interpolation::Linear => self.ss[i] + u * (self.ss[i + 1] - self.ss[i]),
            Interpolation::Cubic => {
                hermite(u, h, self.ss[i], self.slope(i), self.ss[i + 1], self.slope(i + 1))
            }
        })
    }

    /// Inverse evaluation: the `t` with `|s(t) - s| <= 1e-10 * (1 + |s|)`.
    ///
    /// Brackets the containing segment by binary search on the `s` samples,
    /// then alternates interpolation (regula falsi) and bisection steps until
    /// the tolerance is met.
    pub fn invert(&self, s: f64) -> Result<f64, OdeError> {
        let (s_lo, s_hi) = self.range();
        if s < s_lo || s > s_hi {
            return Err(OdeError::OutOfRange { t: s, min: s_lo, max: s_hi });
        }
        let i = segment_index(&self.ss, s);
        let tol = INVERT_TOL * (1.0 + s.abs());

        let mut a = self.ts[i];
        let mut b = self.ts[i + 1];
        let mut fa = self.ss[i] - s;
        let mut fb = self.ss[i + 1] - s;
        if fa.abs() <= tol {
            return Ok(a);
        }
        if fb.abs() <= tol {
            return Ok(b);
        }
        for iteration in 0..128 {
            // Interpolated candidate, falling back to the midpoint whenever
            // the secant step degenerates or stalls at an end of the bracket.
            let mut t = if fb != fa { a - fa * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
            if !(t > a && t < b) || iteration % 2 == 1 {
                t = 0.5 * (a + b);
            }
            let ft = self.value(t)? - s;
            if ft.abs() <= tol || (b - a) <= f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                return Ok(t);
            }
            if (ft > 0.0) == (fb > 0.0) {
                b = t;
                fb = ft;
            } else {
                a = t;
                fa = ft;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Inverse evaluation of a [`MonotoneMap`]; see [`MonotoneMap::invert`].
pub fn invert_monotone(map: &MonotoneMap, s: f64) -> Result<f64, OdeError> {
    map.invert(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use proptest::prelude::*;

    fn harmonic(t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
        let _ = t;
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_hits_minus_one_at_pi() {
        let traj = rk4_integrate(
            harmonic,
            0.0,
            std::f64::consts::PI,
            1e-3,
            &[1.0, 0.0],
            &SingularGuard::none(),
        )
        .unwrap();
        assert_eq!(traj.time(traj.len() - 1), std::f64::consts::PI);
        let x = traj.last_state()[0];
        assert!((x + 1.0).abs() <= 1e-9, "x(pi) = {x}");
    }

    #[test]
    fn window_divides_evenly_keeps_grid() {
        let traj =
            rk4_integrate(harmonic, 0.0, 10.0, 1e-3, &[1.0, 0.0], &SingularGuard::none()).unwrap();
        assert_eq!(traj.len(), 10001);
        assert_eq!(traj.end(), 10.0);
    }

    #[test]
    fn order_four_error_scaling() {
        // Halving the step must shrink the max error on cos(t) by ~2^4.
        let exact = |t: f64| t.cos();
        let max_err = |step: f64| {
            let traj = rk4_integrate(harmonic, 0.0, std::f64::consts::PI, step, &[1.0, 0.0], &SingularGuard::none())
                .unwrap();
            traj.iter()
                .map(|(t, s)| (s[0] - exact(t)).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = max_err(2e-2) / max_err(1e-2);
        assert!((12.0..=20.0).contains(&ratio), "error ratio {ratio}");
    }

    #[test]
    fn guard_aborts_on_singular_approach() {
        // dx/dt = -1 crosses zero at t = 1.
        let field = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = -1.0;
            Ok(())
        };
        let err = rk4_integrate(field, 0.0, 2.0, 1e-2, &[1.0], &SingularGuard::on(&[0]).with_x_min(1e-3))
            .unwrap_err();
        match err {
            OdeError::Singularity { component: 0, t, .. } => {
                assert!((0.9..=1.1).contains(&t), "aborted at t = {t}")
            }
            other => panic!("expected singularity, got {other}"),
        }
    }

    #[test]
    fn fixed_point_is_preserved_exactly() {
        // (x, v) = (1, 0) is a fixed point of v' = -x + 1/x^3.
        let field = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0] + 1.0 / (y[0] * y[0] * y[0]);
            Ok(())
        };
        let traj =
            rk4_integrate(field, 0.0, 1.0, 1e-3, &[1.0, 0.0], &SingularGuard::on(&[0])).unwrap();
        for (_, s) in traj.iter() {
            assert_eq!(s[0], 1.0);
            assert_eq!(s[1], 0.0);
        }
    }

    // Frozen quadrature oracles:
    //   ∫_0^1 exp(t) dt = e - 1 = 1.718281828459045
    //   I(t) = ∫_0^t exp = e^t - 1, so I(t) = 1 at t = log 2 = 0.6931471805599453
    #[test]
    #[allow(clippy::approx_constant)] // log 2 appears as a frozen oracle value
    fn cumulative_exponential_matches_frozen_values() {
        let e = parse_expr("exp(t)").unwrap();
        let integral = cumulative_integral(&e, 0.0, 1.0, 1e-3).unwrap();
        let total = *integral.values().last().unwrap();
        assert!((total - 1.718281828459045).abs() <= 1e-12, "I(1) = {total}");

        let map = integral.to_monotone_map().unwrap();
        let t = map.invert(1.0).unwrap();
        assert!((t - 0.6931471805599453).abs() <= 1e-10, "t = {t}");
    }

    #[test]
    fn cumulative_integral_interpolates_off_grid() {
        // Cubic Hermite with exact endpoint slopes is bounded off-node by
        // h^4/384 * max|f''''| = e * 1e-8 / 384, about 7.1e-11 here.
        let e = parse_expr("exp(t)").unwrap();
        let integral = cumulative_integral(&e, 0.0, 1.0, 1e-2).unwrap();
        for &t in &[0.005f64, 0.1234, 0.504999, 0.999] {
            let expected = t.exp() - 1.0;
            let got = integral.value_at(t).unwrap();
            assert!((got - expected).abs() <= 1e-10, "I({t}) = {got}, expected {expected}");
        }
    }

    #[test]
    fn domain_violation_propagates_from_integrand() {
        let e = parse_expr("1/(t-0.5)").unwrap();
        let err = cumulative_integral(&e, 0.0, 1.0, 1e-2).unwrap_err();
        assert!(matches!(err, OdeError::Eval(_)), "got {err}");
    }

    #[test]
    fn monotone_map_rejects_non_increasing_samples() {
        let err = MonotoneMap::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)], Interpolation::Linear)
            .unwrap_err();
        assert!(matches!(err, OdeError::NotIncreasing { index: 2 }));
    }

    #[test]
    fn invert_rejects_out_of_range() {
        let map = MonotoneMap::new(&[(0.0, 0.0), (1.0, 2.0)], Interpolation::Linear).unwrap();
        assert!(matches!(map.invert(3.0), Err(OdeError::OutOfRange { .. })));
    }

    #[test]
    fn empty_window_and_bad_step_are_rejected() {
        assert!(matches!(
            rk4_integrate(harmonic, 1.0, 1.0, 1e-3, &[1.0, 0.0], &SingularGuard::none()),
            Err(OdeError::EmptyWindow { .. })
        ));
        assert!(matches!(
            rk4_integrate(harmonic, 0.0, 1.0, -1e-3, &[1.0, 0.0], &SingularGuard::none()),
            Err(OdeError::BadStep(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn invert_composed_with_value_is_identity(points in proptest::collection::vec(0.0..1.0f64, 1..8)) {
            let e = parse_expr("1+t^2").unwrap();
            let map = cumulative_integral(&e, 0.0, 1.0, 1e-2).unwrap().to_monotone_map().unwrap();
            let (lo, hi) = map.domain();
            for p in points {
                let t = lo + p * (hi - lo);
                let s = map.value(t).unwrap();
                let back = map.invert(s).unwrap();
                prop_assert!((back - t).abs() <= 1e-8, "t = {}, round trip {}", t, back);
            }
        }
    }
}
