//! Scenario-file front end: parse a sectioned key=value config, dispatch to
//! the library, and emit deterministic CSV or a verification report.
//!
//! A scenario is TOML-compatible text with sections `[system]`, `[time]`,
//! `[action]`, `[output]`; expression values are quoted strings in the
//! expression grammar. One action per scenario:
//!
//! * `integrate` - run the second-order equation, emit `t,x,v`.
//! * `reduce` - damping removal, emit `t,zeta,omega_sq,coupling`.
//! * `reparametrize` - time change `ds/dt = alpha`, emit `t,s,a_s,b_s,c_s`.
//! * `superpose` - reconstruct by the superposition rule, emit `t,x,v`
//!   (phase-space velocity; columns `I1,I2,W` appended when diagnostics are
//!   requested, both sign branches side by side under `--branch both`).
//! * `verify` - check bracket relations of a field catalog suite or a
//!   custom field list, emit a pass/fail report.
//! * `algebra-check` - reducibility of the coefficients on the window;
//!   emit `t,alpha` for the gauge on PASS.
//!
//! Numbers print in scientific notation at a fixed significant-digit count
//! (default 17, full round-trip), so identical scenarios produce
//! byte-identical output. Exit codes: 0 success, 2 config error, 3
//! math/domain error, 4 verification failure (failed relations, reducibility
//! FAIL, violated reality condition). The environment variable
//! `ERMAKOV_XMIN` overrides the singularity guard band around `x = 0`.
//! Passing several `--config` files runs them concurrently as a sweep; each
//! scenario must then name its own output path.

use crate::expr::{parse_expr, Expr};
use crate::liealg::{
    catalog, parse_rational, verify_structure, EscapeCheck, LieError, Relation, SpanCheck,
    StructureSuite, VarSet, VectorField,
};
use crate::odeint::SingularGuard;
use crate::reduce::{
    named_system, remove_damping, reducibility_check, reparametrize, GeneralizedPinney,
    NamedSystemParams, Reducibility, ReduceError, SecondOrderSystem, DEFAULT_GRID_POINTS,
    DEFAULT_SEED,
};
use crate::superpose::{
    general_solution, Branch, GeneralSolution, SuperposeError, SuperpositionConstants,
};

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use num::BigRational;
use serde::Deserialize;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MATH: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Environment variable overriding the singularity guard band.
pub const X_MIN_ENV: &str = "ERMAKOV_XMIN";

/// Default significant digits in emitted numbers; 17 round-trips every f64.
pub const DEFAULT_PRECISION: usize = 17;

/// A failed run, bucketed by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Math(String),
    #[error("verification failure: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Math(_) => EXIT_MATH,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn from_reduce(e: ReduceError) -> CliError {
    match e {
        ReduceError::UnknownSystem { .. }
        | ReduceError::MissingParameter { .. }
        | ReduceError::BadGrid { .. } => config(e.to_string()),
        other => CliError::Math(other.to_string()),
    }
}

fn from_superpose(e: SuperposeError) -> CliError {
    match e {
        SuperposeError::Reality { .. } => CliError::Verification(e.to_string()),
        other => CliError::Math(other.to_string()),
    }
}

fn from_lie(e: LieError) -> CliError {
    config(e.to_string())
}

// ---------------------------------------------------------------------------
// Scenario schema. Every section rejects unknown keys so typos surface as
// config errors instead of silently ignored settings.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    system: Option<SystemSection>,
    time: Option<TimeSection>,
    action: ActionSection,
    output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    /// Literature system: chini | walter | colegrave-abdalla |
    /// caldirola-kanai, with its parameters below.
    name: Option<String>,
    p: Option<String>,
    q: Option<String>,
    k: Option<f64>,
    gamma0: Option<f64>,
    omega: Option<String>,
    k0: Option<f64>,
    /// Raw coefficients of x'' = a x' + b x + c/x^3.
    a: Option<String>,
    b: Option<String>,
    c: Option<String>,
    /// Damped form x'' + gamma x' + omega^2 x = coupling/x^3.
    gamma: Option<String>,
    coupling: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    t0: f64,
    t1: f64,
    step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionSection {
    kind: String,
    // integrate
    x0: Option<f64>,
    v0: Option<f64>,
    // reduce
    zeta0: Option<f64>,
    // reparametrize
    alpha: Option<String>,
    // superpose
    omega: Option<String>,
    omega_sq: Option<String>,
    factor: Option<String>,
    k: Option<f64>,
    i1: Option<f64>,
    i2: Option<f64>,
    w: Option<f64>,
    sign: Option<String>,
    // verify
    suite: Option<String>,
    vars: Option<Vec<String>>,
    params: Option<Vec<String>>,
    fields: Option<Vec<FieldDef>>,
    relations: Option<Vec<String>>,
    span_action: Option<Vec<String>>,
    span_space: Option<Vec<String>>,
    escapes: Option<Vec<[String; 2]>>,
    // algebra-check
    grid_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDef {
    name: String,
    def: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    path: Option<String>,
    precision: Option<usize>,
    diagnostics: Option<bool>,
}

/// Flag-level overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub step: Option<f64>,
    pub precision: Option<usize>,
    pub branch: Option<BranchChoice>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchChoice {
    Plus,
    Minus,
    Both,
}

/// The rendered result of a run: the body and where it should go
/// (`None` = stdout). `failed_checks` marks a verification outcome that
/// must surface as exit code 4 even though a report was produced.
#[derive(Debug)]
pub struct RunOutput {
    pub body: String,
    pub path: Option<PathBuf>,
    pub failed_checks: bool,
}

/// Parses scenario text. TOML-compatible sectioned key=value form.
pub fn load_scenario(text: &str) -> Result<ScenarioFile, CliError> {
    toml::from_str(text).map_err(|e| config(e.to_string()))
}

// ---------------------------------------------------------------------------
// Resolution helpers.

fn parse_named_expr(src: &str, key: &str) -> Result<Expr, CliError> {
    parse_expr(src).map_err(|e| config(format!("bad expression for `{key}`: {e}")))
}

fn opt_expr(src: &Option<String>, key: &str) -> Result<Option<Expr>, CliError> {
    src.as_deref().map(|s| parse_named_expr(s, key)).transpose()
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| config(format!("missing {what}")))
}

fn system_section<'a>(file: &'a ScenarioFile, action: &str) -> Result<&'a SystemSection, CliError> {
    file.system
        .as_ref()
        .ok_or_else(|| config(format!("action `{action}` needs a [system] section")))
}

fn build_second_order(sys: &SystemSection) -> Result<SecondOrderSystem, CliError> {
    if let Some(name) = &sys.name {
        if sys.a.is_some() || sys.b.is_some() || sys.c.is_some() {
            return Err(config("give either `name` or raw `a`/`b`/`c`, not both"));
        }
        let params = NamedSystemParams {
            p: opt_expr(&sys.p, "p")?,
            q: opt_expr(&sys.q, "q")?,
            k: sys.k,
            gamma0: sys.gamma0,
            omega: opt_expr(&sys.omega, "omega")?,
            k0: sys.k0,
        };
        return named_system(name, &params).map_err(from_reduce);
    }
    if sys.a.is_some() || sys.b.is_some() || sys.c.is_some() {
        let a = parse_named_expr(require(sys.a.as_deref(), "[system] key `a`")?, "a")?;
        let b = parse_named_expr(require(sys.b.as_deref(), "[system] key `b`")?, "b")?;
        let c = parse_named_expr(require(sys.c.as_deref(), "[system] key `c`")?, "c")?;
        return Ok(SecondOrderSystem::new(a, b, c));
    }
    if sys.gamma.is_some() {
        return Ok(build_damped(sys)?.to_system());
    }
    Err(config("[system] needs `name`, raw `a`/`b`/`c`, or the damped form"))
}

fn build_damped(sys: &SystemSection) -> Result<GeneralizedPinney, CliError> {
    if let Some(name) = &sys.name {
        let normalized = name.to_ascii_lowercase().replace('_', "-");
        if normalized != "caldirola-kanai" {
            return Err(config(format!(
                "only `caldirola-kanai` names a damped system, got `{name}`"
            )));
        }
        let gamma0 = require(sys.gamma0, "[system] key `gamma0`")?;
        let omega = opt_expr(&sys.omega, "omega")?.unwrap_or_else(Expr::one);
        return Ok(GeneralizedPinney::caldirola_kanai(gamma0, omega, sys.k0.unwrap_or(1.0)));
    }
    let gamma = parse_named_expr(require(sys.gamma.as_deref(), "[system] key `gamma`")?, "gamma")?;
    let omega = parse_named_expr(require(sys.omega.as_deref(), "[system] key `omega`")?, "omega")?;
    let coupling = parse_named_expr(
        require(sys.coupling.as_deref(), "[system] key `coupling`")?,
        "coupling",
    )?;
    Ok(GeneralizedPinney::new(gamma, omega, coupling))
}

fn time_window(file: &ScenarioFile, ovr: &Overrides) -> Result<(f64, f64, f64), CliError> {
    let section = file
        .time
        .as_ref()
        .ok_or_else(|| config("this action needs a [time] section with t0, t1, step"))?;
    let step = ovr.step.unwrap_or(section.step);
    if !step.is_finite() || step <= 0.0 {
        return Err(config(format!("step must be positive and finite, got {step}")));
    }
    if !section.t0.is_finite() || !section.t1.is_finite() || section.t1 <= section.t0 {
        return Err(config(format!(
            "time window [{}, {}] must be finite and increasing",
            section.t0, section.t1
        )));
    }
    Ok((section.t0, section.t1, step))
}

fn precision_of(file: &ScenarioFile, ovr: &Overrides) -> Result<usize, CliError> {
    let p = ovr
        .precision
        .or_else(|| file.output.as_ref().and_then(|o| o.precision))
        .unwrap_or(DEFAULT_PRECISION);
    if !(1..=DEFAULT_PRECISION).contains(&p) {
        return Err(config(format!("precision must be in 1..=17, got {p}")));
    }
    Ok(p)
}

fn diagnostics_of(file: &ScenarioFile) -> bool {
    file.output.as_ref().and_then(|o| o.diagnostics).unwrap_or(false)
}

fn output_path(file: &ScenarioFile, ovr: &Overrides) -> Option<PathBuf> {
    ovr.out
        .clone()
        .or_else(|| file.output.as_ref().and_then(|o| o.path.as_ref().map(PathBuf::from)))
}

fn env_x_min() -> Result<Option<f64>, CliError> {
    match std::env::var(X_MIN_ENV) {
        Ok(raw) => {
            let parsed = raw.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0);
            parsed.map(Some).ok_or_else(|| {
                config(format!("{X_MIN_ENV} must be a positive real, got `{raw}`"))
            })
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(config(format!("{X_MIN_ENV}: {e}"))),
    }
}

/// Scientific-notation rendering at `precision` significant digits.
fn fmt_value(value: f64, precision: usize) -> String {
    format!("{:.*e}", precision - 1, value)
}

fn push_row(body: &mut String, precision: usize, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            body.push(',');
        }
        first = false;
        let _ = write!(body, "{}", fmt_value(*v, precision));
    }
    body.push('\n');
}

fn grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    // Matches the integrator's node placement: n steps of size `step`, the
    // last node clamped to t1.
    let n = ((t1 - t0) / step).ceil() as usize;
    (0..=n).map(|i| (t0 + i as f64 * step).min(t1)).collect()
}

// ---------------------------------------------------------------------------
// Actions.

fn run_integrate(
    file: &ScenarioFile,
    ovr: &Overrides,
    x_min: Option<f64>,
) -> Result<RunOutput, CliError> {
    let sys = build_second_order(system_section(file, "integrate")?)?;
    let (t0, t1, step) = time_window(file, ovr)?;
    let action = &file.action;
    let x0 = require(action.x0, "[action] key `x0`")?;
    let v0 = require(action.v0, "[action] key `v0`")?;
    let precision = precision_of(file, ovr)?;

    let coupling_free = matches!(sys.c(), Expr::Const(v) if *v == 0.0);
    let mut guard = if coupling_free { SingularGuard::none() } else { SingularGuard::on(&[0]) };
    if let Some(x_min) = x_min {
        guard = guard.with_x_min(x_min);
    }
    let traj = sys.integrate_with_guard(x0, v0, t0, t1, step, &guard).map_err(from_reduce)?;

    let mut body = String::from("t,x,v\n");
    for (t, state) in traj.iter() {
        push_row(&mut body, precision, &[t, state[0], state[1]]);
    }
    Ok(RunOutput { body, path: output_path(file, ovr), failed_checks: false })
}

fn run_reduce(file: &ScenarioFile, ovr: &Overrides) -> Result<RunOutput, CliError> {
    let damped = build_damped(system_section(file, "reduce")?)?;
    let (t0, t1, step) = time_window(file, ovr)?;
    let zeta0 = file.action.zeta0.unwrap_or(1.0);
    let precision = precision_of(file, ovr)?;

    let reduced = remove_damping(&damped, zeta0, t0)
        .and_then(|r| r.tabulate(t1, step))
        .map_err(from_reduce)?;

    let mut body = String::from("t,zeta,omega_sq,coupling\n");
    for t in grid(t0, t1, step) {
        let zeta = reduced.zeta_at(t).map_err(from_reduce)?;
        let omega_sq = reduced.omega_sq_at(t).map_err(from_reduce)?;
        let coupling = reduced.coupling_at(t).map_err(from_reduce)?;
        push_row(&mut body, precision, &[t, zeta, omega_sq, coupling]);
    }
    Ok(RunOutput { body, path: output_path(file, ovr), failed_checks: false })
}

fn run_reparametrize(file: &ScenarioFile, ovr: &Overrides) -> Result<RunOutput, CliError> {
    let sys = build_second_order(system_section(file, "reparametrize")?)?;
    let (t0, t1, step) = time_window(file, ovr)?;
    let alpha = parse_named_expr(
        require(file.action.alpha.as_deref(), "[action] key `alpha`")?,
        "alpha",
    )?;
    let precision = precision_of(file, ovr)?;

    let rep = reparametrize(&sys, &alpha, t0, t1, step).map_err(from_reduce)?;
    let mut body = String::from("t,s,a_s,b_s,c_s\n");
    for t in grid(t0, t1, step) {
        let s = rep.s_for(t).map_err(from_reduce)?;
        let (a_s, b_s, c_s) = rep.coefficients_at_time(t).map_err(from_reduce)?;
        push_row(&mut body, precision, &[t, s, a_s, b_s, c_s]);
    }
    Ok(RunOutput { body, path: output_path(file, ovr), failed_checks: false })
}

fn superpose_branch(
    omega_sq: &Expr,
    factor: &Expr,
    k: f64,
    base: &SuperpositionConstants,
    branch: Branch,
    window: (f64, f64, f64),
) -> Result<GeneralSolution, CliError> {
    let consts = base.with_branch(branch);
    general_solution(omega_sq, factor, k, &consts, window.0, window.1, window.2)
        .map_err(from_superpose)
}

fn run_superpose(file: &ScenarioFile, ovr: &Overrides) -> Result<RunOutput, CliError> {
    let action = &file.action;
    let window = time_window(file, ovr)?;
    let precision = precision_of(file, ovr)?;
    let diagnostics = diagnostics_of(file);

    let omega_sq = match (&action.omega, &action.omega_sq) {
        (Some(_), Some(_)) => {
            return Err(config("give either `omega` or `omega_sq`, not both"));
        }
        (Some(w), None) => parse_named_expr(w, "omega")?.squared(),
        (None, Some(w2)) => parse_named_expr(w2, "omega_sq")?,
        (None, None) => return Err(config("missing [action] key `omega` (or `omega_sq`)")),
    };
    let factor = opt_expr(&action.factor, "factor")?.unwrap_or_else(Expr::one);
    let k = require(action.k, "[action] key `k`")?;
    let i1 = require(action.i1, "[action] key `i1`")?;
    let i2 = require(action.i2, "[action] key `i2`")?;
    let w = action.w.unwrap_or(1.0);

    let file_branch: Branch = match &action.sign {
        Some(text) => text.parse().map_err(|e: String| config(e))?,
        None => Branch::Plus,
    };
    let base = SuperpositionConstants::new(i1, i2, w, file_branch).map_err(from_superpose)?;

    let both = matches!(ovr.branch, Some(BranchChoice::Both));
    if both && diagnostics {
        return Err(config("diagnostics columns are not available with --branch both"));
    }

    let mut body = String::new();
    if both {
        let plus = superpose_branch(&omega_sq, &factor, k, &base, Branch::Plus, window)?;
        let minus = superpose_branch(&omega_sq, &factor, k, &base, Branch::Minus, window)?;
        body.push_str("t,x_plus,v_plus,x_minus,v_minus\n");
        for (p, m) in plus.trajectory().iter().zip(minus.trajectory().iter()) {
            push_row(&mut body, precision, &[p.0, p.1[0], p.1[1], m.1[0], m.1[1]]);
        }
    } else {
        let branch = match ovr.branch {
            Some(BranchChoice::Plus) => Branch::Plus,
            Some(BranchChoice::Minus) => Branch::Minus,
            _ => base.branch(),
        };
        let sol = superpose_branch(&omega_sq, &factor, k, &base, branch, window)?;
        if diagnostics {
            body.push_str("t,x,v,I1,I2,W\n");
            for (i, (t, state)) in sol.trajectory().iter().enumerate() {
                let d = sol.diagnostics()[i];
                push_row(&mut body, precision, &[t, state[0], state[1], d.i1, d.i2, d.w]);
            }
        } else {
            body.push_str("t,x,v\n");
            for (t, state) in sol.trajectory().iter() {
                push_row(&mut body, precision, &[t, state[0], state[1]]);
            }
        }
    }
    Ok(RunOutput { body, path: output_path(file, ovr), failed_checks: false })
}

fn run_verify(file: &ScenarioFile, ovr: &Overrides) -> Result<RunOutput, CliError> {
    let action = &file.action;
    let suite = match (&action.suite, &action.fields) {
        (Some(_), Some(_)) => {
            return Err(config("give either `suite` or a custom `fields` list, not both"));
        }
        (Some(name), None) => catalog_suite(name)?,
        (None, Some(_)) => custom_suite(action)?,
        (None, None) => return Err(config("verify needs `suite` or `fields`/`relations`")),
    };
    let report = verify_structure(&suite).map_err(from_lie)?;
    let passed = report.all_passed();
    Ok(RunOutput {
        body: report.to_string(),
        path: output_path(file, ovr),
        failed_checks: !passed,
    })
}

fn catalog_suite(name: &str) -> Result<StructureSuite, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "pinney-sl2" => Ok(catalog::pinney_sl2_suite()),
        "ermakov-sl2" => Ok(catalog::ermakov_sl2_suite()),
        "ermakov-sl2-unit" => Ok(catalog::ermakov_sl2_unit_coupling_suite()),
        "dissipative-gauge" => Ok(catalog::gauge_action_suite()),
        other => Err(config(format!(
            "unknown suite `{other}`; expected pinney-sl2, ermakov-sl2, \
             ermakov-sl2-unit, or dissipative-gauge"
        ))),
    }
}

fn custom_suite(action: &ActionSection) -> Result<StructureSuite, CliError> {
    let vars = require(action.vars.as_ref(), "[action] key `vars`")?;
    let phase: Vec<&str> = vars.iter().map(String::as_str).collect();
    let params: Vec<&str> =
        action.params.iter().flatten().map(String::as_str).collect();
    let var_set = VarSet::new(&phase, &params).map_err(from_lie)?;

    let defs = action.fields.as_ref().expect("checked by caller");
    if defs.is_empty() {
        return Err(config("custom verify needs at least one field"));
    }
    let mut fields = Vec::with_capacity(defs.len());
    let mut names = Vec::with_capacity(defs.len());
    for def in defs {
        let field = VectorField::parse(&def.def, &var_set)
            .map_err(|e| config(format!("field `{}`: {e}", def.name)))?;
        names.push(def.name.clone());
        fields.push((def.name.clone(), field));
    }

    let mut relations = Vec::new();
    for src in action.relations.iter().flatten() {
        relations.push(parse_relation(src, &names)?);
    }

    let invariance = match (&action.span_action, &action.span_space) {
        (None, None) => None,
        (Some(act), Some(space)) => Some(SpanCheck {
            action: lookup_names(act, &names)?,
            space: lookup_names(space, &names)?,
        }),
        _ => return Err(config("`span_action` and `span_space` go together")),
    };

    let mut escapes = Vec::new();
    for [left, right] in action.escapes.iter().flatten() {
        escapes.push(EscapeCheck {
            left: field_index(left, &names)?,
            right: field_index(right, &names)?,
            space: (0..fields.len()).collect(),
        });
    }

    Ok(StructureSuite { fields, relations, invariance, escapes })
}

fn field_index(name: &str, names: &[String]) -> Result<usize, CliError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| config(format!("unknown field `{name}`")))
}

fn lookup_names(list: &[String], names: &[String]) -> Result<Vec<usize>, CliError> {
    list.iter().map(|n| field_index(n, names)).collect()
}

/// Parses `"[A, B] = 2*C - D"` into a bracket relation against the named
/// basis. The right side is `0` or a signed sum of `coefficient*Name`
/// terms with exact rational coefficients.
fn parse_relation(src: &str, names: &[String]) -> Result<Relation, CliError> {
    let (lhs, rhs) = src
        .split_once('=')
        .ok_or_else(|| config(format!("relation `{src}` needs `=`")))?;
    let inner = lhs
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| config(format!("relation `{src}` must start with `[A, B]`")))?;
    let (left, right) = inner
        .split_once(',')
        .ok_or_else(|| config(format!("relation `{src}` needs two bracket entries")))?;
    Ok(Relation {
        left: field_index(left.trim(), names)?,
        right: field_index(right.trim(), names)?,
        expected: parse_combination(rhs.trim(), names)
            .map_err(|e| config(format!("relation `{src}`: {e}")))?,
    })
}

fn parse_combination(
    src: &str,
    names: &[String],
) -> Result<Vec<(BigRational, usize)>, String> {
    if src == "0" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        let mut negative = false;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            negative = bytes[i] == b'-';
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i] != b'+' && bytes[i] != b'-' {
            i += 1;
        }
        let body = src[start..i].trim();
        if body.is_empty() {
            return Err("dangling sign".to_owned());
        }
        let (coeff, name) = match body.split_once('*') {
            Some((c, n)) => {
                let coeff = parse_rational(c.trim()).map_err(|e| e.to_string())?;
                (coeff, n.trim())
            }
            None => (BigRational::from_integer(1.into()), body),
        };
        let coeff = if negative { -coeff } else { coeff };
        let index = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| format!("unknown field `{name}`"))?;
        out.push((coeff, index));
    }
    if out.is_empty() {
        return Err("empty combination".to_owned());
    }
    Ok(out)
}

fn run_algebra_check(file: &ScenarioFile, ovr: &Overrides) -> Result<RunOutput, CliError> {
    let sys = build_second_order(system_section(file, "algebra-check")?)?;
    let (t0, t1, step) = time_window(file, ovr)?;
    let grid_points = file.action.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
    let seed = ovr.seed.unwrap_or(DEFAULT_SEED);
    let precision = precision_of(file, ovr)?;

    let outcome = reducibility_check(&sys, t0, t1, grid_points, seed).map_err(from_reduce)?;
    match outcome {
        Reducibility::Pass { k, gauge, max_residual, exact, .. } => {
            let mut body = String::from("t,alpha\n");
            for t in grid(t0, t1, step) {
                let alpha = gauge.alpha().eval(t).map_err(|e| CliError::Math(e.to_string()))?;
                push_row(&mut body, precision, &[t, alpha]);
            }
            eprintln!(
                "reducibility: PASS (k = {}, max residual {:.3e}{})",
                fmt_value(k, precision),
                max_residual,
                if exact { ", exact off grid" } else { "" }
            );
            Ok(RunOutput { body, path: output_path(file, ovr), failed_checks: false })
        }
        Reducibility::Fail { max_residual, at_t } => Ok(RunOutput {
            body: format!(
                "reducibility: FAIL (max residual {max_residual:.6e} at t = {at_t})\n"
            ),
            path: output_path(file, ovr),
            failed_checks: true,
        }),
    }
}

/// Runs one parsed scenario with overrides applied; does no file I/O.
pub fn run_scenario(file: &ScenarioFile, ovr: &Overrides) -> Result<RunOutput, CliError> {
    // A malformed guard override is a broken environment whichever action
    // runs, so it is validated up front; only integration consumes it.
    let x_min = env_x_min()?;
    match file.action.kind.as_str() {
        "integrate" => run_integrate(file, ovr, x_min),
        "reduce" => run_reduce(file, ovr),
        "reparametrize" => run_reparametrize(file, ovr),
        "superpose" => run_superpose(file, ovr),
        "verify" => run_verify(file, ovr),
        "algebra-check" => run_algebra_check(file, ovr),
        other => Err(config(format!(
            "unknown action `{other}`; expected integrate, reduce, reparametrize, \
             superpose, verify, or algebra-check"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Binary entry point.

#[derive(Debug, Parser)]
#[command(
    name = "ermakov",
    about = "Dissipative Milne-Pinney reductions, Lie-structure checks, and \
             superposition-rule solutions from scenario files"
)]
struct Cli {
    /// Scenario file; repeat the flag to run a concurrent sweep
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Output destination (default: scenario's [output] path, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the [time] step
    #[arg(long)]
    step: Option<f64>,
    /// Significant digits in emitted numbers (1..=17)
    #[arg(long)]
    precision: Option<usize>,
    /// Superposition sign branch
    #[arg(long, value_enum)]
    branch: Option<BranchChoice>,
    /// Seed for randomized probe points
    #[arg(long)]
    seed: Option<u64>,
}

fn run_file(path: &PathBuf, ovr: &Overrides, in_sweep: bool) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    let scenario = load_scenario(&text)?;
    let output = run_scenario(&scenario, ovr)?;
    match &output.path {
        Some(dest) => std::fs::write(dest, &output.body)
            .map_err(|e| CliError::Math(format!("cannot write {}: {e}", dest.display())))?,
        // Sweep scenarios writing to stdout would interleave with their
        // siblings, so each must name its own destination.
        None if in_sweep => {
            return Err(config(format!(
                "sweep scenario {} needs its own [output] path",
                path.display()
            )));
        }
        None => print!("{}", output.body),
    }
    Ok(output.failed_checks)
}

fn finish(result: Result<bool, CliError>) -> i32 {
    match result {
        Ok(false) => EXIT_OK,
        Ok(true) => {
            eprintln!("ermakov: verification failure: one or more checks failed");
            EXIT_VERIFICATION
        }
        Err(e) => {
            eprintln!("ermakov: {e}");
            e.exit_code()
        }
    }
}

/// Full argument-to-exit-code pipeline, separated from `main` for tests.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    let ovr = Overrides {
        out: cli.out,
        step: cli.step,
        precision: cli.precision,
        branch: cli.branch,
        seed: cli.seed,
    };

    if cli.config.len() == 1 {
        return finish(run_file(&cli.config[0], &ovr, false));
    }

    // Sweep mode: isolated outputs are mandatory, the shared --out would
    // make the scenarios race on one file.
    if ovr.out.is_some() {
        eprintln!("ermakov: config error: --out cannot be shared across a sweep");
        return EXIT_CONFIG;
    }
    let codes: Vec<i32> = std::thread::scope(|scope| {
        let handles: Vec<_> = cli
            .config
            .iter()
            .map(|path| {
                let ovr = ovr.clone();
                scope.spawn(move || finish(run_file(path, &ovr, true)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(EXIT_MATH)).collect()
    });
    codes.into_iter().max().unwrap_or(EXIT_OK)
}
