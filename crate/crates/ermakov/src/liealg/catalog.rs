//! Ready-made field families for the equations this crate reduces.
//!
//! Three families are provided, each with a [`StructureSuite`] packaging the
//! bracket relations that make the corresponding equation a Lie system:
//!
//! * the sl(2, R) triple for the Milne-Pinney equation
//!   `x'' = -w^2(t) x + k / x^3`, whose flow field is `X2 - w^2(t) X1`;
//! * the same triple acting diagonally on three copies of the phase space
//!   (one nonlinear, two linear), the geometry behind the superposition rule;
//! * the five-field family of the dissipative equation
//!   `x'' = a(t) x' + b(t) x + c(t) / x^3`, whose flow field is
//!   `X4 + a(t) X1 + b(t) X2 + c(t) X3`, together with the two-field gauge
//!   subalgebra that acts on it.
//!
//! Every relation here is checked exactly by the tests; the catalog is the
//! single place where these fields are written down.

use super::{EscapeCheck, Relation, SpanCheck, StructureSuite, VarSet, VectorField};

fn field(src: &str, vars: &VarSet) -> VectorField {
    VectorField::parse(src, vars).expect("catalog field parses")
}

/// Phase variables `(x, v)` with the coupling symbol `k` as a formal
/// parameter.
pub fn pinney_vars() -> VarSet {
    VarSet::new(&["x", "v"], &["k"]).expect("valid names")
}

/// The sl(2, R) triple for `x'' = -w^2(t) x + k / x^3` in first-order form
/// `x' = v`, `v' = -w^2 x + k x^-3`:
///
/// * `X1 = x d/dv`
/// * `X2 = v d/dx + k x^-3 d/dv`
/// * `X3 = (1/2)(x d/dx - v d/dv)`
///
/// These close with `[X1,X2] = 2 X3`, `[X3,X2] = -X2`, `[X3,X1] = X1`, so
/// the flow field `X2 - w^2(t) X1` stays inside a three-dimensional algebra
/// for every frequency profile.
pub fn pinney_sl2() -> [VectorField; 3] {
    let vars = pinney_vars();
    [
        field("x*d/dv", &vars),
        field("v*d/dx + k*x^-3*d/dv", &vars),
        field("1/2*x*d/dx - 1/2*v*d/dv", &vars),
    ]
}

/// [`pinney_sl2`] packaged with its commutation relations.
pub fn pinney_sl2_suite() -> StructureSuite {
    let [x1, x2, x3] = pinney_sl2();
    StructureSuite {
        fields: vec![("X1".into(), x1), ("X2".into(), x2), ("X3".into(), x3)],
        relations: vec![
            Relation::new(0, 1, &[(2, 2)]),
            Relation::new(2, 1, &[(-1, 1)]),
            Relation::new(2, 0, &[(1, 0)]),
        ],
        invariance: None,
        escapes: vec![],
    }
}

/// Phase variables `(x, y, z, vx, vy, vz)` with formal parameter `k`: one
/// nonlinear coordinate and two linear companions sharing the frequency.
pub fn ermakov_vars() -> VarSet {
    VarSet::new(&["x", "y", "z", "vx", "vy", "vz"], &["k"]).expect("valid names")
}

fn ermakov_triple(coupling: &str) -> [VectorField; 3] {
    let vars = ermakov_vars();
    [
        field("x*d/dvx + y*d/dvy + z*d/dvz", &vars),
        field(&format!("vx*d/dx + vy*d/dy + vz*d/dz + {coupling}*d/dvx"), &vars),
        field(
            "1/2*x*d/dx + 1/2*y*d/dy + 1/2*z*d/dz \
             - 1/2*vx*d/dvx - 1/2*vy*d/dvy - 1/2*vz*d/dvz",
            &vars,
        ),
    ]
}

/// The diagonal sl(2, R) action behind the superposition rule: the
/// Milne-Pinney equation in `x` runs alongside two copies of the linear
/// oscillator in `y` and `z`, all driven by the same `w^2(t)`:
///
/// * `N1 = x d/dvx + y d/dvy + z d/dvz`
/// * `N2 = vx d/dx + vy d/dy + vz d/dz + k x^-3 d/dvx`
/// * `N3 = (1/2)(x d/dx + y d/dy + z d/dz - vx d/dvx - vy d/dvy - vz d/dvz)`
///
/// The triple closes with `[N1,N2] = 2 N3`, `[N3,N1] = N1`, `[N2,N3] = N2`;
/// the combined flow field is `N2 - w^2(t) N1`.
pub fn ermakov_sl2() -> [VectorField; 3] {
    ermakov_triple("k*x^-3")
}

/// [`ermakov_sl2`] with the coupling normalized to one: `N2` carries a
/// literal `x^-3 d/dvx` instead of `k x^-3 d/dvx`. The commutation relations
/// are identical, which the tests confirm independently of the `k` form.
pub fn ermakov_sl2_unit_coupling() -> [VectorField; 3] {
    ermakov_triple("x^-3")
}

fn ermakov_suite(fields: [VectorField; 3]) -> StructureSuite {
    let [n1, n2, n3] = fields;
    StructureSuite {
        fields: vec![("N1".into(), n1), ("N2".into(), n2), ("N3".into(), n3)],
        relations: vec![
            Relation::new(0, 1, &[(2, 2)]),
            Relation::new(2, 0, &[(1, 0)]),
            Relation::new(1, 2, &[(1, 1)]),
        ],
        invariance: None,
        escapes: vec![],
    }
}

/// [`ermakov_sl2`] packaged with its commutation relations.
pub fn ermakov_sl2_suite() -> StructureSuite {
    ermakov_suite(ermakov_sl2())
}

/// [`ermakov_sl2_unit_coupling`] packaged with the same relations.
pub fn ermakov_sl2_unit_coupling_suite() -> StructureSuite {
    ermakov_suite(ermakov_sl2_unit_coupling())
}

/// Phase variables `(x, v)` with no formal parameters.
pub fn dissipative_vars() -> VarSet {
    VarSet::new(&["x", "v"], &[]).expect("valid names")
}

/// The five fields spanned by the dissipative family
/// `x' = v`, `v' = a(t) v + b(t) x + c(t) x^-3`:
///
/// * `X1 = v d/dv`
/// * `X2 = x d/dv`
/// * `X3 = x^-3 d/dv`
/// * `X4 = v d/dx`
/// * `X5 = x d/dx`
///
/// The flow field is `X4 + a(t) X1 + b(t) X2 + c(t) X3`. This family is not
/// a Lie algebra: `[X3, X4]` already escapes the span, which is why the
/// reduction story works through the gauge subalgebra rather than through a
/// finite algebra containing the whole family.
pub fn dissipative_basis() -> [VectorField; 5] {
    let vars = dissipative_vars();
    [
        field("v*d/dv", &vars),
        field("x*d/dv", &vars),
        field("x^-3*d/dv", &vars),
        field("v*d/dx", &vars),
        field("x*d/dx", &vars),
    ]
}

/// The solvable gauge pair `(v d/dv, x d/dv)`: generators of the
/// velocity-scaling and velocity-shear transformations `v -> alpha v + beta x`
/// used to change coefficients `(a, b, c)` without touching trajectories in
/// `x`. They close among themselves: `[X1, X2] = -X2`.
pub fn gauge_pair() -> [VectorField; 2] {
    let vars = dissipative_vars();
    [field("v*d/dv", &vars), field("x*d/dv", &vars)]
}

/// The full commutator table of the gauge pair against the five-field
/// family, plus the membership checks showing the pair's adjoint action
/// preserves the family's span, plus the escape `[X3, X4]` showing the
/// family itself is not closed.
pub fn gauge_action_suite() -> StructureSuite {
    let [x1, x2, x3, x4, x5] = dissipative_basis();
    StructureSuite {
        fields: vec![
            ("X1".into(), x1),
            ("X2".into(), x2),
            ("X3".into(), x3),
            ("X4".into(), x4),
            ("X5".into(), x5),
        ],
        relations: vec![
            Relation::new(0, 1, &[(-1, 1)]),
            Relation::new(0, 2, &[(-1, 2)]),
            Relation::new(0, 3, &[(1, 3)]),
            Relation::new(0, 4, &[]),
            Relation::new(1, 2, &[]),
            Relation::new(1, 3, &[(1, 4), (-1, 0)]),
            Relation::new(1, 4, &[(-1, 1)]),
        ],
        invariance: Some(SpanCheck { action: vec![0, 1], space: vec![0, 1, 2, 3, 4] }),
        escapes: vec![EscapeCheck { left: 2, right: 3, space: vec![0, 1, 2, 3, 4] }],
    }
}
