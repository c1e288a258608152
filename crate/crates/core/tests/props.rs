//! Randomized oracles for the decision procedure and the projection.
//!
//! The solver is checked against brute-force enumeration over a small
//! integer grid; the projection is checked for region soundness: wherever
//! the projected precondition holds, the original conjunction must still
//! have a solution for the eliminated variables.

use std::collections::BTreeMap;

use proptest::prelude::*;
use randsynth_core::logic::{Atom, Formula, LinearTerm, Literal, Model, RelOp, Sort, Var, VarRole};
use randsynth_core::mbp::project;
use randsynth_core::solver::{SatResult, Solver};
use randsynth_core::logic::Rational;

fn ivar(name: &str) -> Var {
    Var::new(name, Sort::Int, VarRole::Input)
}

fn grid_vars() -> Vec<Var> {
    vec![ivar("x"), ivar("y"), ivar("z")]
}

/// Fast integer evaluation for terms built only from plain variables.
fn eval_term_i64(t: &LinearTerm, env: &BTreeMap<Var, i64>) -> i64 {
    let mut acc = rational_to_i64(&t.constant);
    for (atom, coeff) in &t.coeffs {
        match atom {
            Atom::Var(v) => acc += rational_to_i64(coeff) * env[v],
            other => panic!("grid evaluation only covers plain variables, got {other:?}"),
        }
    }
    acc
}

fn rational_to_i64(r: &Rational) -> i64 {
    assert!(r.is_integer(), "canonical integer literals keep integer coefficients");
    let v = r.to_integer();
    i64::try_from(v).expect("grid-sized coefficients fit in i64")
}

fn eval_lit_i64(l: &Literal, env: &BTreeMap<Var, i64>) -> bool {
    let v = eval_term_i64(&l.lhs, env);
    match l.op {
        RelOp::Eq => v == 0,
        RelOp::Ne => v != 0,
        RelOp::Lt => v < 0,
        RelOp::Le => v <= 0,
        RelOp::Gt => v > 0,
        RelOp::Ge => v >= 0,
    }
}

fn eval_formula_i64(f: &Formula, env: &BTreeMap<Var, i64>) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Lit(l) => eval_lit_i64(l, env),
        Formula::Not(g) => !eval_formula_i64(g, env),
        Formula::And(gs) => gs.iter().all(|g| eval_formula_i64(g, env)),
        Formula::Or(gs) => gs.iter().any(|g| eval_formula_i64(g, env)),
        Formula::Var(_) => panic!("grid oracle formulas carry no boolean variables"),
    }
}

fn term_strategy(vars: Vec<Var>) -> impl Strategy<Value = LinearTerm> {
    let n = vars.len();
    (prop::collection::vec(-3i64..=3, n), -4i64..=4).prop_map(move |(coeffs, c)| {
        let mut t = LinearTerm::constant(Rational::from_integer(c.into()));
        for (v, k) in vars.iter().zip(coeffs) {
            t = t + LinearTerm::var(v).scaled(&Rational::from_integer(k.into()));
        }
        t
    })
}

fn relop_strategy() -> impl Strategy<Value = RelOp> {
    prop_oneof![
        Just(RelOp::Eq),
        Just(RelOp::Ne),
        Just(RelOp::Lt),
        Just(RelOp::Le),
        Just(RelOp::Gt),
        Just(RelOp::Ge),
    ]
}

fn literal_strategy(vars: Vec<Var>) -> impl Strategy<Value = Literal> {
    (term_strategy(vars), relop_strategy()).prop_map(|(t, op)| Literal::new(t, op))
}

fn formula_strategy(vars: Vec<Var>) -> impl Strategy<Value = Formula> {
    let leaf = literal_strategy(vars).prop_map(Formula::lit);
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::or),
            inner.prop_map(Formula::not),
        ]
    })
}

fn grid_model(vars: &[Var], point: &[i64]) -> Model {
    vars.iter()
        .cloned()
        .zip(point.iter().map(|k| Rational::from_integer((*k).into())))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    /// Whatever the solver answers must agree with exhaustive grid search:
    /// a grid model refutes Unsat, and a claimed model must evaluate true.
    #[test]
    fn solver_agrees_with_grid_enumeration(f in formula_strategy(grid_vars())) {
        let vars = grid_vars();
        let mut grid_hit: Option<Vec<i64>> = None;
        'search: for x in -4..=4i64 {
            for y in -4..=4i64 {
                for z in -4..=4i64 {
                    let env: BTreeMap<Var, i64> =
                        vars.iter().cloned().zip([x, y, z]).collect();
                    if eval_formula_i64(&f, &env) {
                        grid_hit = Some(vec![x, y, z]);
                        break 'search;
                    }
                }
            }
        }
        let solver = Solver::new(Default::default());
        match solver.check(&f).expect("internal solver must not error on grid formulas") {
            SatResult::Sat(m) => {
                prop_assert!(m.eval_formula(&f).unwrap(), "claimed model must satisfy the formula");
            }
            SatResult::Unsat => {
                prop_assert!(
                    grid_hit.is_none(),
                    "solver said Unsat but the grid holds a model: {grid_hit:?}"
                );
            }
        }
    }

    /// Isolating a variable preserves the literal's meaning pointwise.
    #[test]
    fn isolation_preserves_meaning_on_the_grid(
        t in term_strategy(grid_vars()),
        op in relop_strategy(),
        ycoeff in prop_oneof![Just(-3i64), Just(-2), Just(-1), Just(1), Just(2), Just(3)],
    ) {
        let vars = grid_vars();
        let y = vars[1].clone();
        let lit = Literal::new(
            t + LinearTerm::var(&y).scaled(&Rational::from_integer(ycoeff.into())),
            op,
        );
        let iso = match lit.isolate(&y) {
            Ok(iso) => iso,
            Err(_) => return Ok(()), // unsupported shapes opt out, they must not panic
        };
        for x in -4..=4i64 {
            for yv in -6..=6i64 {
                for z in -4..=4i64 {
                    let m = grid_model(&vars, &[x, yv, z]);
                    let direct = m.eval_literal(&lit).unwrap();
                    let bound = iso.bound.eval(&m).unwrap();
                    let yq = Rational::from_integer(yv.into());
                    let mut via = match iso.op {
                        RelOp::Eq => yq == bound,
                        RelOp::Ne => yq != bound,
                        RelOp::Lt => yq < bound,
                        RelOp::Le => yq <= bound,
                        RelOp::Gt => yq > bound,
                        RelOp::Ge => yq >= bound,
                    };
                    if let Some(side) = &iso.side {
                        via = via && m.eval_literal(side).unwrap();
                    }
                    prop_assert_eq!(direct, via, "isolation of {} against y broke at ({}, {}, {})", lit, x, yv, z);
                }
            }
        }
    }

    /// Wherever the projected precondition holds, the original conjunction
    /// must still be solvable for the eliminated variables.
    #[test]
    fn projection_region_is_sound(
        lits in prop::collection::vec(
            literal_strategy(vec![
                ivar("x1"), ivar("x2"),
                Var::new("u1", Sort::Int, VarRole::Output).primed(),
                Var::new("u2", Sort::Int, VarRole::Output).primed(),
            ]),
            2..=5,
        ),
        probes in prop::collection::vec((-5i64..=5, -5i64..=5), 3),
    ) {
        let universals = [ivar("x1"), ivar("x2")];
        let existentials = [
            Var::new("u1", Sort::Int, VarRole::Output).primed(),
            Var::new("u2", Sort::Int, VarRole::Output).primed(),
        ];
        let solver = Solver::new(Default::default());
        let conj = Formula::and(lits.iter().cloned().map(Formula::lit).collect());
        let m = match solver.check(&conj).expect("solver must decide the conjunction") {
            SatResult::Sat(m) => m,
            SatResult::Unsat => return Ok(()),
        };
        let projection = match project(&existentials, &lits, &m) {
            Ok(p) => p,
            // Nonlinear isolation shapes (a disequality with a scaled
            // variable) are documented as out of scope.
            Err(randsynth_core::Error::Unsupported(_)) => return Ok(()),
            Err(e) => panic!("projection failed: {e}"),
        };
        for lit in &projection.pre {
            for yv in &existentials {
                prop_assert!(!lit.mentions(yv), "pre literal {} mentions an existential", lit);
            }
        }
        // Probe the region: every point satisfying `pre` must extend to a
        // full solution of the original literals.
        let mut points: Vec<Model> = vec![m.restricted(&universals)];
        for (a, b) in probes {
            let pin = Formula::and(vec![
                conj_of(&projection.pre),
                Formula::lit(Literal::cmp(
                    LinearTerm::var(&universals[0]),
                    RelOp::Eq,
                    LinearTerm::from_int(a),
                )),
                Formula::lit(Literal::cmp(
                    LinearTerm::var(&universals[1]),
                    RelOp::Eq,
                    LinearTerm::from_int(b),
                )),
            ]);
            if let SatResult::Sat(pm) = solver.check(&pin).unwrap() {
                points.push(pm.restricted(&universals));
            }
        }
        for point in points {
            let map: BTreeMap<Var, LinearTerm> = point
                .iter()
                .map(|(v, q)| (v.clone(), LinearTerm::constant(q.clone())))
                .collect();
            let mut grounded = Vec::new();
            for lit in &lits {
                grounded.push(Formula::lit(lit.subst(&map).unwrap()));
            }
            let res = solver.check(&Formula::and(grounded)).unwrap();
            prop_assert!(
                res.is_sat(),
                "pre admits {point} but the grounded conjunction of {lits:?} is unsolvable"
            );
        }
    }
}

fn conj_of(lits: &[Literal]) -> Formula {
    Formula::and(lits.iter().cloned().map(Formula::lit).collect())
}
