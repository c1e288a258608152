//! Quantifier-free formulas over linear-arithmetic literals and boolean
//! variables.
//!
//! Constructors flatten and constant-fold, so `True`/`False` never appear as
//! children of a connective built through them. Negation normal form lowers
//! boolean variables to the literals `b = 1` / `b = 0`, which lets every
//! later pass work on literals alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::logic::{Atom, LinearTerm, Literal, Model, Rational, RelOp, Var};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Lit(Literal),
    /// A boolean variable used as a proposition.
    Var(Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    /// Literal constructor; constant left sides fold to `True`/`False`.
    pub fn lit(l: Literal) -> Formula {
        match l.as_const() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Lit(l),
        }
    }

    pub fn cmp(a: LinearTerm, op: RelOp, b: LinearTerm) -> Formula {
        Formula::lit(Literal::cmp(a, op, b))
    }

    pub fn var(v: Var) -> Formula {
        Formula::Var(v)
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            Formula::Lit(l) => Formula::lit(l.negated()),
            g => Formula::Not(Box::new(g)),
        }
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(gs) => {
                    for g in gs {
                        if !out.contains(&g) {
                            out.push(g);
                        }
                    }
                }
                g => {
                    if !out.contains(&g) {
                        out.push(g);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(gs) => {
                    for g in gs {
                        if !out.contains(&g) {
                            out.push(g);
                        }
                    }
                }
                g => {
                    if !out.contains(&g) {
                        out.push(g);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn and2(a: Formula, b: Formula) -> Formula {
        Formula::and(vec![a, b])
    }

    pub fn or2(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![a, b])
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or2(Formula::not(a), b)
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and2(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn ite(c: Formula, a: Formula, b: Formula) -> Formula {
        Formula::or2(
            Formula::and2(c.clone(), a),
            Formula::and2(Formula::not(c), b),
        )
    }

    pub fn holds(&self, m: &Model) -> Result<bool> {
        m.eval_formula(self)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => l.lhs.collect_vars(out),
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Not(g) => g.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_vars(out);
                }
            }
        }
    }

    pub fn mentions(&self, v: &Var) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Lit(l) => l.mentions(v),
            Formula::Var(w) => w == v,
            Formula::Not(g) => g.mentions(v),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(|f| f.mentions(v)),
        }
    }

    /// Node count, used for resource diagnostics.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Lit(_) | Formula::Var(_) => 1,
            Formula::Not(g) => 1 + g.size(),
            Formula::And(fs) | Formula::Or(fs) => {
                1 + fs.iter().map(Formula::size).sum::<usize>()
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::logic::print::formula_infix(self))
    }
}

/// Negation normal form. Boolean variables are lowered to arithmetic
/// literals (`b = 1` positively, `b = 0` negatively), so the result contains
/// only `True`, `False`, `Lit`, `And`, and `Or` nodes.
pub fn nnf(f: &Formula) -> Formula {
    nnf_pol(f, true)
}

fn nnf_pol(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::True => {
            if positive {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::False => {
            if positive {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::Lit(l) => {
            if positive {
                Formula::lit(l.clone())
            } else {
                Formula::lit(l.negated())
            }
        }
        Formula::Var(v) => {
            let rhs = if positive { 1 } else { 0 };
            Formula::cmp(LinearTerm::var(v), RelOp::Eq, LinearTerm::from_int(rhs))
        }
        Formula::Not(g) => nnf_pol(g, !positive),
        Formula::And(fs) => {
            let kids = fs.iter().map(|g| nnf_pol(g, positive)).collect();
            if positive {
                Formula::and(kids)
            } else {
                Formula::or(kids)
            }
        }
        Formula::Or(fs) => {
            let kids = fs.iter().map(|g| nnf_pol(g, positive)).collect();
            if positive {
                Formula::or(kids)
            } else {
                Formula::and(kids)
            }
        }
    }
}

/// Rename variables throughout (used for priming and unpriming).
pub fn rename_vars(f: &Formula, map: &BTreeMap<Var, Var>) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Lit(l) => Formula::lit(l.rename(map)),
        Formula::Var(v) => Formula::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        Formula::Not(g) => Formula::not(rename_vars(g, map)),
        Formula::And(fs) => Formula::and(fs.iter().map(|g| rename_vars(g, map)).collect()),
        Formula::Or(fs) => Formula::or(fs.iter().map(|g| rename_vars(g, map)).collect()),
    }
}

/// Substitute terms for variables throughout. A substituted boolean variable
/// `b := t` turns the proposition `b` into the literal `t = 1`.
pub fn subst_terms(f: &Formula, map: &BTreeMap<Var, LinearTerm>) -> Result<Formula> {
    Ok(match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Lit(l) => Formula::lit(l.subst(map)?),
        Formula::Var(v) => match map.get(v) {
            Some(t) => Formula::cmp(t.clone(), RelOp::Eq, LinearTerm::from_int(1)),
            None => Formula::Var(v.clone()),
        },
        Formula::Not(g) => Formula::not(subst_terms(g, map)?),
        Formula::And(fs) => Formula::and(
            fs.iter()
                .map(|g| subst_terms(g, map))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Or(fs) => Formula::or(
            fs.iter()
                .map(|g| subst_terms(g, map))
                .collect::<Result<Vec<_>>>()?,
        ),
    })
}

/// The literals along the satisfied path of `f` under `m`.
///
/// The formula is put in negation normal form and walked top-down: every
/// child of a conjunction is visited, and the first satisfied child of a
/// disjunction is taken. Fails when `m` does not satisfy `f`.
pub fn true_literals(f: &Formula, m: &Model) -> Result<Vec<Literal>> {
    let n = nnf(f);
    let mut out = Vec::new();
    harvest(&n, m, &mut out)?;
    let mut seen = BTreeSet::new();
    out.retain(|l| seen.insert(l.clone()));
    Ok(out)
}

fn harvest(f: &Formula, m: &Model, out: &mut Vec<Literal>) -> Result<()> {
    match f {
        Formula::True => Ok(()),
        Formula::False => Err(Error::ModelMismatch(
            "reached a false branch while collecting literals".into(),
        )),
        Formula::Lit(l) => {
            if l.holds(m)? {
                out.push(l.clone());
                Ok(())
            } else {
                Err(Error::ModelMismatch(format!(
                    "literal {l} is false under {m}"
                )))
            }
        }
        Formula::And(fs) => {
            for g in fs {
                harvest(g, m, out)?;
            }
            Ok(())
        }
        Formula::Or(fs) => {
            for g in fs {
                if m.eval_formula(g)? {
                    return harvest(g, m, out);
                }
            }
            Err(Error::ModelMismatch(format!(
                "no disjunct holds under {m}"
            )))
        }
        Formula::Var(_) | Formula::Not(_) => Err(Error::Internal(
            "normal form still contains a variable or negation".into(),
        )),
    }
}

/// Disjunctive normal form as a list of literal conjunctions, capped at
/// `cap` conjuncts. Conjunctions whose literals pin any single linear form
/// to an empty interval are dropped as they are built, so the product of
/// many small clauses stays near its feasible size; duplicate conjunctions
/// are kept once, first derivation order preserved.
pub fn to_dnf(f: &Formula, cap: usize) -> Result<Vec<BTreeSet<Literal>>> {
    let n = nnf(f);
    let raw = dnf_rec(&n, cap)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in raw {
        if seen.insert(c.lits.clone()) {
            out.push(c.lits);
        }
    }
    Ok(out)
}

/// One lower or upper endpoint: the bound value and whether it is strict.
type Endpoint = (Rational, bool);

/// The interval a cube's literals impose on one linear form.
#[derive(Clone, Default)]
struct FormBounds {
    lo: Option<Endpoint>,
    hi: Option<Endpoint>,
    ne: BTreeSet<Rational>,
}

impl FormBounds {
    fn feasible(&self) -> bool {
        if let (Some((l, ls)), Some((h, hs))) = (&self.lo, &self.hi) {
            if l > h || (l == h && (*ls || *hs)) {
                return false;
            }
            if l == h && self.ne.contains(l) {
                return false;
            }
        }
        true
    }
}

/// A conjunction of literals under construction. Literals whose left-hand
/// sides are scalar multiples of each other share a normalized key, so a
/// contradiction between them is caught without a solver call.
#[derive(Clone, Default)]
struct Cube {
    lits: BTreeSet<Literal>,
    forms: BTreeMap<Vec<(Atom, Rational)>, FormBounds>,
}

impl Cube {
    /// Add one literal; `false` means the cube became infeasible.
    fn insert(&mut self, l: &Literal) -> bool {
        match l.as_const() {
            Some(true) => return true,
            Some(false) => return false,
            None => {}
        }
        if !self.lits.insert(l.clone()) {
            return true;
        }
        // Normalize lhs = sum(c_i * a_i) + k  to a key with leading
        // coefficient one: divide by c_0 and mirror the relation when c_0
        // is negative. `op bound` then constrains the common form.
        let Some((_, c0)) = l.lhs.coeffs.iter().next() else {
            return true;
        };
        let key: Vec<(Atom, Rational)> = l
            .lhs
            .coeffs
            .iter()
            .map(|(a, c)| (a.clone(), c / c0))
            .collect();
        let bound = -&l.lhs.constant / c0;
        let op = if c0.is_negative() { l.op.reverse() } else { l.op };
        let fb = self.forms.entry(key).or_default();
        let tighter_lo = |cur: &Option<Endpoint>, b: &Rational, s: bool| match cur {
            Some((cb, cs)) => b > cb || (b == cb && s && !cs),
            None => true,
        };
        let tighter_hi = |cur: &Option<Endpoint>, b: &Rational, s: bool| match cur {
            Some((cb, cs)) => b < cb || (b == cb && s && !cs),
            None => true,
        };
        match op {
            RelOp::Eq => {
                if tighter_lo(&fb.lo, &bound, false) {
                    fb.lo = Some((bound.clone(), false));
                }
                if tighter_hi(&fb.hi, &bound, false) {
                    fb.hi = Some((bound, false));
                }
            }
            RelOp::Ne => {
                fb.ne.insert(bound);
            }
            RelOp::Ge => {
                if tighter_lo(&fb.lo, &bound, false) {
                    fb.lo = Some((bound, false));
                }
            }
            RelOp::Gt => {
                if tighter_lo(&fb.lo, &bound, true) {
                    fb.lo = Some((bound, true));
                }
            }
            RelOp::Le => {
                if tighter_hi(&fb.hi, &bound, false) {
                    fb.hi = Some((bound, false));
                }
            }
            RelOp::Lt => {
                if tighter_hi(&fb.hi, &bound, true) {
                    fb.hi = Some((bound, true));
                }
            }
        }
        fb.feasible()
    }
}

fn dnf_rec(f: &Formula, cap: usize) -> Result<Vec<Cube>> {
    let check = |n: usize| -> Result<()> {
        if n > cap {
            Err(Error::Resource(format!(
                "disjunctive normal form exceeds {cap} conjunctions"
            )))
        } else {
            Ok(())
        }
    };
    match f {
        Formula::True => Ok(vec![Cube::default()]),
        Formula::False => Ok(vec![]),
        Formula::Lit(l) => {
            let mut c = Cube::default();
            if c.insert(l) {
                Ok(vec![c])
            } else {
                Ok(vec![])
            }
        }
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(dnf_rec(g, cap)?);
                check(out.len())?;
            }
            Ok(out)
        }
        Formula::And(fs) => {
            let mut acc: Vec<Cube> = vec![Cube::default()];
            for g in fs {
                let child = dnf_rec(g, cap)?;
                let mut next = Vec::new();
                for base in &acc {
                    'extension: for extension in &child {
                        let mut merged = base.clone();
                        for l in &extension.lits {
                            if !merged.insert(l) {
                                continue 'extension;
                            }
                        }
                        next.push(merged);
                        check(next.len())?;
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Formula::Var(_) | Formula::Not(_) => Err(Error::Internal(
            "normal form still contains a variable or negation".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Rational, Sort, VarRole};
    use num_bigint::BigInt;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn v(name: &str) -> Var {
        Var::new(name, Sort::Int, VarRole::Output)
    }

    fn t(name: &str) -> LinearTerm {
        LinearTerm::var(&v(name))
    }

    fn model(pairs: &[(&str, i64)]) -> Model {
        pairs
            .iter()
            .map(|(name, val)| (v(name), q(*val)))
            .collect()
    }

    /// (x <= 2 and y > -3x) or (x >= -1 and y < 5x)
    fn two_branch() -> Formula {
        Formula::or2(
            Formula::and2(
                Formula::cmp(t("x"), RelOp::Le, LinearTerm::from_int(2)),
                Formula::cmp(t("y"), RelOp::Gt, t("x").scaled(&q(-3))),
            ),
            Formula::and2(
                Formula::cmp(t("x"), RelOp::Ge, LinearTerm::from_int(-1)),
                Formula::cmp(t("y"), RelOp::Lt, t("x").scaled(&q(5))),
            ),
        )
    }

    #[test]
    fn constructors_flatten_and_fold() {
        let f = Formula::and2(Formula::True, Formula::and2(Formula::True, Formula::True));
        assert_eq!(f, Formula::True);
        let g = Formula::or2(Formula::False, Formula::True);
        assert_eq!(g, Formula::True);
        let h = Formula::and2(
            Formula::cmp(t("x"), RelOp::Le, LinearTerm::zero()),
            Formula::False,
        );
        assert_eq!(h, Formula::False);
        // 1 <= 0 folds away at construction.
        let c = Formula::cmp(LinearTerm::from_int(1), RelOp::Le, LinearTerm::zero());
        assert_eq!(c, Formula::False);
    }

    #[test]
    fn nnf_pushes_negation_and_lowers_variables() {
        let b = Var::new("b", Sort::Bool, VarRole::Input);
        let f = Formula::not(Formula::and2(
            Formula::var(b.clone()),
            Formula::cmp(t("x"), RelOp::Lt, LinearTerm::from_int(3)),
        ));
        let n = nnf(&f);
        // not(b and x < 3) => b = 0 or x >= 3
        let expected = Formula::or2(
            Formula::cmp(LinearTerm::var(&b), RelOp::Eq, LinearTerm::zero()),
            Formula::cmp(t("x"), RelOp::Ge, LinearTerm::from_int(3)),
        );
        assert_eq!(n, expected);
    }

    #[test]
    fn true_literals_takes_first_satisfied_disjunct() {
        let f = two_branch();
        let m = model(&[("x", 5), ("y", 3)]);
        let lits = true_literals(&f, &m).unwrap();
        assert_eq!(lits.len(), 2);
        assert_eq!(
            lits[0],
            Literal::cmp(t("x"), RelOp::Ge, LinearTerm::from_int(-1))
        );
        assert_eq!(lits[1], Literal::cmp(t("y"), RelOp::Lt, t("x").scaled(&q(5))));
    }

    #[test]
    fn true_literals_prefers_earlier_disjuncts() {
        // Both disjuncts hold at x=1, y=2; the first one is harvested.
        let f = two_branch();
        let m = model(&[("x", 1), ("y", 2)]);
        let lits = true_literals(&f, &m).unwrap();
        assert_eq!(
            lits[0],
            Literal::cmp(t("x"), RelOp::Le, LinearTerm::from_int(2))
        );
        assert_eq!(lits[1], Literal::cmp(t("y"), RelOp::Gt, t("x").scaled(&q(-3))));
    }

    #[test]
    fn true_literals_rejects_falsifying_model() {
        let f = two_branch();
        // x=5 kills disjunct one; y=100 kills disjunct two.
        let m = model(&[("x", 5), ("y", 100)]);
        assert!(true_literals(&f, &m).is_err());
    }

    #[test]
    fn dnf_of_two_branch_formula() {
        let f = two_branch();
        let dnf = to_dnf(&f, 4096).unwrap();
        assert_eq!(dnf.len(), 2);
        assert!(dnf.iter().all(|c| c.len() == 2));
    }

    #[test]
    fn dnf_drops_contradictory_conjuncts() {
        let x_pos = Formula::cmp(t("x"), RelOp::Gt, LinearTerm::zero());
        let f = Formula::and2(x_pos.clone(), Formula::not(x_pos));
        assert_eq!(to_dnf(&f, 4096).unwrap().len(), 0);
    }

    #[test]
    fn dnf_respects_cap() {
        // (a1 or b1) and ... and (a13 or b13) would need 2^13 conjuncts.
        let mut clauses = Vec::new();
        for i in 0..13 {
            let a = Formula::cmp(t(&format!("a{i}")), RelOp::Gt, LinearTerm::zero());
            let b = Formula::cmp(t(&format!("b{i}")), RelOp::Gt, LinearTerm::zero());
            clauses.push(Formula::or2(a, b));
        }
        assert!(to_dnf(&Formula::and(clauses), 4096).is_err());
    }

    #[test]
    fn rename_and_subst_reach_literals() {
        let x = v("x");
        let y = v("y");
        let f = Formula::cmp(t("x"), RelOp::Le, t("y"));
        let mut ren = BTreeMap::new();
        ren.insert(x.clone(), x.primed());
        let g = rename_vars(&f, &ren);
        assert!(g.mentions(&x.primed()));
        assert!(!g.mentions(&x));

        let mut sub = BTreeMap::new();
        sub.insert(y.clone(), LinearTerm::from_int(3));
        let h = subst_terms(&f, &sub).unwrap();
        assert_eq!(h, Formula::cmp(t("x"), RelOp::Le, LinearTerm::from_int(3)));
    }

    #[test]
    fn iff_of_boolean_variables_evaluates() {
        let a = Var::new("a", Sort::Bool, VarRole::Output);
        let b = Var::new("b", Sort::Bool, VarRole::Output);
        let f = Formula::iff(Formula::var(a.clone()), Formula::var(b.clone()));
        for (av, bv, expect) in [(0, 0, true), (0, 1, false), (1, 0, false), (1, 1, true)] {
            let m: Model = [(a.clone(), q(av)), (b.clone(), q(bv))].into_iter().collect();
            assert_eq!(f.holds(&m).unwrap(), expect);
        }
    }
}
