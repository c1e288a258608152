//! Literals: a linear term compared against zero.
//!
//! Canonical form: denominators cleared, coefficients and constant divided
//! by their gcd, equalities and disequalities sign-normalized so the leading
//! atom has a positive coefficient. Inequalities keep their direction; the
//! relation written in the source is preserved so later classification can
//! distinguish strict from closed bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::logic::{LinearTerm, Model, Rational, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    /// The relation of the negated literal.
    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Lt => RelOp::Ge,
            RelOp::Le => RelOp::Gt,
            RelOp::Gt => RelOp::Le,
            RelOp::Ge => RelOp::Lt,
        }
    }

    /// The relation with its operands swapped (`a op b` ⇔ `b op.reverse() a`).
    pub fn reverse(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Eq,
            RelOp::Ne => RelOp::Ne,
            RelOp::Lt => RelOp::Gt,
            RelOp::Le => RelOp::Ge,
            RelOp::Gt => RelOp::Lt,
            RelOp::Ge => RelOp::Le,
        }
    }

    pub fn holds(self, q: &Rational) -> bool {
        match self {
            RelOp::Eq => q.is_zero(),
            RelOp::Ne => !q.is_zero(),
            RelOp::Lt => q.is_negative(),
            RelOp::Le => !q.is_positive(),
            RelOp::Gt => q.is_positive(),
            RelOp::Ge => !q.is_negative(),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }
}

/// `lhs op 0` in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lhs: LinearTerm,
    pub op: RelOp,
}

impl Literal {
    /// Build the canonical literal for `a op b`.
    pub fn cmp(a: LinearTerm, op: RelOp, b: LinearTerm) -> Literal {
        Literal::new(a - b, op)
    }

    pub fn new(lhs: LinearTerm, op: RelOp) -> Literal {
        Literal { lhs, op }.canonicalize()
    }

    /// Clear denominators, divide through by the gcd of all numerators, and
    /// sign-normalize equalities and disequalities. Scaling by a positive
    /// rational never changes the relation, so inequality directions are
    /// untouched. A constant-only left side reduces to -1, 0, or 1.
    pub fn canonicalize(mut self) -> Literal {
        let mut lcm = BigInt::one();
        for q in std::iter::once(&self.lhs.constant).chain(self.lhs.coeffs.values()) {
            lcm = lcm.lcm(q.denom());
        }
        if !lcm.is_one() {
            self.lhs = self.lhs.scaled(&Rational::from_integer(lcm));
        }
        let mut gcd = BigInt::zero();
        for q in std::iter::once(&self.lhs.constant).chain(self.lhs.coeffs.values()) {
            gcd = gcd.gcd(q.numer());
        }
        if !gcd.is_zero() && !gcd.is_one() {
            self.lhs = self.lhs.scaled(&Rational::new(BigInt::one(), gcd));
        }
        if matches!(self.op, RelOp::Eq | RelOp::Ne)
            && self.lhs.coeffs.values().next().is_some_and(Signed::is_negative)
        {
            self.lhs = self.lhs.scaled(&-Rational::one());
        }
        self
    }

    pub fn negated(&self) -> Literal {
        Literal { lhs: self.lhs.clone(), op: self.op.negate() }
    }

    /// True/false when the left side is constant, None otherwise.
    pub fn as_const(&self) -> Option<bool> {
        self.lhs.as_constant().map(|c| self.op.holds(c))
    }

    pub fn holds(&self, m: &Model) -> Result<bool> {
        Ok(self.op.holds(&self.lhs.eval(m)?))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.lhs.vars()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.lhs.mentions(v)
    }

    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> Result<Literal> {
        Ok(Literal::new(self.lhs.subst(map)?, self.op))
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Literal {
        Literal::new(self.lhs.rename(map), self.op)
    }

    /// Rewrite this literal as a bound on `v`: `v op bound`, where `bound`
    /// does not mention `v`.
    ///
    /// Over the reals this is exact division. Over the integers a non-unit
    /// coefficient is eliminated with floor division, which turns strict
    /// inequalities into closed ones on an adjusted bound; a non-unit
    /// equality additionally requires the divisibility side condition
    /// returned in `side`. Fails when `v` occurs under a floor-division or
    /// conditional atom, or in a non-unit disequality.
    pub fn isolate(&self, v: &Var) -> Result<Isolated> {
        if self.lhs.mentions_nested(v) {
            return Err(Error::Unsupported(format!(
                "cannot isolate {v}: it occurs under a nested term in {self}"
            )));
        }
        let alpha = self.lhs.coeff_of(v);
        if alpha.is_zero() {
            return Err(Error::Internal(format!(
                "isolate called for {v}, which does not occur in {self}"
            )));
        }
        // lhs = alpha*v + rest op 0. Flip signs if needed so alpha > 0,
        // reversing the relation; then alpha*v op f with f = -rest.
        let (alpha, op, rest) = if alpha.is_negative() {
            (-alpha.clone(), self.op.reverse(), self.lhs.scaled(&-Rational::one()))
        } else {
            (alpha.clone(), self.op, self.lhs.clone())
        };
        let mut f = -rest;
        let entry = f.coeffs.entry(crate::logic::Atom::Var(v.clone()));
        // Remove the alpha*v summand from f (f currently holds -lhs' = alpha... ).
        match entry {
            std::collections::btree_map::Entry::Occupied(e) => {
                e.remove();
            }
            std::collections::btree_map::Entry::Vacant(_) => {
                return Err(Error::Internal("isolate lost its variable".into()));
            }
        }
        if !v.is_integral() {
            let bound = f.scaled(&(Rational::one() / alpha));
            return Ok(Isolated { op, bound, side: None });
        }
        // Integer variable. Canonical literals over integral atoms have
        // integer coefficients, so alpha is a positive integer.
        if !alpha.is_integer() || !f.has_integer_coeffs() {
            return Err(Error::Internal(format!(
                "non-integer coefficients isolating {v} in {self}"
            )));
        }
        let a = alpha.to_integer();
        if a.is_one() {
            return Ok(Isolated { op, bound: f, side: None });
        }
        let one = LinearTerm::from_int(1);
        let alpha_term = LinearTerm::constant(Rational::from_integer(a.clone()));
        match op {
            RelOp::Le => Ok(Isolated {
                op: RelOp::Le,
                bound: LinearTerm::floor_div(f, a)?,
                side: None,
            }),
            RelOp::Lt => Ok(Isolated {
                op: RelOp::Le,
                bound: LinearTerm::floor_div(f - one, a)?,
                side: None,
            }),
            RelOp::Ge => Ok(Isolated {
                op: RelOp::Ge,
                bound: LinearTerm::floor_div(f + alpha_term - one, a)?,
                side: None,
            }),
            RelOp::Gt => Ok(Isolated {
                op: RelOp::Ge,
                bound: LinearTerm::floor_div(f + alpha_term, a)?,
                side: None,
            }),
            RelOp::Eq => {
                let q = LinearTerm::floor_div(f.clone(), a.clone())?;
                let side = Literal::new(f - q.scaled(&Rational::from_integer(a)), RelOp::Eq);
                Ok(Isolated { op: RelOp::Eq, bound: q, side: Some(side) })
            }
            RelOp::Ne => Err(Error::Unsupported(format!(
                "cannot isolate {v} in a disequality with non-unit coefficient: {self}"
            ))),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::logic::print::literal_infix(self))
    }
}

/// A literal rewritten as `v op bound`; `side` carries a divisibility
/// condition when an integer equality was divided by a non-unit coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isolated {
    pub op: RelOp,
    pub bound: LinearTerm,
    pub side: Option<Literal>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Sort, VarRole};

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn qr(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn int_var(name: &str) -> Var {
        Var::new(name, Sort::Int, VarRole::Output)
    }

    fn real_var(name: &str) -> Var {
        Var::new(name, Sort::Real, VarRole::Output)
    }

    #[test]
    fn canonicalize_divides_by_gcd() {
        // 2y < 2x + 2  ==>  y - x - 1 < 0
        let x = real_var("x");
        let y = real_var("y");
        let lit = Literal::cmp(
            LinearTerm::var(&y).scaled(&q(2)),
            RelOp::Lt,
            LinearTerm::var(&x).scaled(&q(2)) + LinearTerm::from_int(2),
        );
        assert_eq!(lit.op, RelOp::Lt);
        assert_eq!(lit.lhs.coeff_of(&y), q(1));
        assert_eq!(lit.lhs.coeff_of(&x), q(-1));
        assert_eq!(lit.lhs.constant, q(-1));
    }

    #[test]
    fn canonicalize_clears_denominators() {
        // x/2 <= 3/4  ==>  2x - 3 <= 0
        let x = real_var("x");
        let lit = Literal::cmp(
            LinearTerm::var(&x).scaled(&qr(1, 2)),
            RelOp::Le,
            LinearTerm::constant(qr(3, 4)),
        );
        assert_eq!(lit.lhs.coeff_of(&x), q(2));
        assert_eq!(lit.lhs.constant, q(-3));
        assert_eq!(lit.op, RelOp::Le);
    }

    #[test]
    fn canonicalize_sign_normalizes_equalities_only() {
        let x = real_var("x");
        // -x + 1 = 0  ==>  x - 1 = 0
        let eq = Literal::new(-LinearTerm::var(&x) + LinearTerm::from_int(1), RelOp::Eq);
        assert_eq!(eq.lhs.coeff_of(&x), q(1));
        assert_eq!(eq.lhs.constant, q(-1));
        // -x + 1 <= 0 keeps its direction and sign.
        let le = Literal::new(-LinearTerm::var(&x) + LinearTerm::from_int(1), RelOp::Le);
        assert_eq!(le.lhs.coeff_of(&x), q(-1));
        assert_eq!(le.op, RelOp::Le);
    }

    #[test]
    fn constant_literal_reduces_to_sign() {
        let t = Literal::new(LinearTerm::from_int(7), RelOp::Le);
        assert_eq!(t.lhs.constant, q(1));
        assert_eq!(t.as_const(), Some(false));
        let z = Literal::new(LinearTerm::zero(), RelOp::Le);
        assert_eq!(z.as_const(), Some(true));
    }

    #[test]
    fn isolate_real_divides_and_flips() {
        // -2y + x < 0 over reals: y > x/2
        let x = real_var("x");
        let y = real_var("y");
        let lit = Literal::new(LinearTerm::var(&y).scaled(&q(-2)) + LinearTerm::var(&x), RelOp::Lt);
        let iso = lit.isolate(&y).unwrap();
        assert_eq!(iso.op, RelOp::Gt);
        assert_eq!(iso.bound.coeff_of(&x), qr(1, 2));
        assert!(iso.side.is_none());
    }

    #[test]
    fn isolate_int_nonunit_le_matches_floor_semantics() {
        // 3y <= x + 7 over ints: y <= div(x + 7, 3)
        let x = int_var("x");
        let y = int_var("y");
        let lit = Literal::cmp(
            LinearTerm::var(&y).scaled(&q(3)),
            RelOp::Le,
            LinearTerm::var(&x) + LinearTerm::from_int(7),
        );
        let iso = lit.isolate(&y).unwrap();
        assert_eq!(iso.op, RelOp::Le);
        // Brute-check equivalence on a grid.
        for xv in -20..=20i64 {
            for yv in -20..=20i64 {
                let mut m = Model::new();
                m.set(x.clone(), q(xv));
                m.set(y.clone(), q(yv));
                let orig = 3 * yv <= xv + 7;
                let bound = iso.bound.eval(&m).unwrap();
                assert_eq!(orig, q(yv) <= bound, "x={xv} y={yv}");
            }
        }
    }

    #[test]
    fn isolate_int_strict_ops_close_on_adjusted_bound() {
        let x = int_var("x");
        let y = int_var("y");
        for (op, check) in [
            (RelOp::Lt, Box::new(|yv: i64, xv: i64| 2 * yv < xv) as Box<dyn Fn(i64, i64) -> bool>),
            (RelOp::Gt, Box::new(|yv: i64, xv: i64| 2 * yv > xv)),
            (RelOp::Ge, Box::new(|yv: i64, xv: i64| 2 * yv >= xv)),
        ] {
            let lit = Literal::cmp(LinearTerm::var(&y).scaled(&q(2)), op, LinearTerm::var(&x));
            let iso = lit.isolate(&y).unwrap();
            assert!(matches!(iso.op, RelOp::Le | RelOp::Ge));
            for xv in -9..=9i64 {
                for yv in -9..=9i64 {
                    let mut m = Model::new();
                    m.set(x.clone(), q(xv));
                    m.set(y.clone(), q(yv));
                    let bound = iso.bound.eval(&m).unwrap();
                    let got = match iso.op {
                        RelOp::Le => q(yv) <= bound,
                        RelOp::Ge => q(yv) >= bound,
                        _ => unreachable!(),
                    };
                    assert_eq!(check(yv, xv), got, "op={op:?} x={xv} y={yv}");
                }
            }
        }
    }

    #[test]
    fn isolate_int_equality_has_divisibility_side() {
        // 3y = x: y = div(x,3) together with 3 | x.
        let x = int_var("x");
        let y = int_var("y");
        let lit = Literal::cmp(LinearTerm::var(&y).scaled(&q(3)), RelOp::Eq, LinearTerm::var(&x));
        let iso = lit.isolate(&y).unwrap();
        let side = iso.side.clone().unwrap();
        for xv in -12..=12i64 {
            for yv in -12..=12i64 {
                let mut m = Model::new();
                m.set(x.clone(), q(xv));
                m.set(y.clone(), q(yv));
                let orig = 3 * yv == xv;
                let got = q(yv) == iso.bound.eval(&m).unwrap() && side.holds(&m).unwrap();
                assert_eq!(orig, got, "x={xv} y={yv}");
            }
        }
    }

    #[test]
    fn isolate_rejects_nested_and_nonunit_disequality() {
        let x = int_var("x");
        let y = int_var("y");
        let ne = Literal::cmp(LinearTerm::var(&y).scaled(&q(2)), RelOp::Ne, LinearTerm::var(&x));
        assert!(ne.isolate(&y).is_err());
        let nested = Literal::new(
            LinearTerm::floor_div(LinearTerm::var(&y), BigInt::from(2)).unwrap(),
            RelOp::Le,
        );
        assert!(nested.isolate(&y).is_err());
    }

    #[test]
    fn unit_coefficient_strictness_is_preserved() {
        // y > -3x keeps its strict relation and bound.
        let x = int_var("x");
        let y = int_var("y");
        let lit = Literal::cmp(
            LinearTerm::var(&y),
            RelOp::Gt,
            LinearTerm::var(&x).scaled(&q(-3)),
        );
        let iso = lit.isolate(&y).unwrap();
        assert_eq!(iso.op, RelOp::Gt);
        assert_eq!(iso.bound.coeff_of(&x), q(-3));
        assert!(iso.side.is_none());
    }
}
