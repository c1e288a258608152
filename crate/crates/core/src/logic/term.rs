//! Linear terms over exact rationals.
//!
//! A term is an affine combination of atoms plus a constant. Atoms are
//! variables, floor divisions of a term by a positive integer constant
//! (needed for integer bound isolation), or conditional terms (needed for
//! symbolic minimum/maximum chains in synthesized witnesses). Coefficient
//! maps are ordered so printed forms and iteration order are deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::logic::{Formula, Model, Var};

pub type Rational = BigRational;

/// A non-constant building block of a linear term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Var),
    /// Floor division of an integer-valued term by a positive integer.
    FloorDiv(Box<LinearTerm>, BigInt),
    /// Conditional term; only produced by witness extraction, never by
    /// contract elaboration.
    Ite(Box<Formula>, Box<LinearTerm>, Box<LinearTerm>),
}

impl Atom {
    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Atom::Var(v) => {
                out.insert(v.clone());
            }
            Atom::FloorDiv(t, _) => t.collect_vars(out),
            Atom::Ite(c, a, b) => {
                c.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// `constant + Σ coeff · atom` with exact rational coefficients.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinearTerm {
    pub constant: Rational,
    pub coeffs: BTreeMap<Atom, Rational>,
}

impl LinearTerm {
    pub fn zero() -> Self {
        LinearTerm::default()
    }

    pub fn constant(q: Rational) -> Self {
        LinearTerm { constant: q, coeffs: BTreeMap::new() }
    }

    pub fn from_int(n: i64) -> Self {
        LinearTerm::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn var(v: &Var) -> Self {
        LinearTerm::from_atom(Atom::Var(v.clone()))
    }

    pub fn from_atom(a: Atom) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(a, Rational::one());
        LinearTerm { constant: Rational::zero(), coeffs }
    }

    /// `floor(t / k)` for positive integer `k`; constant-folds and collapses
    /// division by one.
    pub fn floor_div(t: LinearTerm, k: BigInt) -> Result<Self> {
        if !k.is_positive() {
            return Err(Error::Unsupported(format!(
                "floor division by non-positive constant {k}"
            )));
        }
        if k.is_one() {
            return Ok(t);
        }
        if let Some(c) = t.as_constant() {
            let q = (c / Rational::from_integer(k)).floor();
            return Ok(LinearTerm::constant(q));
        }
        Ok(LinearTerm::from_atom(Atom::FloorDiv(Box::new(t), k)))
    }

    /// Conditional term `if cond then a else b`; constant-folds a constant
    /// condition and collapses identical branches.
    pub fn ite(cond: Formula, a: LinearTerm, b: LinearTerm) -> Self {
        match cond {
            Formula::True => a,
            Formula::False => b,
            c if a == b => {
                let _ = c;
                a
            }
            c => LinearTerm::from_atom(Atom::Ite(Box::new(c), Box::new(a), Box::new(b))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        if self.coeffs.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }

    pub fn add_assign_scaled(&mut self, other: &LinearTerm, k: &Rational) {
        if k.is_zero() {
            return;
        }
        self.constant += &other.constant * k;
        for (a, c) in &other.coeffs {
            let entry = self.coeffs.entry(a.clone()).or_insert_with(Rational::zero);
            *entry += c * k;
            if entry.is_zero() {
                self.coeffs.remove(a);
            }
        }
    }

    pub fn scaled(&self, k: &Rational) -> LinearTerm {
        let mut out = LinearTerm::zero();
        out.add_assign_scaled(self, k);
        out
    }

    /// Top-level coefficient of variable `v` (zero when absent).
    pub fn coeff_of(&self, v: &Var) -> Rational {
        self.coeffs
            .get(&Atom::Var(v.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// All variables mentioned anywhere in the term, nested atoms included.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for a in self.coeffs.keys() {
            a.collect_vars(out);
        }
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.coeffs.keys().any(|a| match a {
            Atom::Var(w) => w == v,
            Atom::FloorDiv(t, _) => t.mentions(v),
            Atom::Ite(c, x, y) => c.mentions(v) || x.mentions(v) || y.mentions(v),
        })
    }

    /// True when `v` occurs inside a floor-division or conditional atom,
    /// where it cannot be isolated.
    pub fn mentions_nested(&self, v: &Var) -> bool {
        self.coeffs.keys().any(|a| match a {
            Atom::Var(_) => false,
            Atom::FloorDiv(t, _) => t.mentions(v),
            Atom::Ite(c, x, y) => c.mentions(v) || x.mentions(v) || y.mentions(v),
        })
    }

    /// Exact evaluation under a total model.
    pub fn eval(&self, m: &Model) -> Result<Rational> {
        let mut acc = self.constant.clone();
        for (a, c) in &self.coeffs {
            let v = match a {
                Atom::Var(v) => m.value(v)?.clone(),
                Atom::FloorDiv(t, k) => {
                    let inner = t.eval(m)?;
                    (inner / Rational::from_integer(k.clone())).floor()
                }
                Atom::Ite(cond, x, y) => {
                    if m.eval_formula(cond)? {
                        x.eval(m)?
                    } else {
                        y.eval(m)?
                    }
                }
            };
            acc += v * c;
        }
        Ok(acc)
    }

    /// Substitute variables by terms (top-level and nested occurrences).
    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> Result<LinearTerm> {
        let mut out = LinearTerm::constant(self.constant.clone());
        for (a, c) in &self.coeffs {
            match a {
                Atom::Var(v) => match map.get(v) {
                    Some(t) => out.add_assign_scaled(t, c),
                    None => out.add_assign_scaled(&LinearTerm::var(v), c),
                },
                Atom::FloorDiv(t, k) => {
                    let inner = t.subst(map)?;
                    let d = LinearTerm::floor_div(inner, k.clone())?;
                    out.add_assign_scaled(&d, c);
                }
                Atom::Ite(cond, x, y) => {
                    let cond2 = crate::logic::subst_terms(cond, map)?;
                    let t = LinearTerm::ite(cond2, x.subst(map)?, y.subst(map)?);
                    out.add_assign_scaled(&t, c);
                }
            }
        }
        Ok(out)
    }

    /// Rename variables (used for priming and unpriming).
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> LinearTerm {
        let mut out = LinearTerm::constant(self.constant.clone());
        for (a, c) in &self.coeffs {
            let atom = match a {
                Atom::Var(v) => Atom::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
                Atom::FloorDiv(t, k) => Atom::FloorDiv(Box::new(t.rename(map)), k.clone()),
                Atom::Ite(cond, x, y) => Atom::Ite(
                    Box::new(crate::logic::rename_vars(cond, map)),
                    Box::new(x.rename(map)),
                    Box::new(y.rename(map)),
                ),
            };
            let entry = out.coeffs.entry(atom).or_insert_with(Rational::zero);
            *entry += c;
            // Renaming can merge previously distinct atoms.
            if entry.is_zero() {
                // Recompute key to remove: entry borrow ends first.
            }
        }
        out.coeffs.retain(|_, c| !c.is_zero());
        out
    }

    /// First conditional atom anywhere in the term, searching nested
    /// positions depth-first.
    pub fn find_ite(&self) -> Option<&Atom> {
        for a in self.coeffs.keys() {
            match a {
                Atom::Var(_) => {}
                Atom::Ite(_, _, _) => return Some(a),
                Atom::FloorDiv(t, _) => {
                    if let Some(found) = t.find_ite() {
                        return Some(found);
                    }
                }
            }
        }
        None
    }

    /// Replace every occurrence of `target` (an atom, possibly nested inside
    /// floor divisions or conditionals) by the term `replacement`.
    pub fn replace_atom(&self, target: &Atom, replacement: &LinearTerm) -> LinearTerm {
        let mut out = LinearTerm::constant(self.constant.clone());
        for (a, c) in &self.coeffs {
            if a == target {
                out.add_assign_scaled(replacement, c);
                continue;
            }
            let rewritten: LinearTerm = match a {
                Atom::Var(_) => LinearTerm::from_atom(a.clone()),
                Atom::FloorDiv(t, k) => LinearTerm::from_atom(Atom::FloorDiv(
                    Box::new(t.replace_atom(target, replacement)),
                    k.clone(),
                )),
                Atom::Ite(cond, x, y) => LinearTerm::from_atom(Atom::Ite(
                    cond.clone(),
                    Box::new(x.replace_atom(target, replacement)),
                    Box::new(y.replace_atom(target, replacement)),
                )),
            };
            out.add_assign_scaled(&rewritten, c);
        }
        out
    }

    /// True when every coefficient and the constant are integers.
    pub fn has_integer_coeffs(&self) -> bool {
        self.constant.is_integer() && self.coeffs.values().all(|c| c.is_integer())
    }
}

impl Add for LinearTerm {
    type Output = LinearTerm;
    fn add(mut self, rhs: LinearTerm) -> LinearTerm {
        self.add_assign_scaled(&rhs, &Rational::one());
        self
    }
}

impl Sub for LinearTerm {
    type Output = LinearTerm;
    fn sub(mut self, rhs: LinearTerm) -> LinearTerm {
        self.add_assign_scaled(&rhs, &-Rational::one());
        self
    }
}

impl Neg for LinearTerm {
    type Output = LinearTerm;
    fn neg(self) -> LinearTerm {
        self.scaled(&-Rational::one())
    }
}

impl Mul<Rational> for LinearTerm {
    type Output = LinearTerm;
    fn mul(self, k: Rational) -> LinearTerm {
        self.scaled(&k)
    }
}

impl fmt::Display for LinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::logic::print::term_infix(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Sort, VarRole};

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn v(name: &str) -> Var {
        Var::new(name, Sort::Int, VarRole::Output)
    }

    #[test]
    fn addition_merges_and_cancels() {
        let x = v("x");
        let t = LinearTerm::var(&x).scaled(&q(3)) + LinearTerm::var(&x).scaled(&q(-3));
        assert!(t.is_zero());
        let u = LinearTerm::var(&x) + LinearTerm::from_int(2);
        assert_eq!(u.coeff_of(&x), q(1));
        assert_eq!(u.constant, q(2));
    }

    #[test]
    fn floor_div_constant_folds() {
        let t = LinearTerm::floor_div(LinearTerm::from_int(7), BigInt::from(3)).unwrap();
        assert_eq!(t.as_constant(), Some(&q(2)));
        let neg = LinearTerm::floor_div(LinearTerm::from_int(-7), BigInt::from(3)).unwrap();
        assert_eq!(neg.as_constant(), Some(&q(-3)));
        assert!(LinearTerm::floor_div(LinearTerm::from_int(1), BigInt::from(0)).is_err());
    }

    #[test]
    fn eval_floor_div_under_model() {
        let x = v("x");
        let inner = LinearTerm::var(&x) + LinearTerm::from_int(7);
        let t = LinearTerm::floor_div(inner, BigInt::from(3)).unwrap();
        let mut m = Model::new();
        m.set(x.clone(), q(2));
        assert_eq!(t.eval(&m).unwrap(), q(3));
        m.set(x, q(-9));
        assert_eq!(t.eval(&m).unwrap(), q(-1));
    }

    #[test]
    fn rename_merges_atoms() {
        let x = v("x");
        let y = v("y");
        // x + y, then rename y -> x: expect 2x.
        let t = LinearTerm::var(&x) + LinearTerm::var(&y);
        let mut map = BTreeMap::new();
        map.insert(y.clone(), x.clone());
        let r = t.rename(&map);
        assert_eq!(r.coeff_of(&x), q(2));
        assert!(!r.mentions(&y));
    }

    #[test]
    fn subst_is_exact() {
        let x = v("x");
        let y = v("y");
        // 2y + 1 with y := x - 3  =>  2x - 5
        let t = LinearTerm::var(&y).scaled(&q(2)) + LinearTerm::from_int(1);
        let mut map = BTreeMap::new();
        map.insert(y, LinearTerm::var(&x) - LinearTerm::from_int(3));
        let s = t.subst(&map).unwrap();
        assert_eq!(s.coeff_of(&x), q(2));
        assert_eq!(s.constant, q(-5));
    }
}
