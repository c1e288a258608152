//! Turning the binding literals of one output variable into executable
//! update rules.
//!
//! [`classify`] sorts a variable's binding literals into buckets by the
//! relation they impose once the variable is isolated: definitions,
//! exclusions, and the four bound shapes. [`simplify`] prunes bounds that
//! are dominated under the branch guard and exclusions that can never be
//! hit. [`extract_random`] then produces a rule whose leaves call an
//! uninterpreted range-draw (so any generator honouring the draw contract
//! yields a correct implementation), while [`extract_deterministic`]
//! produces a fixed representative of the same feasible set.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::Result;
use crate::logic::{subst_terms, Formula, LinearTerm, Literal, RelOp, Var};
use crate::solver::Solver;

/// Bound literals for one variable, isolated and sorted by relation.
/// Source strictness is preserved: an integer `y > t` stays in the strict
/// bucket rather than being folded to `y >= t + 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Buckets {
    /// Definitions: `y = t`.
    pub eq: Vec<LinearTerm>,
    /// Exclusions: `y != t`.
    pub ne: Vec<LinearTerm>,
    /// Strict lower bounds: `y > t`.
    pub gt: Vec<LinearTerm>,
    /// Inclusive lower bounds: `y >= t`.
    pub ge: Vec<LinearTerm>,
    /// Strict upper bounds: `y < t`.
    pub lt: Vec<LinearTerm>,
    /// Inclusive upper bounds: `y <= t`.
    pub le: Vec<LinearTerm>,
}

/// One side of a draw range. A missing side is an infinite one and counts
/// as inclusive. `closed` is usually a constant truth value but may stay
/// symbolic when strict and inclusive bounds compete and the guard does not
/// settle which one wins.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub term: Option<LinearTerm>,
    pub closed: Formula,
}

impl Bound {
    fn infinite() -> Self {
        Bound { term: None, closed: Formula::True }
    }

    /// Apply a variable-to-term substitution to the bound.
    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> Result<Bound> {
        Ok(Bound {
            term: match &self.term {
                Some(t) => Some(t.subst(map)?),
                None => None,
            },
            closed: subst_terms(&self.closed, map)?,
        })
    }
}

/// A call to the uninterpreted range generator: any value of the
/// variable's sort within the described range and distinct from every
/// `avoid` term satisfies the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct UrngCall {
    pub var: Var,
    pub avoid: Vec<LinearTerm>,
    pub lower: Bound,
    pub upper: Bound,
}

/// Executable update rule for a single output variable.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalSkolem {
    /// Deterministic assignment of a term over inputs, current state, and
    /// earlier outputs.
    Assign(LinearTerm),
    /// Conditional between two rules.
    GuardedPair {
        cond: Formula,
        when_true: Box<LocalSkolem>,
        when_false: Box<LocalSkolem>,
    },
    /// Random draw within a range, avoiding finitely many points.
    Urng(UrngCall),
}

impl UrngCall {
    /// Apply a variable-to-term substitution to every term in the call.
    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> Result<UrngCall> {
        let avoid = self
            .avoid
            .iter()
            .map(|t| t.subst(map))
            .collect::<Result<Vec<_>>>()?;
        Ok(UrngCall {
            var: self.var.clone(),
            avoid,
            lower: self.lower.subst(map)?,
            upper: self.upper.subst(map)?,
        })
    }
}

impl LocalSkolem {
    /// Apply a variable-to-term substitution throughout the rule.
    pub fn subst(&self, map: &BTreeMap<Var, LinearTerm>) -> Result<LocalSkolem> {
        Ok(match self {
            LocalSkolem::Assign(t) => LocalSkolem::Assign(t.subst(map)?),
            LocalSkolem::GuardedPair { cond, when_true, when_false } => LocalSkolem::GuardedPair {
                cond: subst_terms(cond, map)?,
                when_true: Box::new(when_true.subst(map)?),
                when_false: Box::new(when_false.subst(map)?),
            },
            LocalSkolem::Urng(call) => LocalSkolem::Urng(call.subst(map)?),
        })
    }
}

/// Isolate each binding literal on `y` and sort it into its bucket.
pub fn classify(y: &Var, residual: &[Literal]) -> Result<Buckets> {
    let mut b = Buckets::default();
    for lit in residual {
        let iso = lit.isolate(y)?;
        match iso.op {
            RelOp::Eq => b.eq.push(iso.bound),
            RelOp::Ne => b.ne.push(iso.bound),
            RelOp::Gt => b.gt.push(iso.bound),
            RelOp::Ge => b.ge.push(iso.bound),
            RelOp::Lt => b.lt.push(iso.bound),
            RelOp::Le => b.le.push(iso.bound),
        }
    }
    Ok(b)
}

/// Drop duplicate terms, bounds dominated under the guard, and exclusions
/// that fall strictly outside the bounded range.
pub fn simplify(b: &mut Buckets, guard: &Formula, solver: &Solver) -> Result<()> {
    for bucket in [&mut b.eq, &mut b.ne, &mut b.gt, &mut b.ge, &mut b.lt, &mut b.le] {
        let mut seen: Vec<LinearTerm> = Vec::new();
        bucket.retain(|t| {
            if seen.contains(t) {
                false
            } else {
                seen.push(t.clone());
                true
            }
        });
    }

    prune_side(&mut b.gt, &mut b.ge, guard, solver, true)?;
    prune_side(&mut b.lt, &mut b.le, guard, solver, false)?;

    // An exclusion strictly outside the closed hull of the bounds can never
    // collide with a drawn value.
    if b.eq.is_empty() {
        let lower = side_term(&b.gt, &b.ge, true);
        let upper = side_term(&b.lt, &b.le, false);
        if lower.is_some() || upper.is_some() {
            let mut kept = Vec::new();
            for h in b.ne.drain(..) {
                let mut outside = Vec::new();
                if let Some(l) = &lower {
                    outside.push(Formula::lit(Literal::cmp(h.clone(), RelOp::Lt, l.clone())));
                }
                if let Some(u) = &upper {
                    outside.push(Formula::lit(Literal::cmp(h.clone(), RelOp::Gt, u.clone())));
                }
                if !solver.entails(guard, &Formula::or(outside))? {
                    kept.push(h);
                }
            }
            b.ne = kept;
        }
    }
    Ok(())
}

/// Dominance pruning for one side's strict and inclusive buckets.
/// For lower bounds (`lower_side`), a bound is dominated when another bound
/// is at least as tight everywhere under the guard; mixed strictness needs
/// a strict gap in one direction and tolerates equality in the other.
fn prune_side(
    strict: &mut Vec<LinearTerm>,
    closed: &mut Vec<LinearTerm>,
    guard: &Formula,
    solver: &Solver,
    lower_side: bool,
) -> Result<()> {
    // (term, is_strict, original bucket index)
    let mut all: Vec<(LinearTerm, bool)> = strict
        .iter()
        .cloned()
        .map(|t| (t, true))
        .chain(closed.iter().cloned().map(|t| (t, false)))
        .collect();
    let mut keep = vec![true; all.len()];
    for i in 0..all.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..all.len() {
            if i == j || !keep[j] || !keep[i] {
                continue;
            }
            let (ti, si) = all[i].clone();
            let (tj, sj) = &all[j];
            // Does bound j dominate bound i?
            let op = match (si, *sj, lower_side) {
                // Same strictness: j dominates when it is at least as tight.
                (a, b, true) if a == b => RelOp::Le,
                (a, b, false) if a == b => RelOp::Ge,
                // Strict i, inclusive j: j must be strictly tighter.
                (true, false, true) => RelOp::Lt,
                (true, false, false) => RelOp::Gt,
                // Inclusive i, strict j: equality already suffices.
                (false, true, true) => RelOp::Le,
                (false, true, false) => RelOp::Ge,
                _ => unreachable!(),
            };
            let dominated = Formula::lit(Literal::cmp(ti, op, tj.clone()));
            if solver.entails(guard, &dominated)? {
                keep[i] = false;
            }
        }
    }
    let mut it = keep.iter();
    let kept: Vec<(LinearTerm, bool)> = all
        .drain(..)
        .filter(|_| *it.next().unwrap())
        .collect();
    strict.clear();
    closed.clear();
    for (t, s) in kept {
        if s {
            strict.push(t);
        } else {
            closed.push(t);
        }
    }
    Ok(())
}

/// Symbolic tightest bound of one side: the max of all lower bounds or the
/// min of all upper bounds, as a conditional chain.
fn chain(terms: &[LinearTerm], lower_side: bool) -> Option<LinearTerm> {
    let (first, rest) = terms.split_first()?;
    match chain(rest, lower_side) {
        None => Some(first.clone()),
        Some(tail) => {
            let op = if lower_side { RelOp::Ge } else { RelOp::Le };
            let cond = Formula::lit(Literal::cmp(first.clone(), op, tail.clone()));
            Some(LinearTerm::ite(cond, first.clone(), tail))
        }
    }
}

/// Tightest bound of a side across both strictness buckets, ignoring
/// closedness (used for hull checks).
fn side_term(strict: &[LinearTerm], closed: &[LinearTerm], lower_side: bool) -> Option<LinearTerm> {
    let joined: Vec<LinearTerm> = strict.iter().chain(closed).cloned().collect();
    chain(&joined, lower_side)
}

/// The tightest bound of one side together with its closedness. When both
/// strict and inclusive bounds exist the closedness is the comparison
/// "the inclusive winner is tighter", folded to a constant when the guard
/// settles it.
fn side_bound(
    strict: &[LinearTerm],
    closed: &[LinearTerm],
    lower_side: bool,
    guard: &Formula,
    solver: &Solver,
) -> Result<Bound> {
    let s = chain(strict, lower_side);
    let c = chain(closed, lower_side);
    Ok(match (s, c) {
        (None, None) => Bound::infinite(),
        (Some(t), None) => Bound { term: Some(t), closed: Formula::False },
        (None, Some(t)) => Bound { term: Some(t), closed: Formula::True },
        (Some(st), Some(ct)) => {
            // The draw may sit on the bound exactly when the inclusive
            // winner is strictly tighter than the strict winner.
            let closed_when = if lower_side {
                Formula::lit(Literal::cmp(st.clone(), RelOp::Lt, ct.clone()))
            } else {
                Formula::lit(Literal::cmp(ct.clone(), RelOp::Lt, st.clone()))
            };
            let folded = if solver.entails(guard, &closed_when)? {
                Formula::True
            } else if solver.entails(guard, &Formula::not(closed_when.clone()))? {
                Formula::False
            } else {
                closed_when
            };
            let cond = if lower_side {
                Formula::lit(Literal::cmp(st.clone(), RelOp::Ge, ct.clone()))
            } else {
                Formula::lit(Literal::cmp(st.clone(), RelOp::Le, ct.clone()))
            };
            Bound { term: Some(LinearTerm::ite(cond, st, ct)), closed: folded }
        }
    })
}

/// Extract the random update rule for `y` from its simplified buckets.
pub fn extract_random(
    y: &Var,
    b: &Buckets,
    guard: &Formula,
    solver: &Solver,
) -> Result<LocalSkolem> {
    if let Some(t) = b.eq.iter().min() {
        return Ok(LocalSkolem::Assign(t.clone()));
    }
    let lower = side_bound(&b.gt, &b.ge, true, guard, solver)?;
    let upper = side_bound(&b.lt, &b.le, false, guard, solver)?;
    let call = UrngCall {
        var: y.clone(),
        avoid: b.ne.clone(),
        lower: lower.clone(),
        upper: upper.clone(),
    };
    if let (Some(l), Some(u)) = (&lower.term, &upper.term) {
        let pinched = Formula::lit(Literal::cmp(l.clone(), RelOp::Eq, u.clone()));
        if l == u || solver.entails(guard, &pinched)? {
            // The range is a single point everywhere: no freedom to draw.
            return Ok(LocalSkolem::Assign(l.clone()));
        }
        // A range that degenerates on part of the region needs no special
        // case: the bounds must both be inclusive wherever they coincide
        // (the branch region only contains states with a satisfiable
        // range), so the draw collapses to that single point at runtime.
    }
    Ok(LocalSkolem::Urng(call))
}

/// Extract a deterministic update rule for `y`: a fixed representative of
/// the same feasible range the random rule draws from.
pub fn extract_deterministic(y: &Var, b: &Buckets) -> Result<LocalSkolem> {
    if let Some(t) = b.eq.iter().min() {
        return Ok(LocalSkolem::Assign(t.clone()));
    }
    let lower = det_bound(&b.gt, &b.ge, true);
    let upper = det_bound(&b.lt, &b.le, false);
    let integral = y.is_integral();

    if b.ne.is_empty() {
        return Ok(LocalSkolem::Assign(representative(&lower, &upper, integral, 0, 0)?));
    }
    // One more candidate than there are excluded points: some candidate is
    // free as long as the range is wide enough to hold them all, which the
    // branch region guarantees for the contracts in scope.
    let count = b.ne.len();
    let mut rule = LocalSkolem::Assign(representative(&lower, &upper, integral, count, count)?);
    for i in (0..count).rev() {
        let cand = representative(&lower, &upper, integral, i, count)?;
        let misses: Vec<Formula> = b
            .ne
            .iter()
            .map(|h| Formula::lit(Literal::cmp(cand.clone(), RelOp::Ne, h.clone())))
            .collect();
        rule = LocalSkolem::GuardedPair {
            cond: Formula::and(misses),
            when_true: Box::new(LocalSkolem::Assign(cand)),
            when_false: Box::new(rule),
        };
    }
    Ok(rule)
}

/// The innermost point of one side for deterministic extraction: the bound
/// itself when inclusive, one step inside when strict (integers step by 1,
/// reals also step by 1 when only one side exists).
fn det_bound(strict: &[LinearTerm], closed: &[LinearTerm], lower_side: bool) -> Bound {
    let s = chain(strict, lower_side);
    let c = chain(closed, lower_side);
    match (s, c) {
        (None, None) => Bound::infinite(),
        (Some(t), None) => Bound { term: Some(t), closed: Formula::False },
        (None, Some(t)) => Bound { term: Some(t), closed: Formula::True },
        (Some(st), Some(ct)) => {
            let closed_when = if lower_side {
                Formula::lit(Literal::cmp(st.clone(), RelOp::Lt, ct.clone()))
            } else {
                Formula::lit(Literal::cmp(ct.clone(), RelOp::Lt, st.clone()))
            };
            let cond = if lower_side {
                Formula::lit(Literal::cmp(st.clone(), RelOp::Ge, ct.clone()))
            } else {
                Formula::lit(Literal::cmp(st.clone(), RelOp::Le, ct.clone()))
            };
            Bound { term: Some(LinearTerm::ite(cond, st, ct)), closed: closed_when }
        }
    }
}

/// The `i`-th of `total + 1` deterministic candidates inside the range
/// described by the two bounds.
fn representative(
    lower: &Bound,
    upper: &Bound,
    integral: bool,
    i: usize,
    total: usize,
) -> Result<LinearTerm> {
    let step = |b: &Bound, inward: i64| -> LinearTerm {
        let t = b.term.clone().expect("stepped bound must exist");
        let inside = t.clone() + LinearTerm::from_int(inward);
        match &b.closed {
            Formula::True => t,
            Formula::False => inside,
            flag => LinearTerm::ite(flag.clone(), t, inside),
        }
    };
    let offset = LinearTerm::from_int(i as i64);
    Ok(match (&lower.term, &upper.term) {
        (Some(l), Some(u)) if !integral => {
            // Interior points spaced evenly, never touching either end.
            let width = u.clone() - l.clone();
            let frac = BigRational::new(((i + 1) as i64).into(), ((total + 2) as i64).into());
            l.clone() + width.scaled(&frac)
        }
        (Some(_), _) if integral => step(lower, 1) + offset,
        (_, Some(_)) if integral => step(upper, -1) - offset,
        (Some(l), None) => l.clone() + LinearTerm::from_int(i as i64 + 1),
        (None, Some(u)) => u.clone() - LinearTerm::from_int(i as i64 + 1),
        (None, None) => offset,
        _ => unreachable!(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Sort;
    use crate::logic::VarRole;
    use crate::solver::Solver;

    fn solver() -> Solver {
        Solver::new(Default::default())
    }

    fn out(name: &str, sort: Sort) -> Var {
        Var::new(name, sort, VarRole::Output).primed()
    }

    fn term(v: &Var) -> LinearTerm {
        LinearTerm::var(v)
    }

    #[test]
    fn single_strict_lower_becomes_open_unbounded_draw() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let neg3x = term(&x).scaled(&BigRational::from_integer((-3).into()));
        let residual = vec![Literal::cmp(term(&y), RelOp::Gt, neg3x.clone())];
        let guard = Formula::lit(Literal::cmp(term(&x), RelOp::Le, LinearTerm::from_int(2)));
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &guard, &solver()).unwrap();
        let sk = extract_random(&y, &b, &guard, &solver()).unwrap();
        assert_eq!(
            sk,
            LocalSkolem::Urng(UrngCall {
                var: y.clone(),
                avoid: vec![],
                lower: Bound { term: Some(neg3x), closed: Formula::False },
                upper: Bound { term: None, closed: Formula::True },
            })
        );
    }

    #[test]
    fn single_strict_upper_becomes_open_unbounded_draw() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let five_x = term(&x).scaled(&BigRational::from_integer(5.into()));
        let residual = vec![Literal::cmp(term(&y), RelOp::Lt, five_x.clone())];
        let guard = Formula::lit(Literal::cmp(term(&x), RelOp::Ge, LinearTerm::from_int(-1)));
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &guard, &solver()).unwrap();
        let sk = extract_random(&y, &b, &guard, &solver()).unwrap();
        assert_eq!(
            sk,
            LocalSkolem::Urng(UrngCall {
                var: y.clone(),
                avoid: vec![],
                lower: Bound { term: None, closed: Formula::True },
                upper: Bound { term: Some(five_x), closed: Formula::False },
            })
        );
    }

    #[test]
    fn open_unit_interval_with_exclusions_keeps_avoid_list() {
        let y = out("y", Sort::Real);
        let x1 = Var::input("x1", Sort::Real);
        let x2 = Var::input("x2", Sort::Real);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Gt, LinearTerm::zero()),
            Literal::cmp(term(&y), RelOp::Lt, LinearTerm::from_int(1)),
            Literal::cmp(term(&y), RelOp::Ne, term(&x1)),
            Literal::cmp(term(&y), RelOp::Ne, term(&x2)),
        ];
        let guard = Formula::and2(
            Formula::lit(Literal::cmp(term(&x1), RelOp::Gt, LinearTerm::zero())),
            Formula::lit(Literal::cmp(term(&x2), RelOp::Gt, LinearTerm::zero())),
        );
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &guard, &solver()).unwrap();
        let sk = extract_random(&y, &b, &guard, &solver()).unwrap();
        assert_eq!(
            sk,
            LocalSkolem::Urng(UrngCall {
                var: y.clone(),
                avoid: vec![term(&x1), term(&x2)],
                lower: Bound { term: Some(LinearTerm::zero()), closed: Formula::False },
                upper: Bound { term: Some(LinearTerm::from_int(1)), closed: Formula::False },
            })
        );
    }

    #[test]
    fn guard_settles_dominance_between_two_lower_bounds() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let z = Var::input("z", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, term(&x)),
            Literal::cmp(term(&y), RelOp::Ge, term(&z)),
        ];
        let guard = Formula::lit(Literal::cmp(term(&z), RelOp::Le, term(&x)));
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &guard, &solver()).unwrap();
        assert_eq!(b.ge, vec![term(&x)], "z-bound is dominated under the guard");
        let sk = extract_random(&y, &b, &guard, &solver()).unwrap();
        assert_eq!(
            sk,
            LocalSkolem::Urng(UrngCall {
                var: y.clone(),
                avoid: vec![],
                lower: Bound { term: Some(term(&x)), closed: Formula::True },
                upper: Bound { term: None, closed: Formula::True },
            })
        );
    }

    #[test]
    fn undominated_lower_bounds_build_a_conditional_chain() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let z = Var::input("z", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, term(&x)),
            Literal::cmp(term(&y), RelOp::Ge, term(&z)),
        ];
        let guard = Formula::True;
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &guard, &solver()).unwrap();
        let sk = extract_random(&y, &b, &guard, &solver()).unwrap();
        let expected_max = LinearTerm::ite(
            Formula::lit(Literal::cmp(term(&x), RelOp::Ge, term(&z))),
            term(&x),
            term(&z),
        );
        assert_eq!(
            sk,
            LocalSkolem::Urng(UrngCall {
                var: y.clone(),
                avoid: vec![],
                lower: Bound { term: Some(expected_max), closed: Formula::True },
                upper: Bound { term: None, closed: Formula::True },
            })
        );
    }

    #[test]
    fn definition_wins_over_everything() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, LinearTerm::zero()),
            Literal::cmp(term(&y), RelOp::Eq, term(&x) + LinearTerm::from_int(1)),
        ];
        let b = classify(&y, &residual).unwrap();
        let sk = extract_random(&y, &b, &Formula::True, &solver()).unwrap();
        assert_eq!(sk, LocalSkolem::Assign(term(&x) + LinearTerm::from_int(1)));
        let det = extract_deterministic(&y, &b).unwrap();
        assert_eq!(det, LocalSkolem::Assign(term(&x) + LinearTerm::from_int(1)));
    }

    #[test]
    fn pinched_range_collapses_to_assignment() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, term(&x)),
            Literal::cmp(term(&y), RelOp::Le, term(&x)),
        ];
        let b = classify(&y, &residual).unwrap();
        let sk = extract_random(&y, &b, &Formula::True, &solver()).unwrap();
        assert_eq!(sk, LocalSkolem::Assign(term(&x)));
    }

    #[test]
    fn partially_pinched_range_stays_a_single_draw() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let z = Var::input("z", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, term(&x)),
            Literal::cmp(term(&y), RelOp::Le, term(&z)),
        ];
        // The range [x, z] may collapse to a point inside the region; both
        // sides are inclusive there, so one draw covers every case.
        let guard = Formula::lit(Literal::cmp(term(&x), RelOp::Le, term(&z)));
        let b = classify(&y, &residual).unwrap();
        let sk = extract_random(&y, &b, &guard, &solver()).unwrap();
        assert_eq!(
            sk,
            LocalSkolem::Urng(UrngCall {
                var: y.clone(),
                avoid: vec![],
                lower: Bound { term: Some(term(&x)), closed: Formula::True },
                upper: Bound { term: Some(term(&z)), closed: Formula::True },
            })
        );
    }

    #[test]
    fn deterministic_integer_bounds_step_inside_strict_ends() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let b = classify(&y, &[Literal::cmp(term(&y), RelOp::Gt, term(&x))]).unwrap();
        let det = extract_deterministic(&y, &b).unwrap();
        assert_eq!(det, LocalSkolem::Assign(term(&x) + LinearTerm::from_int(1)));

        let b = classify(&y, &[Literal::cmp(term(&y), RelOp::Le, term(&x))]).unwrap();
        let det = extract_deterministic(&y, &b).unwrap();
        assert_eq!(det, LocalSkolem::Assign(term(&x)));

        let b = classify(&y, &[]).unwrap();
        let det = extract_deterministic(&y, &b).unwrap();
        assert_eq!(det, LocalSkolem::Assign(LinearTerm::zero()));
    }

    #[test]
    fn deterministic_real_interval_takes_the_midpoint() {
        let y = out("y", Sort::Real);
        let x = Var::input("x", Sort::Real);
        let z = Var::input("z", Sort::Real);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, term(&x)),
            Literal::cmp(term(&y), RelOp::Le, term(&z)),
        ];
        let b = classify(&y, &residual).unwrap();
        let det = extract_deterministic(&y, &b).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let mid = term(&x).scaled(&half) + term(&z).scaled(&half);
        assert_eq!(det, LocalSkolem::Assign(mid));
    }

    #[test]
    fn deterministic_scan_skips_excluded_points() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, LinearTerm::zero()),
            Literal::cmp(term(&y), RelOp::Ne, term(&x)),
        ];
        let b = classify(&y, &residual).unwrap();
        let det = extract_deterministic(&y, &b).unwrap();
        assert_eq!(
            det,
            LocalSkolem::GuardedPair {
                cond: Formula::lit(Literal::cmp(LinearTerm::zero(), RelOp::Ne, term(&x))),
                when_true: Box::new(LocalSkolem::Assign(LinearTerm::zero())),
                when_false: Box::new(LocalSkolem::Assign(LinearTerm::from_int(1))),
            }
        );
    }

    #[test]
    fn out_of_range_exclusions_are_pruned() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Ge, LinearTerm::zero()),
            Literal::cmp(term(&y), RelOp::Le, LinearTerm::from_int(5)),
            Literal::cmp(term(&y), RelOp::Ne, term(&x)),
        ];
        let guard = Formula::lit(Literal::cmp(term(&x), RelOp::Gt, LinearTerm::from_int(9)));
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &guard, &solver()).unwrap();
        assert!(b.ne.is_empty(), "x sits above the whole range under the guard");
    }

    #[test]
    fn competing_strictness_keeps_symbolic_closedness_without_a_guard() {
        let y = out("y", Sort::Int);
        let x = Var::input("x", Sort::Int);
        let z = Var::input("z", Sort::Int);
        let residual = vec![
            Literal::cmp(term(&y), RelOp::Gt, term(&x)),
            Literal::cmp(term(&y), RelOp::Ge, term(&z)),
        ];
        let mut b = classify(&y, &residual).unwrap();
        simplify(&mut b, &Formula::True, &solver()).unwrap();
        let sk = extract_random(&y, &b, &Formula::True, &solver()).unwrap();
        let LocalSkolem::Urng(call) = sk else {
            panic!("expected a draw");
        };
        assert_eq!(
            call.lower.closed,
            Formula::lit(Literal::cmp(term(&x), RelOp::Lt, term(&z))),
            "closedness depends on which bound wins"
        );
    }
}
