//! Model-guided projection of a conjunction of literals.
//!
//! Given a conjunction `pi` over universal variables and a list of
//! existential variables, together with a model of the whole conjunction,
//! [`project`] eliminates the existentials one at a time (in reverse
//! declaration order) and returns:
//!
//! * `pre` — literals free of the existentials that are implied by the
//!   model's neighbourhood: wherever `pre` holds, values for the
//!   existentials satisfying `pi` are guaranteed to exist.
//! * `residuals` — for each existential, the small set of source literals
//!   that remained *binding* under the model (tightest lower bound,
//!   tightest upper bound, every disequality, or a defining equality).
//!   Downstream extraction turns exactly these into assignments and
//!   random-draw ranges; the ordering residues placed into `pre` are what
//!   make ignoring the dominated bounds sound.
//!
//! Real variables are eliminated by virtual substitution (an infinitesimal
//! offset for strict binding bounds), integer variables by substituting
//! `t* + k` where `t*` is the binding bound made inclusive and `k` is the
//! model distance. All emitted comparisons state the *exact* relation seen
//! in the model: two bounds that coincide produce an equality residue, a
//! strict gap over the integers produces its inclusive form.

use std::collections::BTreeSet;

use num_traits::One;

use crate::error::{Error, Result};
use crate::logic::{true_literals, Formula, LinearTerm, Literal, Model, Rational, RelOp, Var};
use crate::solver::{SatResult, Solver};

/// Result of projecting the existentials out of a literal conjunction.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Literals over the remaining (universal) variables describing the
    /// region in which the projected system stays solvable.
    pub pre: Vec<Literal>,
    /// For each existential, in the order given to [`project`]: the binding
    /// source literals to extract an assignment or draw range from. Entries
    /// may mention universals and earlier existentials only.
    pub residuals: Vec<(Var, Vec<Literal>)>,
}

/// A bound on the variable being eliminated.
struct Bound {
    /// The literal it came from, in source form.
    source: Literal,
    /// Isolated bound term (free of the eliminated variable).
    term: LinearTerm,
    /// Strictness of the source comparison. Always `false` for integer
    /// variables: strict integer bounds are absorbed into `effective`.
    strict: bool,
    /// The inclusive substitution candidate: for integers `term ± 1` when
    /// the source was strict, otherwise `term` itself.
    effective: LinearTerm,
    /// Model value of `effective`.
    value: Rational,
}

/// Eliminate `existentials` from the conjunction `pi`, guided by a model
/// `m` of the whole conjunction.
pub fn project(existentials: &[Var], pi: &[Literal], m: &Model) -> Result<Projection> {
    for lit in pi {
        if !m.eval_literal(lit)? {
            return Err(Error::Internal(format!(
                "projection model does not satisfy path literal {lit}"
            )));
        }
    }

    let mut work: Vec<Literal> = dedup(pi.to_vec());
    let mut residuals: Vec<(Var, Vec<Literal>)> = Vec::new();

    for y in existentials.iter().rev() {
        let (with_y, rest): (Vec<Literal>, Vec<Literal>) =
            work.into_iter().partition(|l| l.mentions(y));
        work = rest;
        if with_y.is_empty() {
            residuals.push((y.clone(), Vec::new()));
            continue;
        }
        let residual = eliminate_var(y, with_y, m, &mut work)?;
        residuals.push((y.clone(), residual));
    }

    for lit in &work {
        debug_assert!(
            existentials.iter().all(|y| !lit.mentions(y)),
            "projection left an existential in {lit}"
        );
    }

    residuals.reverse();
    Ok(Projection {
        pre: dedup(work),
        residuals,
    })
}

/// Eliminate a single variable from the literals that mention it, pushing
/// residue literals onto `out`, and returning the binding source literals.
fn eliminate_var(y: &Var, with_y: Vec<Literal>, m: &Model, out: &mut Vec<Literal>) -> Result<Vec<Literal>> {
    let mut equalities: Vec<(Literal, LinearTerm, Option<Literal>)> = Vec::new();
    let mut disequalities: Vec<(Literal, LinearTerm)> = Vec::new();
    let mut lowers: Vec<Bound> = Vec::new();
    let mut uppers: Vec<Bound> = Vec::new();
    let one = LinearTerm::from_int(1);

    for lit in &with_y {
        let iso = lit.isolate(y)?;
        match iso.op {
            RelOp::Eq => equalities.push((lit.clone(), iso.bound, iso.side)),
            RelOp::Ne => disequalities.push((lit.clone(), iso.bound)),
            RelOp::Ge | RelOp::Gt => {
                let strict = iso.op == RelOp::Gt;
                let effective = if strict && y.is_integral() {
                    iso.bound.clone() + one.clone()
                } else {
                    iso.bound.clone()
                };
                let value = effective.eval(m)?;
                lowers.push(Bound {
                    source: lit.clone(),
                    term: iso.bound,
                    strict: strict && !y.is_integral(),
                    effective,
                    value,
                });
            }
            RelOp::Le | RelOp::Lt => {
                let strict = iso.op == RelOp::Lt;
                let effective = if strict && y.is_integral() {
                    iso.bound.clone() - one.clone()
                } else {
                    iso.bound.clone()
                };
                let value = effective.eval(m)?;
                uppers.push(Bound {
                    source: lit.clone(),
                    term: iso.bound,
                    strict: strict && !y.is_integral(),
                    effective,
                    value,
                });
            }
        }
    }

    // A defining equality substitutes directly: every other literal keeps
    // its source form with the variable replaced, so no information is lost.
    if !equalities.is_empty() {
        equalities.sort_by(|a, b| (a.2.is_some(), &a.0).cmp(&(b.2.is_some(), &b.0)));
        let (src, bound, side) = equalities.swap_remove(0);
        let mut map = std::collections::BTreeMap::new();
        map.insert(y.clone(), bound);
        if let Some(side_lit) = side {
            push_residue(side_lit, m, out)?;
        }
        for lit in with_y {
            if lit == src {
                continue;
            }
            push_residue(lit.subst(&map)?, m, out)?;
        }
        return Ok(vec![src]);
    }

    // Only disequalities: over an unbounded domain finitely many excluded
    // points never block a choice, so nothing constrains the region.
    if lowers.is_empty() && uppers.is_empty() {
        return Ok(disequalities.into_iter().map(|(src, _)| src).collect());
    }

    let integral = y.is_integral();
    let binding_lower = pick_binding(&lowers, true);
    let binding_upper = pick_binding(&uppers, false);

    // Ordering residues: every dominated bound is pinned to its exact
    // relation with the binding bound of the same side. These keep the
    // binding pair binding throughout the region, which is what lets the
    // residual drop the dominated bounds entirely.
    if let Some(bi) = binding_lower {
        let best = &lowers[bi];
        for (j, b) in lowers.iter().enumerate() {
            if j != bi {
                push_residue(ordering_residue(b, best, integral)?, m, out)?;
            }
        }
    }
    if let Some(bi) = binding_upper {
        let best = &uppers[bi];
        for (j, b) in uppers.iter().enumerate() {
            if j != bi {
                push_residue(ordering_residue(best, b, integral)?, m, out)?;
            }
        }
    }

    // The virtual value substituted for the variable, when one is needed
    // beyond an infinitesimal offset.
    if integral {
        let (base, base_val) = match binding_lower {
            Some(bi) => (&lowers[bi], &lowers[bi].value),
            None => {
                let bi = binding_upper.expect("bounded side exists");
                (&uppers[bi], &uppers[bi].value)
            }
        };
        let k = m.value(y)? - base_val.clone();
        debug_assert!(k.is_integer(), "integer model distance must be integral");
        let sub = base.effective.clone() + LinearTerm::constant(k);
        if binding_lower.is_some() {
            if let Some(bi) = binding_upper {
                push_residue(
                    Literal::new(sub.clone() - uppers[bi].effective.clone(), RelOp::Le),
                    m,
                    out,
                )?;
            }
        }
        for (_, h) in &disequalities {
            push_residue(Literal::new(sub.clone() - h.clone(), RelOp::Ne), m, out)?;
        }
    } else {
        let binding = match binding_lower {
            Some(bi) => &lowers[bi],
            None => &uppers[binding_upper.expect("bounded side exists")],
        };
        if binding_lower.is_some() {
            if let Some(bi) = binding_upper {
                // A strict binding lower leaves an infinitesimal slack, so a
                // strict gap to the upper bound is required either way; a
                // closed binding lower touches, so the upper's own
                // strictness decides.
                let op = if binding.strict || uppers[bi].strict {
                    RelOp::Lt
                } else {
                    RelOp::Le
                };
                push_residue(
                    Literal::new(binding.term.clone() - uppers[bi].term.clone(), op),
                    m,
                    out,
                )?;
            }
        }
        if !binding.strict {
            // The substituted point is exactly the binding bound, so each
            // excluded point must stay away from it. With an infinitesimal
            // offset no excluded point can ever be hit.
            for (_, h) in &disequalities {
                push_residue(
                    Literal::new(binding.term.clone() - h.clone(), RelOp::Ne),
                    m,
                    out,
                )?;
            }
        }
    }

    let mut residual = Vec::new();
    if let Some(bi) = binding_lower {
        residual.push(lowers[bi].source.clone());
    }
    if let Some(bi) = binding_upper {
        residual.push(uppers[bi].source.clone());
    }
    residual.extend(disequalities.into_iter().map(|(src, _)| src));
    Ok(residual)
}

/// Index of the binding bound: greatest lower / least upper by model value,
/// preferring strict bounds on ties (they are the tighter constraint) and
/// breaking remaining ties by source-literal order.
fn pick_binding(bounds: &[Bound], lower: bool) -> Option<usize> {
    bounds.iter().enumerate().min_by(|(_, a), (_, b)| {
        let by_value = if lower {
            b.value.cmp(&a.value)
        } else {
            a.value.cmp(&b.value)
        };
        by_value
            .then_with(|| b.strict.cmp(&a.strict))
            .then_with(|| a.source.cmp(&b.source))
    }).map(|(i, _)| i)
}

/// Exact relation between a dominated bound and the binding bound of the
/// same side, as witnessed by the model: `lo` is the side that the model
/// places at or below `hi`. Over the integers the strict case is emitted in
/// inclusive form.
fn ordering_residue(lo: &Bound, hi: &Bound, integral: bool) -> Result<Literal> {
    if lo.value == hi.value {
        return Ok(Literal::new(lo.effective.clone() - hi.effective.clone(), RelOp::Eq));
    }
    debug_assert!(lo.value < hi.value);
    if integral {
        let shifted = lo.effective.clone() - hi.effective.clone()
            + LinearTerm::constant(Rational::one());
        Ok(Literal::new(shifted, RelOp::Le))
    } else {
        Ok(Literal::new(lo.effective.clone() - hi.effective.clone(), RelOp::Lt))
    }
}

/// Fold, sanity-check against the model, and emit a residue literal.
fn push_residue(lit: Literal, m: &Model, out: &mut Vec<Literal>) -> Result<()> {
    match lit.as_const() {
        Some(true) => Ok(()),
        Some(false) => Err(Error::Internal(format!(
            "projection produced an unsatisfiable residue {lit}"
        ))),
        None => {
            debug_assert!(
                m.eval_literal(&lit).unwrap_or(false),
                "projection residue {lit} must hold in the guiding model"
            );
            out.push(lit);
            Ok(())
        }
    }
}

/// Order-preserving deduplication.
fn dedup(lits: Vec<Literal>) -> Vec<Literal> {
    let mut seen = BTreeSet::new();
    lits.into_iter().filter(|l| seen.insert(l.clone())).collect()
}

/// Quantifier elimination by enumeration: returns a disjunction equivalent
/// to `∃ vars. f`, built from model-guided projections. Each round asks the
/// solver for a model of `f` outside the regions found so far, projects
/// `vars` out of the satisfied path, and adds the projection's guard to the
/// union. `cap` bounds the number of regions.
pub fn eliminate(vars: &[Var], f: &Formula, solver: &Solver, cap: usize) -> Result<Formula> {
    let mut pieces: Vec<Formula> = Vec::new();
    loop {
        let blocked = Formula::and2(f.clone(), Formula::not(Formula::or(pieces.clone())));
        match solver.check(&blocked)? {
            SatResult::Unsat => return Ok(Formula::or(pieces)),
            SatResult::Sat(m) => {
                if pieces.len() == cap {
                    return Err(Error::Resource(format!(
                        "projection enumeration exceeded {cap} regions"
                    )));
                }
                let path = true_literals(f, &m)?;
                let proj = project(vars, &path, &m)?;
                pieces.push(Formula::and(
                    proj.pre.into_iter().map(Formula::lit).collect(),
                ));
            }
        }
    }
}
