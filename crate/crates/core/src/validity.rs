//! Validity of forall-exists implications, with an executable witness.
//!
//! [`ae_val`] decides formulas of the shape
//! `forall X . context(X) => exists Y . matrix(X, Y)` by repeatedly asking
//! for a model of the not-yet-covered part of the context together with the
//! matrix. Each model singles out one satisfied path through the matrix;
//! projecting the existentials out of that path yields a guard region plus,
//! per existential, the binding literals that an update rule is extracted
//! from. When the regions cover the whole context the formula is valid and
//! the collected branches form a total update strategy; when a context
//! point admits no matrix model at all, the formula is invalid and the
//! union of regions found so far is reported as the maximal valid region.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logic::{true_literals, Atom, Formula, LinearTerm, Literal, Model, RelOp, Var};
use crate::mbp::project;
use crate::skolem::{classify, extract_deterministic, extract_random, simplify, LocalSkolem};
use crate::solver::{SatResult, Solver};

/// Whether extracted update rules may draw random values or must be
/// deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Random,
    Deterministic,
}

/// Knobs for the validity loop.
#[derive(Debug, Clone)]
pub struct AevalConfig {
    pub mode: Mode,
    /// Maximum number of refinement iterations (also bounds the outer
    /// synthesis loop).
    pub iter_cap: usize,
    /// Seed one branch per satisfiable disjunct of the matrix's disjunctive
    /// normal form before the model-guided loop runs.
    pub exhaustive_dnf: bool,
}

impl Default for AevalConfig {
    fn default() -> Self {
        AevalConfig { mode: Mode::Random, iter_cap: 10_000, exhaustive_dnf: false }
    }
}

/// One guarded arm of the synthesized strategy: when the guard holds over
/// the universals, applying the updates in order satisfies the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub guard: Vec<Literal>,
    pub updates: Vec<(Var, LocalSkolem)>,
}

impl Branch {
    pub fn guard_formula(&self) -> Formula {
        Formula::and(self.guard.iter().cloned().map(Formula::lit).collect())
    }
}

/// The complete strategy: branches in discovery order. Guards may overlap;
/// each covers its own region.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkolemTree {
    pub branches: Vec<Branch>,
}

/// Outcome of the validity check.
#[derive(Debug, Clone)]
pub enum AeOutcome {
    Valid(SkolemTree),
    Invalid {
        /// Union of the guard regions found before the uncoverable point:
        /// the maximal part of the context on which the matrix is solvable.
        valid_region: Formula,
    },
}

/// Decide `forall universals . context => exists existentials . matrix`.
///
/// `context` must not mention the existentials. The model for each branch
/// is drawn from `context && matrix` jointly, so guards inherit the context
/// literals that the path depends on.
pub fn ae_val(
    universals: &[Var],
    existentials: &[Var],
    context: &Formula,
    matrix: &Formula,
    cfg: &AevalConfig,
    solver: &Solver,
) -> Result<AeOutcome> {
    for y in existentials {
        debug_assert!(!context.mentions(y), "context must be free of {y:?}");
    }
    let _ = universals;

    let mut tree = SkolemTree::default();
    let mut covered: Vec<Formula> = Vec::new();
    let joint = Formula::and2(context.clone(), matrix.clone());

    if cfg.exhaustive_dnf {
        // Visit every satisfiable disjunct once so distinct update shapes
        // all surface, even when one region subsumes another.
        for cube in crate::logic::to_dnf(&joint, solver.cfg.dnf_cap)? {
            let lits: Vec<Literal> = cube.into_iter().collect();
            let cube_formula =
                Formula::and(lits.iter().cloned().map(Formula::lit).collect());
            if let SatResult::Sat(m) = solver.check(&cube_formula)? {
                grow_branch(&mut tree, &mut covered, existentials, context, &lits, &m, cfg, solver)?;
            }
        }
    }

    for _ in 0..cfg.iter_cap {
        let remaining = Formula::and2(
            context.clone(),
            Formula::and(covered.iter().cloned().map(Formula::not).collect()),
        );
        if !solver.check(&remaining)?.is_sat() {
            return Ok(AeOutcome::Valid(tree));
        }
        match solver.check(&Formula::and2(remaining, matrix.clone()))? {
            SatResult::Sat(m) => {
                let path = true_literals(&joint, &m)?;
                grow_branch(&mut tree, &mut covered, existentials, context, &path, &m, cfg, solver)?;
            }
            SatResult::Unsat => {
                return Ok(AeOutcome::Invalid { valid_region: Formula::or(covered) });
            }
        }
    }
    Err(Error::Resource(format!(
        "validity loop exceeded {} iterations",
        cfg.iter_cap
    )))
}

/// Project one satisfied path, extract its update rules, and record the
/// covered region.
fn grow_branch(
    tree: &mut SkolemTree,
    covered: &mut Vec<Formula>,
    existentials: &[Var],
    context: &Formula,
    path: &[Literal],
    m: &Model,
    cfg: &AevalConfig,
    solver: &Solver,
) -> Result<()> {
    let projection = project(existentials, path, m)?;
    let pre = minimize_guard(context, projection.pre, solver)?;
    let guard = Formula::and(pre.iter().cloned().map(Formula::lit).collect());
    // Bucket pruning and pinch detection may use everything that holds when
    // the branch runs: the guard and the invariant context around it.
    let scope = Formula::and2(context.clone(), guard.clone());
    let mut updates = Vec::new();
    for (y, residual) in &projection.residuals {
        let mut buckets = classify(y, residual)?;
        simplify(&mut buckets, &scope, solver)?;
        let rule = match cfg.mode {
            Mode::Random => extract_random(y, &buckets, &scope, solver)?,
            Mode::Deterministic => extract_deterministic(y, &buckets)?,
        };
        updates.push((y.clone(), rule));
    }
    rewrite_updates_with_equalities(&pre, &mut updates)?;
    tree.branches.push(Branch { guard: pre, updates });
    covered.push(guard);
    Ok(())
}

/// Drop guard literals that the remaining ones already imply inside the
/// context. The guard region within the context is unchanged — and that is
/// the only place a branch can run, since reachable states satisfy the
/// invariant and inputs satisfy the assumptions — so redundant context
/// echoes vanish from the arms.
fn minimize_guard(
    context: &Formula,
    mut lits: Vec<Literal>,
    solver: &Solver,
) -> Result<Vec<Literal>> {
    let mut i = 0;
    while i < lits.len() {
        let rest: Vec<Formula> = lits
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| Formula::lit(l.clone()))
            .collect();
        let probe = Formula::and(vec![
            context.clone(),
            Formula::and(rest),
            Formula::lit(lits[i].negated()),
        ]);
        if solver.check(&probe)?.is_sat() {
            i += 1;
        } else {
            lits.remove(i);
        }
    }
    Ok(lits)
}

/// A guard equality pins an affine combination of the universals, so the
/// branch updates may be written without it: `-(position + x)` under the
/// guard `position + x == 1` is plainly `-1`. Solve each equality for one
/// variable and substitute through the update rules.
fn rewrite_updates_with_equalities(
    guard: &[Literal],
    updates: &mut [(Var, LocalSkolem)],
) -> Result<()> {
    let mut map: BTreeMap<Var, LinearTerm> = BTreeMap::new();
    for lit in guard.iter().filter(|l| l.op == RelOp::Eq) {
        let lhs = lit.lhs.subst(&map)?;
        let Some((v, coeff)) = lhs.coeffs.iter().find_map(|(a, c)| match a {
            Atom::Var(v) => Some((v.clone(), c.clone())),
            _ => None,
        }) else {
            continue;
        };
        // lhs = coeff * v + rest == 0, so v = rest * (-1 / coeff).
        let mut rest = lhs.clone();
        rest.add_assign_scaled(&LinearTerm::var(&v), &-coeff.clone());
        let solution = rest.scaled(&-coeff.recip());
        for image in map.values_mut() {
            let mut one = BTreeMap::new();
            one.insert(v.clone(), solution.clone());
            *image = image.subst(&one)?;
        }
        map.insert(v, solution);
    }
    if map.is_empty() {
        return Ok(());
    }
    for (_, rule) in updates.iter_mut() {
        *rule = rule.subst(&map)?;
    }
    Ok(())
}
