//! Satisfiability of quantifier-free linear integer/real arithmetic.
//!
//! Two backends share one interface. The internal backend is a complete
//! decision procedure for the fragment this crate produces: negation normal
//! form, conditional-term lifting, floor-division elimination, disjunctive
//! normal form, then per-conjunction equality elimination, Fourier–Motzkin
//! projection, integer-aware back-substitution with branch-and-bound splits,
//! and lazy disequality splitting. Every satisfiable answer is re-checked by
//! evaluating the original formula under the model before it is returned.
//!
//! The external backend writes a one-shot SMT-LIB 2 script to a temporary
//! file and runs a solver process on it, with a wall-clock timeout. If the
//! process cannot be spawned at all, the query degrades to the internal
//! backend so a missing binary never blocks a run.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::logic::{
    nnf, print, to_dnf, Atom, Formula, LinearTerm, Literal, Model, Rational, RelOp, Sort, Var,
    VarRole,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Built-in decision procedure.
    Internal,
    /// External SMT-LIB 2 solver command line, e.g. `z3` or `cvc5 -q`.
    /// The script file path is appended as the last argument.
    External(String),
}

impl Backend {
    /// Parse a `--solver` style specification: `internal` selects the
    /// built-in procedure, anything else is an external command line.
    pub fn from_spec(spec: &str) -> Backend {
        if spec.trim().eq_ignore_ascii_case("internal") {
            Backend::Internal
        } else {
            Backend::External(spec.trim().to_string())
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Wall-clock budget per external query.
    pub timeout_ms: u64,
    /// Cap on disjunctive-normal-form growth in the internal backend.
    pub dnf_cap: usize,
    /// Budget for branch-and-bound and disequality splits per conjunction.
    pub split_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: Backend::Internal,
            timeout_ms: 10_000,
            dnf_cap: 4096,
            split_budget: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model(self) -> Option<Model> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Solver {
    pub cfg: SolverConfig,
}

static FRESH: AtomicU64 = AtomicU64::new(0);

fn fresh_int_var(prefix: &str) -> Var {
    let n = FRESH.fetch_add(1, Ordering::Relaxed);
    Var::new(&format!("%{prefix}{n}"), Sort::Int, VarRole::Local)
}

/// A solver-internal integer variable with a caller-chosen suffix. The `%`
/// prefix keeps it out of the surface identifier space.
fn fresh_int_local(name: &str) -> Var {
    Var::new(&format!("%{name}"), Sort::Int, VarRole::Local)
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Self {
        Solver { cfg }
    }

    /// Decide satisfiability of a quantifier-free formula. All free
    /// variables are implicitly existential; a satisfying model assigns
    /// every variable that occurs in the formula.
    pub fn check(&self, f: &Formula) -> Result<SatResult> {
        match &self.cfg.backend {
            Backend::Internal => self.check_internal(f),
            Backend::External(cmd) => match self.check_external(cmd, f) {
                Err(Error::External(msg)) if msg.contains("failed to spawn") => {
                    self.check_internal(f)
                }
                other => other,
            },
        }
    }

    pub fn is_valid(&self, f: &Formula) -> Result<bool> {
        Ok(!self.check(&Formula::not(f.clone()))?.is_sat())
    }

    pub fn entails(&self, a: &Formula, b: &Formula) -> Result<bool> {
        self.is_valid(&Formula::implies(a.clone(), b.clone()))
    }

    pub fn equivalent(&self, a: &Formula, b: &Formula) -> Result<bool> {
        self.is_valid(&Formula::iff(a.clone(), b.clone()))
    }

    // -----------------------------------------------------------------
    // Internal backend
    // -----------------------------------------------------------------

    fn check_internal(&self, f: &Formula) -> Result<SatResult> {
        let original_vars = f.vars();
        let prepared = prepare(f)?;
        let dnf = to_dnf(&prepared, self.cfg.dnf_cap)?;
        for conjunct in &dnf {
            let mut budget = self.cfg.split_budget;
            let lits: Vec<Literal> = conjunct.iter().cloned().collect();
            if let Some(m) = solve_conjunct(&lits, &mut budget)? {
                let mut full = m;
                // Variables of the original formula that the conjunction
                // never constrained.
                for v in &original_vars {
                    if !full.contains(v) {
                        full.set(v.clone(), Rational::zero());
                    }
                }
                let restricted = full.restricted(&original_vars.iter().cloned().collect::<Vec<_>>());
                if !restricted.eval_formula(f)? {
                    return Err(Error::Internal(format!(
                        "internal solver produced a bad model {restricted} for {f}"
                    )));
                }
                return Ok(SatResult::Sat(restricted));
            }
        }
        Ok(SatResult::Unsat)
    }

    // -----------------------------------------------------------------
    // External backend
    // -----------------------------------------------------------------

    fn check_external(&self, cmd: &str, f: &Formula) -> Result<SatResult> {
        let vars: Vec<Var> = f.vars().into_iter().collect();
        let script = build_script(f, &vars);
        let path = std::env::temp_dir().join(format!(
            "randsynth-{}-{}.smt2",
            std::process::id(),
            FRESH.fetch_add(1, Ordering::Relaxed)
        ));
        let run = || -> Result<SatResult> {
            std::fs::write(&path, &script)?;
            let mut parts = cmd.split_whitespace();
            let program = parts
                .next()
                .ok_or_else(|| Error::External("empty solver command".into()))?;
            let mut child = Command::new(program)
                .args(parts)
                .arg(&path)
                .stdin(Stdio::null())
                .stdout(Stdio::piped())
                .stderr(Stdio::piped())
                .spawn()
                .map_err(|e| Error::External(format!("failed to spawn {program}: {e}")))?;
            let deadline = Instant::now() + Duration::from_millis(self.cfg.timeout_ms);
            loop {
                match child.try_wait()? {
                    Some(_) => break,
                    None => {
                        if Instant::now() >= deadline {
                            let _ = child.kill();
                            let _ = child.wait();
                            return Err(Error::Timeout(self.cfg.timeout_ms));
                        }
                        std::thread::sleep(Duration::from_millis(5));
                    }
                }
            }
            let out = child
                .wait_with_output()
                .map_err(|e| Error::External(format!("reading solver output: {e}")))?;
            let stdout = String::from_utf8_lossy(&out.stdout);
            parse_solver_output(&stdout, &vars, f)
        };
        let result = run();
        let _ = std::fs::remove_file(&path);
        result
    }
}

fn build_script(f: &Formula, vars: &[Var]) -> String {
    let any_real = vars.iter().any(|v| v.sort == Sort::Real);
    let any_int = vars.iter().any(Var::is_integral);
    let logic = match (any_int, any_real) {
        (true, true) => "ALL",
        (false, true) => "LRA",
        _ => "LIA",
    };
    let mut s = String::new();
    s.push_str("(set-option :print-success false)\n");
    s.push_str(&format!("(set-logic {logic})\n"));
    let mut constraints = Vec::new();
    for v in vars {
        let sort = if v.is_integral() { "Int" } else { "Real" };
        s.push_str(&format!(
            "(declare-const {} {sort})\n",
            print::smt_symbol(&v.display_name())
        ));
        if v.sort == Sort::Bool {
            let name = print::smt_symbol(&v.display_name());
            constraints.push(format!("(and (<= 0 {name}) (<= {name} 1))"));
        }
    }
    s.push_str(&format!("(assert {})\n", print::formula_smt(f, !any_real)));
    for c in constraints {
        s.push_str(&format!("(assert {c})\n"));
    }
    s.push_str("(check-sat)\n");
    if !vars.is_empty() {
        let names: Vec<String> = vars
            .iter()
            .map(|v| print::smt_symbol(&v.display_name()))
            .collect();
        s.push_str(&format!("(get-value ({}))\n", names.join(" ")));
    }
    s
}

fn parse_solver_output(stdout: &str, vars: &[Var], f: &Formula) -> Result<SatResult> {
    let mut lines = stdout.lines();
    let verdict = loop {
        match lines.next() {
            None => {
                return Err(Error::External(format!(
                    "no check-sat answer in solver output: {stdout:?}"
                )))
            }
            Some(l) => {
                let l = l.trim();
                if l.is_empty() {
                    continue;
                }
                break l.to_string();
            }
        }
    };
    match verdict.as_str() {
        "unsat" => Ok(SatResult::Unsat),
        "unknown" => Err(Error::Indeterminate(
            "external solver answered unknown".into(),
        )),
        "sat" => {
            if vars.is_empty() {
                return Ok(SatResult::Sat(Model::new()));
            }
            let rest: String = lines.collect::<Vec<_>>().join("\n");
            let sexpr = crate::logic::parse::read_one(&rest).map_err(|e| {
                Error::External(format!("unreadable get-value response: {e}"))
            })?;
            let env = crate::logic::parse::name_env(vars.iter());
            let m = crate::logic::parse::parse_get_value(&sexpr, &env)?;
            if !m.eval_formula(f)? {
                return Err(Error::Internal(format!(
                    "external solver returned a model that does not satisfy the query: {m}"
                )));
            }
            Ok(SatResult::Sat(m))
        }
        other => Err(Error::External(format!(
            "unexpected solver answer: {other}"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Preprocessing: conditional lifting, floor-division elimination, booleans
// ---------------------------------------------------------------------------

/// Normalize to a form the conjunction solver accepts: negation normal form,
/// no conditional atoms, no floor-division atoms, and explicit {0, 1} range
/// constraints for boolean variables.
fn prepare(f: &Formula) -> Result<Formula> {
    let lifted = lift_ites(nnf(f))?;
    let mut divs = BTreeMap::new();
    let mut constraints = Vec::new();
    let no_divs = eliminate_divs(&lifted, &mut divs, &mut constraints)?;
    let mut parts = vec![no_divs];
    parts.extend(constraints);
    let combined = Formula::and(parts);
    let mut bool_constraints = Vec::new();
    for v in combined.vars() {
        if v.sort == Sort::Bool {
            let t = LinearTerm::var(&v);
            bool_constraints.push(Formula::cmp(
                LinearTerm::zero(),
                RelOp::Le,
                t.clone(),
            ));
            bool_constraints.push(Formula::cmp(t, RelOp::Le, LinearTerm::from_int(1)));
        }
    }
    let mut all = vec![combined];
    all.extend(bool_constraints);
    Ok(nnf(&Formula::and(all)))
}

/// Surface conditional atoms: a literal L containing `ite(c, a, b)` becomes
/// `(c and L[a]) or (not c and L[b])`, repeated to a fixed point.
fn lift_ites(f: Formula) -> Result<Formula> {
    // Iterate rather than recurse on rewritten nodes: each rewrite removes
    // one conditional atom occurrence, so this terminates.
    let mut current = f;
    loop {
        let (rewritten, changed) = lift_one(&current);
        if !changed {
            return Ok(rewritten);
        }
        current = rewritten;
    }
}

fn lift_one(f: &Formula) -> (Formula, bool) {
    match f {
        Formula::True | Formula::False | Formula::Var(_) => (f.clone(), false),
        Formula::Lit(l) => match l.lhs.find_ite() {
            None => (f.clone(), false),
            Some(atom) => {
                let (cond, then_t, else_t) = match atom {
                    Atom::Ite(c, a, b) => ((**c).clone(), (**a).clone(), (**b).clone()),
                    _ => unreachable!("find_ite returns conditional atoms"),
                };
                let target = atom.clone();
                let then_lit = Literal::new(l.lhs.replace_atom(&target, &then_t), l.op);
                let else_lit = Literal::new(l.lhs.replace_atom(&target, &else_t), l.op);
                let lifted = Formula::or2(
                    Formula::and2(cond.clone(), Formula::lit(then_lit)),
                    Formula::and2(Formula::not(cond), Formula::lit(else_lit)),
                );
                (lifted, true)
            }
        },
        Formula::Not(g) => {
            let (inner, changed) = lift_one(g);
            (Formula::not(inner), changed)
        }
        Formula::And(fs) => {
            let mut changed = false;
            let kids = fs
                .iter()
                .map(|g| {
                    if changed {
                        g.clone()
                    } else {
                        let (out, c) = lift_one(g);
                        changed |= c;
                        out
                    }
                })
                .collect();
            (Formula::and(kids), changed)
        }
        Formula::Or(fs) => {
            let mut changed = false;
            let kids = fs
                .iter()
                .map(|g| {
                    if changed {
                        g.clone()
                    } else {
                        let (out, c) = lift_one(g);
                        changed |= c;
                        out
                    }
                })
                .collect();
            (Formula::or(kids), changed)
        }
    }
}

/// Replace floor-division atoms by fresh integer variables constrained by
/// `k*q <= t <= k*q + k - 1`, innermost first. Repeated atoms share one
/// variable so syntactically equal divisions stay equal.
fn eliminate_divs(
    f: &Formula,
    cache: &mut BTreeMap<Atom, Var>,
    constraints: &mut Vec<Formula>,
) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Var(_) => f.clone(),
        Formula::Not(g) => Formula::not(eliminate_divs(g, cache, constraints)?),
        Formula::And(fs) => Formula::and(
            fs.iter()
                .map(|g| eliminate_divs(g, cache, constraints))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Or(fs) => Formula::or(
            fs.iter()
                .map(|g| eliminate_divs(g, cache, constraints))
                .collect::<Result<Vec<_>>>()?,
        ),
        Formula::Lit(l) => Formula::lit(Literal::new(
            eliminate_divs_term(&l.lhs, cache, constraints)?,
            l.op,
        )),
    })
}

fn eliminate_divs_term(
    t: &LinearTerm,
    cache: &mut BTreeMap<Atom, Var>,
    constraints: &mut Vec<Formula>,
) -> Result<LinearTerm> {
    let mut out = LinearTerm::constant(t.constant.clone());
    for (a, c) in &t.coeffs {
        let replaced = match a {
            Atom::Var(_) => LinearTerm::from_atom(a.clone()),
            Atom::Ite(_, _, _) => {
                return Err(Error::Internal(
                    "conditional atom survived lifting".into(),
                ))
            }
            Atom::FloorDiv(inner, k) => {
                let inner_elim = eliminate_divs_term(inner, cache, constraints)?;
                let key = Atom::FloorDiv(Box::new(inner_elim.clone()), k.clone());
                let q = match cache.get(&key) {
                    Some(q) => q.clone(),
                    None => {
                        let q = fresh_int_var("div");
                        let kq = LinearTerm::var(&q)
                            .scaled(&Rational::from_integer(k.clone()));
                        // k*q <= t
                        constraints.push(Formula::cmp(kq.clone(), RelOp::Le, inner_elim.clone()));
                        // t <= k*q + k - 1
                        let upper = kq
                            + LinearTerm::constant(Rational::from_integer(
                                k.clone() - BigInt::one(),
                            ));
                        constraints.push(Formula::cmp(inner_elim.clone(), RelOp::Le, upper));
                        cache.insert(key, q.clone());
                        q
                    }
                };
                LinearTerm::var(&q)
            }
        };
        out.add_assign_scaled(&replaced, c);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Conjunction solving
// ---------------------------------------------------------------------------

/// One variable's bound during Fourier–Motzkin elimination: `v (>= / >) t`
/// or `v (<= / <) t`, with `strict` recording openness.
#[derive(Debug, Clone)]
struct FmBound {
    term: LinearTerm,
    strict: bool,
}

#[derive(Debug)]
struct Eliminated {
    var: Var,
    lowers: Vec<FmBound>,
    uppers: Vec<FmBound>,
}

/// Outcome of one linear pass over a conjunction: either it is decided, or
/// it must be split into two refined conjunctions.
enum Step {
    Model(Model),
    Unsat,
    Split(Vec<Literal>, Vec<Literal>),
}

/// Decide one conjunction of literals (variable atoms only). Returns a model
/// over the conjunction's variables, or None when infeasible. `budget`
/// limits branch-and-bound and disequality splits.
///
/// Splitting is driven by an explicit worklist: split chains can reach the
/// full budget in depth, which would overflow the stack if each split
/// recursed.
fn solve_conjunct(lits: &[Literal], budget: &mut usize) -> Result<Option<Model>> {
    let mut work: Vec<Vec<Literal>> = vec![lits.to_vec()];
    while let Some(cur) = work.pop() {
        match solve_step(&cur)? {
            Step::Model(m) => return Ok(Some(m)),
            Step::Unsat => continue,
            Step::Split(first, second) => {
                if *budget == 0 {
                    return Err(Error::Resource("split budget exhausted".into()));
                }
                *budget -= 1;
                work.push(second);
                work.push(first);
            }
        }
    }
    Ok(None)
}

/// The two halves of a branch-and-bound split: the base conjunction
/// extended with each of the refining literals in turn.
fn split_on(base: &[Literal], first: Literal, second: Literal) -> Step {
    let mut a = base.to_vec();
    a.push(first);
    let mut b = base.to_vec();
    b.push(second);
    Step::Split(a, b)
}

/// One pass of equality elimination, Fourier–Motzkin projection, and
/// integer-aware back-substitution over a single conjunction.
fn solve_step(lits: &[Literal]) -> Result<Step> {
    let mut eqs: Vec<Literal> = Vec::new();
    let mut ineqs: Vec<Literal> = Vec::new();
    let mut neqs: Vec<Literal> = Vec::new();
    for l in lits {
        let l = tighten_int(l);
        match l.as_const() {
            Some(true) => continue,
            Some(false) => return Ok(Step::Unsat),
            None => {}
        }
        match l.op {
            RelOp::Eq => eqs.push(l),
            RelOp::Ne => neqs.push(l),
            _ => ineqs.push(l),
        }
    }

    // --- Equality elimination -------------------------------------------
    let mut subst_stack: Vec<(Var, LinearTerm)> = Vec::new();
    // Names for change-of-variable integers are deterministic per
    // conjunction so that a branch-and-bound split on one of them still
    // denotes the same quantity when the extended conjunction is re-solved.
    let mut fresh_eq = 0usize;
    while let Some(eq) = eqs.pop() {
        match eq.as_const() {
            Some(true) => continue,
            Some(false) => return Ok(Step::Unsat),
            None => {}
        }
        let vars: Vec<Var> = eq
            .lhs
            .coeffs
            .keys()
            .map(|a| match a {
                Atom::Var(v) => Ok(v.clone()),
                _ => Err(Error::Internal("non-variable atom in conjunction".into())),
            })
            .collect::<Result<_>>()?;
        // Prefer a unit-coefficient pivot; a real-sorted variable can be
        // isolated exactly whatever its coefficient.
        let pivot = vars
            .iter()
            .find(|v| eq.lhs.coeff_of(v).abs().is_one())
            .cloned()
            .or_else(|| vars.iter().find(|v| !v.is_integral()).cloned());
        let Some(p) = pivot else {
            // All-integer equality with no unit coefficient. Canonical
            // literals are divided by the gcd of coefficients and constant,
            // so a non-trivial gcd of the variable coefficients alone cannot
            // divide the constant: infeasible.
            let mut g = BigInt::zero();
            for c in eq.lhs.coeffs.values() {
                g = g.gcd(c.numer());
            }
            if !g.is_one() && !eq.lhs.constant.is_zero() {
                return Ok(Step::Unsat);
            }
            if vars.len() < 2 {
                // A single variable with coefficient a and constant c where
                // |a| > 1 and gcd(a, c) = 1 cannot have an integer solution;
                // the gcd test above already returned for c != 0.
                return Ok(Step::Unsat);
            }
            // Otherwise replace the two smallest-coefficient variables by a
            // unimodular combination of two fresh integers; the pair of
            // terms collapses into one whose coefficient is the pair's gcd.
            // Each round removes one variable from the equality, and the
            // overall gcd of 1 guarantees a unit coefficient eventually, so
            // integer equalities never reach branch-and-bound.
            let mut by_magnitude: Vec<(Var, BigInt)> = vars
                .iter()
                .map(|v| (v.clone(), eq.lhs.coeff_of(v).numer().clone()))
                .collect();
            by_magnitude.sort_by_key(|(_, c)| c.abs());
            let (xv, a) = by_magnitude[0].clone();
            let (yv, b) = by_magnitude[1].clone();
            let ext = a.extended_gcd(&b);
            let (mut g2, mut bez_x, mut bez_y) = (ext.gcd, ext.x, ext.y);
            if g2.is_negative() {
                g2 = -g2;
                bez_x = -bez_x;
                bez_y = -bez_y;
            }
            let tv = fresh_int_local(&format!("eq{fresh_eq}"));
            let sv = fresh_int_local(&format!("eq{}", fresh_eq + 1));
            fresh_eq += 2;
            // a*x + b*y = g2*t under x = bez_x*t - (b/g2)*s,
            // y = bez_y*t + (a/g2)*s; the matrix has determinant 1, so
            // integer (t, s) range exactly over integer (x, y).
            let x_term = LinearTerm::var(&tv).scaled(&Rational::from_integer(bez_x))
                - LinearTerm::var(&sv).scaled(&Rational::from_integer(&b / &g2));
            let y_term = LinearTerm::var(&tv).scaled(&Rational::from_integer(bez_y))
                + LinearTerm::var(&sv).scaled(&Rational::from_integer(&a / &g2));
            let map = BTreeMap::from([(xv.clone(), x_term.clone()), (yv.clone(), y_term.clone())]);
            for l in eqs.iter_mut().chain(ineqs.iter_mut()).chain(neqs.iter_mut()) {
                *l = l.subst(&map)?;
            }
            eqs.push(eq.subst(&map)?);
            subst_stack.push((xv, x_term));
            subst_stack.push((yv, y_term));
            continue;
        };
        // lhs = a*p + r = 0  =>  p = -r / a
        let a = eq.lhs.coeff_of(&p);
        let mut r = eq.lhs.clone();
        r.coeffs.remove(&Atom::Var(p.clone()));
        let rhs = r.scaled(&(-Rational::one() / a));
        let map = BTreeMap::from([(p.clone(), rhs.clone())]);
        for l in eqs.iter_mut().chain(ineqs.iter_mut()).chain(neqs.iter_mut()) {
            *l = l.subst(&map)?;
        }
        subst_stack.push((p, rhs));
    }

    // --- Fourier–Motzkin projection --------------------------------------
    let mut live: Vec<Literal> = Vec::new();
    for l in ineqs {
        match l.as_const() {
            Some(true) => {}
            Some(false) => return Ok(Step::Unsat),
            None => live.push(l),
        }
    }
    let mut stack: Vec<Eliminated> = Vec::new();
    loop {
        let mut vars: BTreeSet<Var> = BTreeSet::new();
        for l in &live {
            vars.extend(l.vars());
        }
        let Some(v) = pick_fm_var(&vars, &live) else {
            break;
        };
        let mut lowers = Vec::new();
        let mut uppers = Vec::new();
        let mut rest = Vec::new();
        for l in &live {
            if !l.mentions(&v) {
                rest.push(l.clone());
                continue;
            }
            let (is_lower, bound) = rational_bound(l, &v)?;
            if is_lower {
                lowers.push(bound);
            } else {
                uppers.push(bound);
            }
        }
        for lo in &lowers {
            for hi in &uppers {
                let op = if lo.strict || hi.strict { RelOp::Lt } else { RelOp::Le };
                let combined = Literal::cmp(lo.term.clone(), op, hi.term.clone());
                match combined.as_const() {
                    Some(true) => {}
                    Some(false) => return Ok(Step::Unsat),
                    None => rest.push(combined),
                }
            }
        }
        stack.push(Eliminated { var: v, lowers, uppers });
        live = rest;
    }
    // Anything left is variable-free.
    for l in &live {
        if l.as_const() == Some(false) {
            return Ok(Step::Unsat);
        }
    }

    // --- Back-substitution with integer adjustment ------------------------
    let mut m = Model::new();
    for e in stack.iter().rev() {
        let mut lo: Option<(Rational, bool)> = None;
        for b in &e.lowers {
            let val = eval_filling(&b.term, &mut m)?;
            if lo.as_ref().is_none_or(|(cur, cs)| {
                val > *cur || (val == *cur && b.strict && !cs)
            }) {
                lo = Some((val, b.strict));
            }
        }
        let mut hi: Option<(Rational, bool)> = None;
        for b in &e.uppers {
            let val = eval_filling(&b.term, &mut m)?;
            if hi.as_ref().is_none_or(|(cur, cs)| {
                val < *cur || (val == *cur && b.strict && !cs)
            }) {
                hi = Some((val, b.strict));
            }
        }
        match pick_value(&e.var, &lo, &hi) {
            Some(val) => m.set(e.var.clone(), val),
            None if e.var.is_integral() => {
                // Rationally feasible but integer-empty: split around the
                // lower endpoint and retry both halves.
                let (lo_val, _) = lo.expect("integer-empty interval needs both bounds");
                let cut = lo_val.floor();
                let left = Literal::cmp(
                    LinearTerm::var(&e.var),
                    RelOp::Le,
                    LinearTerm::constant(cut.clone()),
                );
                let right = Literal::cmp(
                    LinearTerm::var(&e.var),
                    RelOp::Ge,
                    LinearTerm::constant(cut + Rational::one()),
                );
                return Ok(split_on(lits, left, right));
            }
            None => {
                return Err(Error::Internal(
                    "empty rational interval survived projection".into(),
                ))
            }
        }
    }

    // --- Defaults, equality substitutions, disequalities ------------------
    let mut all_vars: BTreeSet<Var> = BTreeSet::new();
    for l in lits {
        all_vars.extend(l.vars());
    }
    let subst_vars: BTreeSet<Var> = subst_stack.iter().map(|(v, _)| v.clone()).collect();
    for v in &all_vars {
        if !m.contains(v) && !subst_vars.contains(v) {
            m.set(v.clone(), Rational::zero());
        }
    }
    for (v, t) in subst_stack.iter().rev() {
        // `eval_filling`, not `eval`: a change-of-variable integer with no
        // surviving bounds is absent from the model and free to be zero.
        let val = eval_filling(t, &mut m)?;
        if v.is_integral() && !val.is_integer() {
            // An integer variable forced to a fractional value by equality
            // elimination: split on the two neighbouring integers.
            let cut = val.floor();
            let left =
                Literal::cmp(LinearTerm::var(v), RelOp::Le, LinearTerm::constant(cut.clone()));
            let right = Literal::cmp(
                LinearTerm::var(v),
                RelOp::Ge,
                LinearTerm::constant(cut + Rational::one()),
            );
            return Ok(split_on(lits, left, right));
        }
        m.set(v.clone(), val);
    }
    for ne in &neqs {
        if !ne.holds(&m)? {
            // Model-guided lazy split of a violated disequality.
            let kept: Vec<Literal> = lits.iter().filter(|l| *l != ne).cloned().collect();
            let mut below = kept.clone();
            below.push(Literal { lhs: ne.lhs.clone(), op: RelOp::Lt });
            let mut above = kept;
            above.push(Literal { lhs: ne.lhs.clone(), op: RelOp::Gt });
            return Ok(Step::Split(below, above));
        }
    }

    // --- Final evaluation check -------------------------------------------
    for l in lits {
        if !l.holds(&m)? {
            return Err(Error::Internal(format!(
                "conjunction solver produced a bad model: {l} fails under {m}"
            )));
        }
    }
    Ok(Step::Model(m))
}

/// Strict inequalities over purely integer-valued terms are equivalent to
/// closed ones on a shifted constant (`t < 0` iff `t <= -1`). Projection
/// then sees the true integer gaps instead of diverging on them. This is a
/// solver-internal rewrite; bound classification elsewhere keeps the source
/// relation.
fn tighten_int(l: &Literal) -> Literal {
    let tightenable = matches!(l.op, RelOp::Lt | RelOp::Gt)
        && l.lhs.has_integer_coeffs()
        && !l.lhs.coeffs.is_empty()
        && l.lhs.vars().iter().all(Var::is_integral);
    if !tightenable {
        return l.clone();
    }
    match l.op {
        RelOp::Lt => Literal::new(l.lhs.clone() + LinearTerm::from_int(1), RelOp::Le),
        RelOp::Gt => Literal::new(l.lhs.clone() - LinearTerm::from_int(1), RelOp::Ge),
        _ => unreachable!(),
    }
}

/// Evaluate a bound term, defaulting any still-unassigned variable to zero.
/// A variable can drop out of the projection entirely when it only occurs in
/// one-sided bounds of an earlier-eliminated variable; it is unconstrained
/// by then, so zero is as good as any value.
fn eval_filling(t: &LinearTerm, m: &mut Model) -> Result<Rational> {
    for v in t.vars() {
        if !m.contains(&v) {
            m.set(v, Rational::zero());
        }
    }
    t.eval(m)
}

/// Choose the next variable to project out: fewest lower*upper combinations.
fn pick_fm_var(vars: &BTreeSet<Var>, lits: &[Literal]) -> Option<Var> {
    let mut best: Option<(usize, Var)> = None;
    for v in vars {
        let mut lowers = 0usize;
        let mut uppers = 0usize;
        for l in lits {
            if !l.mentions(v) {
                continue;
            }
            let a = l.lhs.coeff_of(v);
            let lower = match l.op {
                RelOp::Ge | RelOp::Gt => a.is_positive(),
                RelOp::Le | RelOp::Lt => a.is_negative(),
                _ => false,
            };
            if lower {
                lowers += 1;
            } else {
                uppers += 1;
            }
        }
        let cost = lowers * uppers + lowers + uppers;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, v.clone()));
        }
    }
    best.map(|(_, v)| v)
}

/// Rewrite an inequality as a rational bound on `v`: (is_lower, bound).
fn rational_bound(l: &Literal, v: &Var) -> Result<(bool, FmBound)> {
    let a = l.lhs.coeff_of(v);
    if a.is_zero() {
        return Err(Error::Internal("bound requested for absent variable".into()));
    }
    let mut r = l.lhs.clone();
    r.coeffs.remove(&Atom::Var(v.clone()));
    // a*v + r op 0  =>  v op' -r/a, direction flipping when a < 0.
    let bound_term = r.scaled(&(-Rational::one() / a.clone()));
    let op = if a.is_negative() { l.op.reverse() } else { l.op };
    let (is_lower, strict) = match op {
        RelOp::Ge => (true, false),
        RelOp::Gt => (true, true),
        RelOp::Le => (false, false),
        RelOp::Lt => (false, true),
        RelOp::Eq | RelOp::Ne => {
            return Err(Error::Internal(
                "equalities must be eliminated before projection".into(),
            ))
        }
    };
    Ok((is_lower, FmBound { term: bound_term, strict }))
}

/// Pick a value inside the rational interval, respecting integrality.
/// Returns None when the interval contains no integer for an integral
/// variable (the caller splits).
fn pick_value(
    v: &Var,
    lo: &Option<(Rational, bool)>,
    hi: &Option<(Rational, bool)>,
) -> Option<Rational> {
    if v.is_integral() {
        let ilo = lo.as_ref().map(|(q, strict)| {
            if *strict || !q.is_integer() {
                q.floor() + Rational::one()
            } else {
                q.clone()
            }
        });
        let ihi = hi.as_ref().map(|(q, strict)| {
            if *strict || !q.is_integer() {
                q.ceil() - Rational::one()
            } else {
                q.clone()
            }
        });
        match (ilo, ihi) {
            (Some(a), Some(b)) => {
                if a > b {
                    None
                } else {
                    Some(((a + b) / Rational::from_integer(BigInt::from(2))).floor())
                }
            }
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => Some(Rational::zero()),
        }
    } else {
        match (lo, hi) {
            (Some((a, sa)), Some((b, sb))) => {
                if a > b || (a == b && (*sa || *sb)) {
                    // Rationally empty: projection should have caught this.
                    None
                } else if a == b {
                    Some(a.clone())
                } else {
                    Some((a + b) / Rational::from_integer(BigInt::from(2)))
                }
            }
            (Some((a, _)), None) => Some(a.clone() + Rational::one()),
            (None, Some((b, _))) => Some(b.clone() - Rational::one()),
            (None, None) => Some(Rational::zero()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Sort, VarRole};

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn iv(name: &str) -> Var {
        Var::new(name, Sort::Int, VarRole::Output)
    }

    fn rv(name: &str) -> Var {
        Var::new(name, Sort::Real, VarRole::Output)
    }

    fn it(name: &str) -> LinearTerm {
        LinearTerm::var(&iv(name))
    }

    fn rt(name: &str) -> LinearTerm {
        LinearTerm::var(&rv(name))
    }

    fn solver() -> Solver {
        Solver::default()
    }

    #[test]
    fn integrality_separates_int_from_real() {
        // 0 < x < 1 has no integer point but a real one.
        let fi = Formula::and2(
            Formula::cmp(LinearTerm::zero(), RelOp::Lt, it("x")),
            Formula::cmp(it("x"), RelOp::Lt, LinearTerm::from_int(1)),
        );
        assert_eq!(solver().check(&fi).unwrap(), SatResult::Unsat);

        let fr = Formula::and2(
            Formula::cmp(LinearTerm::zero(), RelOp::Lt, rt("x")),
            Formula::cmp(rt("x"), RelOp::Lt, LinearTerm::from_int(1)),
        );
        let m = solver().check(&fr).unwrap().model().unwrap();
        let v = m.value(&rv("x")).unwrap();
        assert!(*v > q(0) && *v < q(1));
    }

    #[test]
    fn equalities_eliminate_and_detect_gcd_infeasibility() {
        // 2x + 3y = 1 is integer-solvable.
        let ok = Formula::cmp(
            it("x").scaled(&q(2)) + it("y").scaled(&q(3)),
            RelOp::Eq,
            LinearTerm::from_int(1),
        );
        assert!(solver().check(&ok).unwrap().is_sat());
        // 2x + 2y = 1 is not.
        let bad = Formula::cmp(
            it("x").scaled(&q(2)) + it("y").scaled(&q(2)),
            RelOp::Eq,
            LinearTerm::from_int(1),
        );
        assert_eq!(solver().check(&bad).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn disequalities_split_lazily() {
        // x != 0 and 0 <= x <= 1 forces x = 1.
        let f = Formula::and(vec![
            Formula::cmp(it("x"), RelOp::Ne, LinearTerm::zero()),
            Formula::cmp(LinearTerm::zero(), RelOp::Le, it("x")),
            Formula::cmp(it("x"), RelOp::Le, LinearTerm::from_int(1)),
        ]);
        let m = solver().check(&f).unwrap().model().unwrap();
        assert_eq!(*m.value(&iv("x")).unwrap(), q(1));
        // x != 0 pinned to zero from both sides is unsatisfiable.
        let g = Formula::and(vec![
            Formula::cmp(it("x"), RelOp::Ne, LinearTerm::zero()),
            Formula::cmp(LinearTerm::zero(), RelOp::Le, it("x")),
            Formula::cmp(it("x"), RelOp::Le, LinearTerm::zero()),
        ]);
        assert_eq!(solver().check(&g).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn floor_division_atoms_are_eliminated() {
        // div(x, 2) = 3 and 0 <= x <= 10 gives x in {6, 7}.
        let d = LinearTerm::floor_div(it("x"), BigInt::from(2)).unwrap();
        let f = Formula::and(vec![
            Formula::cmp(d, RelOp::Eq, LinearTerm::from_int(3)),
            Formula::cmp(LinearTerm::zero(), RelOp::Le, it("x")),
            Formula::cmp(it("x"), RelOp::Le, LinearTerm::from_int(10)),
        ]);
        let m = solver().check(&f).unwrap().model().unwrap();
        let x = m.value(&iv("x")).unwrap();
        assert!(*x == q(6) || *x == q(7), "got {x}");
    }

    #[test]
    fn conditional_atoms_are_lifted() {
        // ite(x <= 0, 1, 2) = 2 forces x > 0.
        let cond = Formula::cmp(it("x"), RelOp::Le, LinearTerm::zero());
        let ite = LinearTerm::ite(cond, LinearTerm::from_int(1), LinearTerm::from_int(2));
        let f = Formula::and2(
            Formula::cmp(ite.clone(), RelOp::Eq, LinearTerm::from_int(2)),
            Formula::cmp(it("x"), RelOp::Le, LinearTerm::zero()),
        );
        assert_eq!(solver().check(&f).unwrap(), SatResult::Unsat);
        let g = Formula::cmp(ite, RelOp::Eq, LinearTerm::from_int(2));
        let m = solver().check(&g).unwrap().model().unwrap();
        assert!(*m.value(&iv("x")).unwrap() > q(0));
    }

    #[test]
    fn boolean_variables_are_range_constrained() {
        let b = Var::new("b", Sort::Bool, VarRole::Input);
        let f = Formula::and2(
            Formula::var(b.clone()),
            Formula::cmp(LinearTerm::var(&b), RelOp::Ge, LinearTerm::zero()),
        );
        let m = solver().check(&f).unwrap().model().unwrap();
        assert_eq!(*m.value(&b).unwrap(), q(1));
        // b and not b is unsatisfiable.
        let g = Formula::and2(Formula::var(b.clone()), Formula::not(Formula::var(b)));
        assert_eq!(solver().check(&g).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn validity_and_equivalence_helpers() {
        // Over the integers x + 1 <= y iff x < y; over the reals they differ.
        let ia = Formula::cmp(it("x") + LinearTerm::from_int(1), RelOp::Le, it("y"));
        let ib = Formula::cmp(it("x"), RelOp::Lt, it("y"));
        assert!(solver().equivalent(&ia, &ib).unwrap());
        let ra = Formula::cmp(rt("x") + LinearTerm::from_int(1), RelOp::Le, rt("y"));
        let rb = Formula::cmp(rt("x"), RelOp::Lt, rt("y"));
        assert!(!solver().equivalent(&ra, &rb).unwrap());
        // x <= 2 or x >= 1 covers every integer.
        let cover = Formula::or2(
            Formula::cmp(it("x"), RelOp::Le, LinearTerm::from_int(2)),
            Formula::cmp(it("x"), RelOp::Ge, LinearTerm::from_int(1)),
        );
        assert!(solver().is_valid(&cover).unwrap());
    }

    #[test]
    fn nonunit_equality_chains_solve() {
        // 3y = x and 6 <= x <= 7 forces x = 6, y = 2.
        let f = Formula::and(vec![
            Formula::cmp(it("y").scaled(&q(3)), RelOp::Eq, it("x")),
            Formula::cmp(LinearTerm::from_int(6), RelOp::Le, it("x")),
            Formula::cmp(it("x"), RelOp::Le, LinearTerm::from_int(7)),
        ]);
        let m = solver().check(&f).unwrap().model().unwrap();
        assert_eq!(*m.value(&iv("x")).unwrap(), q(6));
        assert_eq!(*m.value(&iv("y")).unwrap(), q(2));
    }

    #[test]
    fn mixed_strictness_real_intervals() {
        // 0 < x <= 0 is empty; 0 <= x <= 0 pins x to 0.
        let empty = Formula::and2(
            Formula::cmp(LinearTerm::zero(), RelOp::Lt, rt("x")),
            Formula::cmp(rt("x"), RelOp::Le, LinearTerm::zero()),
        );
        assert_eq!(solver().check(&empty).unwrap(), SatResult::Unsat);
        let point = Formula::and2(
            Formula::cmp(LinearTerm::zero(), RelOp::Le, rt("x")),
            Formula::cmp(rt("x"), RelOp::Le, LinearTerm::zero()),
        );
        let m = solver().check(&point).unwrap().model().unwrap();
        assert_eq!(*m.value(&rv("x")).unwrap(), q(0));
    }

    #[test]
    fn unconstrained_variables_default_and_satisfy() {
        let f = Formula::or2(
            Formula::cmp(it("x"), RelOp::Ge, LinearTerm::from_int(5)),
            Formula::cmp(it("y"), RelOp::Le, LinearTerm::from_int(-5)),
        );
        let m = solver().check(&f).unwrap().model().unwrap();
        assert!(m.eval_formula(&f).unwrap());
        assert!(m.contains(&iv("x")) && m.contains(&iv("y")));
    }
}
