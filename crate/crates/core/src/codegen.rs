//! Emission backends for synthesized witnesses: portable C sources, an
//! SMT-LIB dump, and a self-describing witness file that round-trips through
//! the s-expression reader so synthesis and code generation can run as
//! separate invocations.
//!
//! The C backend produces `<contract>_witness.c` with a state struct over the
//! contract's outputs, an `<contract>_init` function, and an
//! `<contract>_step` function whose body is one `if`/`else if`/`else` arm per
//! branch of the decision tree. Random update rules become calls to
//!
//! ```c
//! double RandVal(_Bool lflag, _Bool uflag, double lbound, double ubound);
//! ```
//!
//! where the flags say whether each end of the range is inclusive; a missing
//! bound is spelled with the configured infinity substitute (`INT_MIN` /
//! `INT_MAX` by default for integer contracts). Exclusion sets are honored by
//! a resampling loop around the call, with a deterministic range scan as a
//! fallback for integer sorts. A default `RandVal` implementation can be
//! emitted separately so generated controllers link and run out of the box.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fixpoint::Witness;
use crate::logic::parse::{name_env, parse_formula, parse_term, parse_value, read_one, SExpr};
use crate::logic::print::{formula_smt, rational_smt, smt_symbol};
use crate::logic::{
    Atom, Contract, Formula, LinearTerm, Literal, Model, Rational, RelOp, Sort, Theory, Var,
    VarRole,
};
use crate::skolem::{Bound, LocalSkolem, UrngCall};
use crate::validity::{Branch, Mode, SkolemTree};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// What the emitter should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// A compilable C translation unit.
    CSource,
    /// An SMT-LIB 2 script describing the same tree.
    SmtLib,
}

/// How the generated C obtains its random values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngLinkage {
    /// Ship the default `RandVal` implementation alongside the witness.
    DefaultRandval,
    /// Only declare `RandVal`; the embedding program provides it.
    ExternRandval,
}

/// Emission knobs.
#[derive(Debug, Clone)]
pub struct EmitConfig {
    pub target: Target,
    pub linkage: RngLinkage,
    /// C spelling substituted for a missing lower bound. The default,
    /// `INT_MIN` (or `-DBL_MAX` for real contracts), fixes the numeric width
    /// of "unbounded"; override it to widen or narrow the carrier type.
    pub neg_infinity: String,
    /// C spelling substituted for a missing upper bound.
    pub pos_infinity: String,
}

impl EmitConfig {
    /// C-source defaults for a contract over the given theory.
    pub fn c(theory: Theory) -> EmitConfig {
        let (lo, hi) = match theory {
            Theory::Lia => ("INT_MIN", "INT_MAX"),
            Theory::Lra => ("-DBL_MAX", "DBL_MAX"),
        };
        EmitConfig {
            target: Target::CSource,
            linkage: RngLinkage::DefaultRandval,
            neg_infinity: lo.into(),
            pos_infinity: hi.into(),
        }
    }

    /// Defaults for the SMT-LIB dump (bounds stay symbolic, so the infinity
    /// spellings are unused).
    pub fn smtlib(theory: Theory) -> EmitConfig {
        EmitConfig {
            target: Target::SmtLib,
            ..EmitConfig::c(theory)
        }
    }
}

/// Conventional output file name for a contract's C witness.
pub fn witness_file_name(contract: &Contract) -> String {
    format!("{}_witness.c", contract.name)
}

// ---------------------------------------------------------------------------
// C expression rendering
// ---------------------------------------------------------------------------

const C_RESERVED: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "RandVal", "rand", "main", "floor_div",
    "tries", "s",
];

/// Per-emission naming map: every contract variable (and the `_next` slot of
/// every output) gets a collision-free C identifier.
struct Names {
    current: BTreeMap<Var, String>,
    next: BTreeMap<Var, String>,
}

impl Names {
    fn new(contract: &Contract) -> Names {
        let mut taken: Vec<String> = C_RESERVED.iter().map(|s| (*s).to_string()).collect();
        let mut claim = |want: String| -> String {
            let mut name = want;
            while taken.contains(&name) {
                name.push('_');
            }
            taken.push(name.clone());
            name
        };
        let mut current = BTreeMap::new();
        let mut next = BTreeMap::new();
        for v in contract.inputs.iter().chain(&contract.outputs) {
            current.insert(v.clone(), claim(v.name.to_string()));
        }
        for v in &contract.outputs {
            next.insert(v.primed(), claim(format!("{}_next", v.name)));
        }
        Names { current, next }
    }

    fn var(&self, v: &Var) -> String {
        if let Some(n) = if v.primed { self.next.get(v) } else { self.current.get(v) } {
            return n.clone();
        }
        // Defensive spelling for variables outside the contract interface.
        v.display_name().replace('\'', "_next")
    }
}

fn c_type(sort: Sort) -> &'static str {
    match sort {
        Sort::Int | Sort::Bool => "int",
        Sort::Real => "double",
    }
}

/// A rational constant as a C expression. Real-valued constants print in
/// decimal when the denominator is a product of 2s and 5s and as a quotient
/// of doubles otherwise; either way the value is the nearest double, which is
/// the precision the generated code runs at.
fn const_c(q: &Rational, int: bool) -> String {
    if int {
        return q.numer().to_string();
    }
    if q.is_integer() {
        return format!("{}.0", q.numer());
    }
    let mut den = q.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&den % 2u32).is_zero() {
        den /= 2u32;
        twos += 1;
    }
    while (&den % 5u32).is_zero() {
        den /= 5u32;
        fives += 1;
    }
    if den.is_one() {
        let digits = twos.max(fives);
        let scale = num_bigint::BigInt::from(2).pow(digits - twos)
            * num_bigint::BigInt::from(5).pow(digits - fives);
        let scaled = (q.numer() * scale).magnitude().to_string();
        let digits = digits as usize;
        let pad = format!("{scaled:0>width$}", width = digits + 1);
        let (ip, fp) = pad.split_at(pad.len() - digits);
        let sign = if q.is_negative() { "-" } else { "" };
        format!("{sign}{ip}.{fp}")
    } else {
        format!("({}.0 / {}.0)", q.numer(), q.denom())
    }
}

fn atom_c(a: &Atom, names: &Names, int: bool) -> String {
    match a {
        Atom::Var(v) => names.var(v),
        Atom::FloorDiv(t, k) => format!("floor_div({}, {})", term_c(t, names, true), k),
        Atom::Ite(c, x, y) => format!(
            "({} ? {} : {})",
            formula_c(c, names),
            term_c(x, names, int),
            term_c(y, names, int)
        ),
    }
}

/// Render a linear term as a C expression. A term whose parts are all
/// negative prints as a negated sum, `- (position + x)`, matching how the
/// update rules read on paper.
fn term_c(t: &LinearTerm, names: &Names, int: bool) -> String {
    if t.coeffs.is_empty() {
        return const_c(&t.constant, int);
    }
    let all_negative =
        t.coeffs.values().all(Signed::is_negative) && !t.constant.is_positive();
    if all_negative && (t.coeffs.len() > 1 || !t.constant.is_zero()) {
        let negated = t.scaled(&Rational::from_integer((-1).into()));
        return format!("- ({})", term_c(&negated, names, int));
    }
    let mut out = String::new();
    for (i, (a, c)) in t.coeffs.iter().enumerate() {
        let atom = atom_c(a, names, int);
        let mag = c.abs();
        let piece = if mag.is_one() {
            atom
        } else {
            format!("{} * {}", const_c(&mag, int), atom)
        };
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
            out.push_str(&piece);
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            out.push_str(&piece);
        }
    }
    if !t.constant.is_zero() {
        let mag = t.constant.abs();
        out.push_str(if t.constant.is_negative() { " - " } else { " + " });
        out.push_str(&const_c(&mag, int));
    }
    out
}

fn relop_c(op: RelOp) -> &'static str {
    match op {
        RelOp::Eq => "==",
        RelOp::Ne => "!=",
        RelOp::Lt => "<",
        RelOp::Le => "<=",
        RelOp::Gt => ">",
        RelOp::Ge => ">=",
    }
}

/// Render `lhs ⋈ 0` as C, moving the constant to the right-hand side and
/// normalizing the sign so the leading variable appears positively:
/// `position + x - 1 == 0` prints as `position + x == 1`.
fn literal_c(l: &Literal, names: &Names) -> String {
    let int = l.lhs.vars().iter().all(Var::is_integral);
    let mut lhs = l.lhs.clone();
    let mut rhs = -lhs.constant.clone();
    lhs.constant = Rational::zero();
    let mut op = l.op;
    if lhs.coeffs.values().next().is_some_and(Signed::is_negative) {
        lhs = lhs.scaled(&Rational::from_integer((-1).into()));
        rhs = -rhs;
        op = match op {
            RelOp::Lt => RelOp::Gt,
            RelOp::Le => RelOp::Ge,
            RelOp::Gt => RelOp::Lt,
            RelOp::Ge => RelOp::Le,
            other => other,
        };
    }
    if lhs.coeffs.is_empty() {
        // Degenerate constant literal; fold it.
        let holds = Literal::cmp(LinearTerm::constant(-rhs.clone()), op, LinearTerm::zero());
        return if holds.as_const() == Some(true) { "1".into() } else { "0".into() };
    }
    format!("{} {} {}", term_c(&lhs, names, int), relop_c(op), const_c(&rhs, int))
}

/// Render a formula as a C boolean expression. Boolean-sorted variables ride
/// through the arithmetic fragment as {0, 1} integers.
fn formula_c(f: &Formula, names: &Names) -> String {
    let child = |g: &Formula| -> String {
        let s = formula_c(g, names);
        match g {
            Formula::And(_) | Formula::Or(_) => format!("({s})"),
            _ => s,
        }
    };
    match f {
        Formula::True => "1".into(),
        Formula::False => "0".into(),
        Formula::Lit(l) => literal_c(l, names),
        Formula::Var(v) => format!("{} == 1", names.var(v)),
        Formula::Not(g) => format!("!({})", formula_c(g, names)),
        Formula::And(fs) => fs.iter().map(child).collect::<Vec<_>>().join(" && "),
        Formula::Or(fs) => fs.iter().map(child).collect::<Vec<_>>().join(" || "),
    }
}

// ---------------------------------------------------------------------------
// C statement rendering
// ---------------------------------------------------------------------------

struct CWriter<'a> {
    out: String,
    names: &'a Names,
    cfg: &'a EmitConfig,
    int: bool,
}

impl CWriter<'_> {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn bound_expr(&self, b: &Bound, lower: bool) -> String {
        match &b.term {
            Some(t) => term_c(t, self.names, self.int),
            None if lower => self.cfg.neg_infinity.clone(),
            None => self.cfg.pos_infinity.clone(),
        }
    }

    fn flag_expr(&self, b: &Bound) -> String {
        match &b.closed {
            Formula::True => "1".into(),
            Formula::False => "0".into(),
            f => formula_c(f, self.names),
        }
    }

    fn randval_call(&self, call: &UrngCall) -> String {
        format!(
            "RandVal({}, {}, {}, {})",
            self.flag_expr(&call.lower),
            self.flag_expr(&call.upper),
            self.bound_expr(&call.lower, true),
            self.bound_expr(&call.upper, false),
        )
    }

    /// The inclusive end of a range as a C expression, shifted inward by one
    /// when the end is open (integer scan fallback only).
    fn inclusive_end(&self, b: &Bound, lower: bool) -> String {
        let raw = format!("({})", self.bound_expr(b, lower));
        let shifted = if lower { format!("{raw} + 1") } else { format!("{raw} - 1") };
        match &b.closed {
            Formula::True => raw,
            Formula::False => shifted,
            f => format!("(({}) ? {raw} : {shifted})", formula_c(f, self.names)),
        }
    }

    /// One update rule as statements assigning `target`.
    fn rule(&mut self, indent: usize, target: &str, rule: &LocalSkolem) {
        match rule {
            LocalSkolem::Assign(t) => {
                let e = term_c(t, self.names, self.int);
                self.line(indent, &format!("{target} = {e};"));
            }
            LocalSkolem::GuardedPair { cond, when_true, when_false } => {
                let c = formula_c(cond, self.names);
                self.line(indent, &format!("if ({c}) {{"));
                self.rule(indent + 1, target, when_true);
                self.line(indent, "} else {");
                self.rule(indent + 1, target, when_false);
                self.line(indent, "}");
            }
            LocalSkolem::Urng(call) if call.avoid.is_empty() => {
                let e = self.randval_call(call);
                self.line(indent, &format!("{target} = {e};"));
            }
            LocalSkolem::Urng(call) => self.urng_with_exclusions(indent, target, call),
        }
    }

    /// Resample until the draw misses every excluded point; for integer
    /// ranges, fall back to a deterministic scan after 10^4 failed draws so
    /// an unlucky or degenerate generator cannot hang the controller.
    fn urng_with_exclusions(&mut self, indent: usize, target: &str, call: &UrngCall) {
        let hit: Vec<String> = call
            .avoid
            .iter()
            .map(|h| format!("{target} == {}", term_c(h, self.names, self.int)))
            .collect();
        let hit = hit.join(" || ");
        let draw = self.randval_call(call);
        self.line(indent, "{");
        let body = indent + 1;
        if self.int {
            self.line(body, "int tries = 0;");
            self.line(body, "do {");
            self.line(body + 1, &format!("{target} = {draw};"));
            self.line(body + 1, "tries = tries + 1;");
            self.line(body, &format!("}} while (tries < 10000 && ({hit}));"));
            self.line(body, &format!("if ({hit}) {{"));
            let lo = self.inclusive_end(&call.lower, true);
            let hi = self.inclusive_end(&call.upper, false);
            self.line(body + 1, "/* Deterministic fallback: scan for an admissible value. */");
            self.line(body + 1, &format!("int scan_lo = {lo};"));
            self.line(body + 1, &format!("int scan_hi = {hi};"));
            self.line(body + 1, &format!("for ({target} = scan_lo; {target} <= scan_hi; {target}++) {{"));
            self.line(body + 2, &format!("if (!({hit})) {{"));
            self.line(body + 3, "break;");
            self.line(body + 2, "}");
            self.line(body + 1, "}");
            self.line(body, "}");
        } else {
            // Excluded points have measure zero in a real range, so the
            // resampling loop terminates with probability one.
            self.line(body, "do {");
            self.line(body + 1, &format!("{target} = {draw};"));
            self.line(body, &format!("}} while ({hit});"));
        }
        self.line(indent, "}");
    }
}

// ---------------------------------------------------------------------------
// C emission
// ---------------------------------------------------------------------------

fn term_uses_floor_div(t: &LinearTerm) -> bool {
    t.coeffs.keys().any(|a| match a {
        Atom::Var(_) => false,
        Atom::FloorDiv(..) => true,
        Atom::Ite(c, x, y) => {
            formula_uses_floor_div(c) || term_uses_floor_div(x) || term_uses_floor_div(y)
        }
    })
}

fn formula_uses_floor_div(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Var(_) => false,
        Formula::Lit(l) => term_uses_floor_div(&l.lhs),
        Formula::Not(g) => formula_uses_floor_div(g),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().any(formula_uses_floor_div),
    }
}

fn rule_uses_floor_div(rule: &LocalSkolem) -> bool {
    match rule {
        LocalSkolem::Assign(t) => term_uses_floor_div(t),
        LocalSkolem::GuardedPair { cond, when_true, when_false } => {
            formula_uses_floor_div(cond)
                || rule_uses_floor_div(when_true)
                || rule_uses_floor_div(when_false)
        }
        LocalSkolem::Urng(call) => {
            call.avoid.iter().any(term_uses_floor_div)
                || bound_uses_floor_div(&call.lower)
                || bound_uses_floor_div(&call.upper)
        }
    }
}

fn bound_uses_floor_div(b: &Bound) -> bool {
    b.term.as_ref().is_some_and(term_uses_floor_div) || formula_uses_floor_div(&b.closed)
}

fn tree_uses_floor_div(tree: &SkolemTree) -> bool {
    tree.branches.iter().any(|b| {
        b.guard.iter().any(|l| term_uses_floor_div(&l.lhs))
            || b.updates.iter().any(|(_, r)| rule_uses_floor_div(r))
    })
}

fn tree_has_missing_bound(tree: &SkolemTree) -> bool {
    fn rule_missing(rule: &LocalSkolem) -> bool {
        match rule {
            LocalSkolem::Assign(_) => false,
            LocalSkolem::GuardedPair { when_true, when_false, .. } => {
                rule_missing(when_true) || rule_missing(when_false)
            }
            LocalSkolem::Urng(call) => call.lower.term.is_none() || call.upper.term.is_none(),
        }
    }
    tree.branches
        .iter()
        .any(|b| b.updates.iter().any(|(_, r)| rule_missing(r)))
}

/// Variables whose pre-state value is read anywhere in the tree (these need
/// a snapshot local in the step function; unread state is left untouched).
fn unprimed_reads(tree: &SkolemTree) -> Vec<Var> {
    let mut seen = BTreeMap::new();
    let mut take = |vars: Vec<Var>| {
        for v in vars {
            if !v.primed {
                seen.insert(v, ());
            }
        }
    };
    fn bound_vars(b: &Bound) -> Vec<Var> {
        let mut vs = b.closed.vars().into_iter().collect::<Vec<_>>();
        if let Some(t) = &b.term {
            vs.extend(t.vars());
        }
        vs
    }
    fn rule_vars(r: &LocalSkolem) -> Vec<Var> {
        match r {
            LocalSkolem::Assign(t) => t.vars().into_iter().collect(),
            LocalSkolem::GuardedPair { cond, when_true, when_false } => {
                let mut vs: Vec<Var> = cond.vars().into_iter().collect();
                vs.extend(rule_vars(when_true));
                vs.extend(rule_vars(when_false));
                vs
            }
            LocalSkolem::Urng(call) => {
                let mut vs: Vec<Var> = call.avoid.iter().flat_map(LinearTerm::vars).collect();
                vs.extend(bound_vars(&call.lower));
                vs.extend(bound_vars(&call.upper));
                vs
            }
        }
    }
    for b in &tree.branches {
        for l in &b.guard {
            take(l.lhs.vars().into_iter().collect());
        }
        for (_, r) in &b.updates {
            take(rule_vars(r));
        }
    }
    seen.into_keys().collect()
}

/// Emit the C witness for a synthesized controller.
///
/// The step function snapshots the pre-state into locals, decides one arm of
/// the tree, computes every output's next value in declaration order (later
/// outputs may read earlier `_next` values), and writes the state back. When
/// the tree has a single unconditional branch the body is straight-line code.
pub fn emit_c(w: &Witness, cfg: &EmitConfig) -> String {
    let contract = &w.contract;
    let names = Names::new(contract);
    let int = contract.theory == Theory::Lia;
    let mut cw = CWriter { out: String::new(), names: &names, cfg, int };
    let mode = match w.mode {
        Mode::Random => "random",
        Mode::Deterministic => "deterministic",
    };

    cw.line(0, &format!("/* Controller witness for contract `{}` ({mode} mode).", contract.name));
    cw.line(0, " *");
    cw.line(0, " * Generated code: edits will be overwritten.");
    cw.line(0, " *");
    cw.line(0, " * Each step reads the environment inputs and the current state, picks the");
    cw.line(0, " * arm whose guard holds, and assigns fresh outputs so the contract's");
    cw.line(0, " * guarantees are maintained. RandVal(lflag, uflag, lo, hi) must return a");
    cw.line(0, " * value between lo and hi, where each flag marks its end inclusive; any");
    cw.line(0, " * implementation honoring that range contract keeps the controller safe.");
    if !int {
        cw.line(0, " *");
        cw.line(0, " * Real-valued contracts run on C doubles; values exactly representable in");
        cw.line(0, " * the synthesized ranges stay exact, everything else rounds to the nearest");
        cw.line(0, " * double before the guarantees are evaluated.");
    }
    cw.line(0, " */");
    if tree_has_missing_bound(&w.tree) {
        cw.line(0, if int { "#include <limits.h>" } else { "#include <float.h>" });
    }
    cw.line(0, "");
    cw.line(0, "double RandVal(_Bool lflag, _Bool uflag, double lbound, double ubound);");
    cw.line(0, "");
    if tree_uses_floor_div(&w.tree) {
        cw.line(0, "/* Division rounding toward negative infinity, as the contract language");
        cw.line(0, " * defines it (C's `/` truncates toward zero). */");
        cw.line(0, "static int floor_div(int a, int b)");
        cw.line(0, "{");
        cw.line(1, "int q = a / b;");
        cw.line(1, "if ((a % b != 0) && ((a < 0) != (b < 0))) {");
        cw.line(2, "q = q - 1;");
        cw.line(1, "}");
        cw.line(1, "return q;");
        cw.line(0, "}");
        cw.line(0, "");
    }

    cw.line(0, "typedef struct {");
    for v in &contract.outputs {
        cw.line(1, &format!("{} {};", c_type(v.sort), names.var(v)));
    }
    cw.line(0, &format!("}} {}_state;", contract.name));
    cw.line(0, "");

    cw.line(0, &format!("void {}_init({}_state *s)", contract.name, contract.name));
    cw.line(0, "{");
    for v in &contract.outputs {
        let value = w
            .init
            .get(v)
            .map(|q| const_c(q, v.sort != Sort::Real))
            .unwrap_or_else(|| if v.sort == Sort::Real { "0.0".into() } else { "0".into() });
        cw.line(1, &format!("s->{} = {};", names.var(v), value));
    }
    cw.line(0, "}");
    cw.line(0, "");

    let params: Vec<String> = contract
        .inputs
        .iter()
        .map(|v| format!("{} {}", c_type(v.sort), names.var(v)))
        .collect();
    let mut sig = format!("void {}_step({}_state *s", contract.name, contract.name);
    for p in &params {
        sig.push_str(", ");
        sig.push_str(p);
    }
    sig.push(')');
    cw.line(0, &sig);
    cw.line(0, "{");

    for v in unprimed_reads(&w.tree) {
        if v.role == VarRole::Output {
            cw.line(1, &format!("{} {} = s->{};", c_type(v.sort), names.var(&v), names.var(&v)));
        }
    }
    for v in &contract.outputs {
        cw.line(1, &format!("{} {};", c_type(v.sort), names.var(&v.primed())));
    }
    cw.line(0, "");

    let branches = &w.tree.branches;
    if branches.len() <= 1 {
        match branches.first() {
            None => {
                // An empty tree arises only from degenerate contracts with no
                // transition freedom; hold the state.
                for v in &contract.outputs {
                    cw.line(1, &format!("{} = s->{};", names.var(&v.primed()), names.var(v)));
                }
            }
            Some(b) => {
                for (v, rule) in &b.updates {
                    let target = names.var(v);
                    cw.rule(1, &target, rule);
                }
            }
        }
    } else {
        for (i, b) in branches.iter().enumerate() {
            let head = if i == 0 {
                let g = guard_c(&b.guard, &names);
                format!("if ({g}) {{")
            } else if i + 1 < branches.len() {
                let g = guard_c(&b.guard, &names);
                format!("}} else if ({g}) {{")
            } else {
                "} else {".to_string()
            };
            cw.line(1, &head);
            for (v, rule) in &b.updates {
                let target = names.var(v);
                cw.rule(2, &target, rule);
            }
        }
        cw.line(1, "}");
    }

    cw.line(0, "");
    for v in &contract.outputs {
        cw.line(1, &format!("s->{} = {};", names.var(v), names.var(&v.primed())));
    }
    cw.line(0, "}");
    cw.out
}

fn guard_c(guard: &[Literal], names: &Names) -> String {
    if guard.is_empty() {
        return "1".into();
    }
    guard.iter().map(|l| literal_c(l, names)).collect::<Vec<_>>().join(" && ")
}

/// Header declaring `RandVal` for embedders.
pub fn randval_header() -> String {
    "#ifndef RANDVAL_H\n\
     #define RANDVAL_H\n\
     \n\
     /* Uniform draw between lbound and ubound; each flag marks its end of the\n\
      * range inclusive. Controllers only require that the returned value lies\n\
      * within the range and that every admissible value has positive\n\
      * probability; any distribution with that support is a valid drop-in. */\n\
     double RandVal(_Bool lflag, _Bool uflag, double lbound, double ubound);\n\
     \n\
     #endif\n"
        .into()
}

/// The default `RandVal` implementation.
///
/// The integer variant snaps open ends inward by one and draws uniformly from
/// the resulting closed integer range via `rand()`. Note the arithmetic runs
/// in `int`, so ranges wider than the int carrier (e.g. both ends unbounded)
/// overflow; controllers synthesized from bounded contracts never produce
/// such calls.
///
/// The real variant replaces the integer snapping with a uniform draw on a
/// 2^-32 grid spanning the range: open ends step one grid cell inward, which
/// keeps excluded endpoints unreachable while every interior neighborhood
/// retains positive probability.
pub fn emit_randval_default(theory: Theory) -> String {
    match theory {
        Theory::Lia => "\
#include <stdlib.h>

double RandVal(_Bool lflag, _Bool uflag, double lbound, double ubound)
{
    int min = lflag ? lbound : lbound + 1;
    int max = uflag ? ubound : ubound - 1;
    int range = max - min + 1;
    double rnd = (double) rand() / (1.0 + (double) RAND_MAX);
    int value = (int) ((double) range * rnd);
    return value + min;
}
"
        .into(),
        Theory::Lra => "\
#include <stdlib.h>

double RandVal(_Bool lflag, _Bool uflag, double lbound, double ubound)
{
    double step = (ubound - lbound) / 4294967296.0;
    double lo = lflag ? lbound : lbound + step;
    double hi = uflag ? ubound : ubound - step;
    double k = (double) rand() / ((double) RAND_MAX + 1.0);
    return lo + (hi - lo) * k;
}
"
        .into(),
    }
}

// ---------------------------------------------------------------------------
// SMT-LIB dump
// ---------------------------------------------------------------------------

fn sort_smt(sort: Sort) -> &'static str {
    match sort {
        Sort::Int | Sort::Bool => "Int",
        Sort::Real => "Real",
    }
}

fn int_sexp(k: &num_bigint::BigInt) -> String {
    if k.is_negative() {
        format!("(- {})", -k)
    } else {
        k.to_string()
    }
}

/// Render a term for the dump, spelling a primed output as the application of
/// its (already defined) `skolem_*` function.
fn dump_term(t: &LinearTerm, int: bool) -> String {
    let atom = |a: &Atom| -> String {
        match a {
            Atom::Var(v) if v.primed => format!("skolem_{}", smt_symbol(&v.name)),
            Atom::Var(v) => smt_symbol(&v.display_name()),
            Atom::FloorDiv(inner, k) => {
                format!("(div {} {})", dump_term(inner, true), int_sexp(k))
            }
            Atom::Ite(c, x, y) => format!(
                "(ite {} {} {})",
                dump_formula(c, int),
                dump_term(x, int),
                dump_term(y, int)
            ),
        }
    };
    let mut parts = Vec::new();
    for (a, c) in &t.coeffs {
        let a = atom(a);
        if c.is_one() {
            parts.push(a);
        } else if (-c.clone()).is_one() {
            parts.push(format!("(- {a})"));
        } else {
            parts.push(format!("(* {} {a})", rational_smt(c, int)));
        }
    }
    if !t.constant.is_zero() || parts.is_empty() {
        parts.push(rational_smt(&t.constant, int));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn dump_formula(f: &Formula, int: bool) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Lit(l) => {
            let vars = l.lhs.vars();
            let li = if vars.is_empty() { int } else { vars.iter().all(Var::is_integral) };
            let lhs = dump_term(&l.lhs, li);
            let zero = if li { "0" } else { "0.0" };
            let op = match l.op {
                RelOp::Eq => return format!("(= {lhs} {zero})"),
                RelOp::Ne => return format!("(not (= {lhs} {zero}))"),
                RelOp::Lt => "<",
                RelOp::Le => "<=",
                RelOp::Gt => ">",
                RelOp::Ge => ">=",
            };
            format!("({op} {lhs} {zero})")
        }
        Formula::Var(v) => format!("(= {} 1)", smt_symbol(&v.display_name())),
        Formula::Not(g) => format!("(not {})", dump_formula(g, int)),
        Formula::And(fs) => format!(
            "(and {})",
            fs.iter().map(|g| dump_formula(g, int)).collect::<Vec<_>>().join(" ")
        ),
        Formula::Or(fs) => format!(
            "(or {})",
            fs.iter().map(|g| dump_formula(g, int)).collect::<Vec<_>>().join(" ")
        ),
    }
}

/// Emit the witness as an SMT-LIB 2 script: the contract variables as
/// constants, one uninterpreted constant per random draw with its range facts
/// asserted under the owning arm's guard, and one `define-fun skolem_<out>`
/// per output selecting the arm's value with an `ite` chain.
pub fn emit_smtlib(w: &Witness) -> String {
    let contract = &w.contract;
    let int = contract.theory == Theory::Lia;
    let mut out = String::new();
    let mode = match w.mode {
        Mode::Random => "random",
        Mode::Deterministic => "deterministic",
    };
    let _ = writeln!(out, "; Controller witness for contract `{}` ({mode} mode).", contract.name);
    let _ = writeln!(out, "(set-logic ALL)");
    for v in contract.inputs.iter().chain(&contract.outputs) {
        let _ = writeln!(out, "(declare-const {} {})", smt_symbol(&v.name), sort_smt(v.sort));
    }

    // Number the random draws in tree order and record their range facts.
    let mut rng_decls = Vec::new();
    let mut rng_facts: Vec<(Formula, String)> = Vec::new();
    let mut rename: Vec<Vec<(Var, BTreeMap<Var, String>)>> = Vec::new();
    let mut counter = 0usize;
    for branch in &w.tree.branches {
        let guard = branch.guard_formula();
        let mut branch_rngs = Vec::new();
        for (v, rule) in &branch.updates {
            let mut slots = BTreeMap::new();
            collect_rngs(
                rule,
                &guard,
                v,
                int,
                &mut counter,
                &mut rng_decls,
                &mut rng_facts,
                &mut slots,
            );
            branch_rngs.push((v.clone(), slots));
        }
        rename.push(branch_rngs);
    }
    if !rng_decls.is_empty() {
        let _ = writeln!(out, "; Uninterpreted draws, one per random update-rule occurrence.");
        for d in &rng_decls {
            let _ = writeln!(out, "{d}");
        }
    }

    // Guards of all but the last branch drive the selection ite chain.
    for (oi, v) in contract.outputs.iter().enumerate() {
        let mut body = String::new();
        build_ite_chain(&w.tree.branches, oi, &rename, int, &mut body);
        let _ = writeln!(
            out,
            "(define-fun skolem_{} () {} {})",
            smt_symbol(&v.name),
            sort_smt(v.sort),
            body
        );
    }

    if !rng_facts.is_empty() {
        let _ = writeln!(out, "; Each draw obeys its rule's range whenever its arm is taken.");
        for (guard, fact) in &rng_facts {
            if matches!(guard, Formula::True) {
                let _ = writeln!(out, "(assert {fact})");
            } else {
                let _ = writeln!(out, "(assert (=> {} {fact}))", dump_formula(guard, int));
            }
        }
    }
    out
}

/// Walk one rule, declaring an `rng<k>` constant per draw and remembering the
/// symbol each `Urng` occurrence maps to (keyed by the draw's position).
#[allow(clippy::too_many_arguments)]
fn collect_rngs(
    rule: &LocalSkolem,
    path: &Formula,
    target: &Var,
    int: bool,
    counter: &mut usize,
    decls: &mut Vec<String>,
    facts: &mut Vec<(Formula, String)>,
    slots: &mut BTreeMap<Var, String>,
) {
    match rule {
        LocalSkolem::Assign(_) => {}
        LocalSkolem::GuardedPair { cond, when_true, when_false } => {
            let then_path = Formula::and2(path.clone(), cond.clone());
            let else_path = Formula::and2(path.clone(), Formula::not(cond.clone()));
            collect_rngs(when_true, &then_path, target, int, counter, decls, facts, slots);
            collect_rngs(when_false, &else_path, target, int, counter, decls, facts, slots);
        }
        LocalSkolem::Urng(call) => {
            let name = format!("rng{}", *counter);
            *counter += 1;
            let sort = if call.var.sort == Sort::Real { "Real" } else { "Int" };
            decls.push(format!("(declare-fun {name} () {sort})"));
            let mut conjuncts = Vec::new();
            if let Some(t) = &call.lower.term {
                conjuncts.push(range_fact(&name, t, &call.lower.closed, true, int));
            }
            if let Some(t) = &call.upper.term {
                conjuncts.push(range_fact(&name, t, &call.upper.closed, false, int));
            }
            for h in &call.avoid {
                conjuncts.push(format!("(not (= {name} {}))", dump_term(h, int)));
            }
            if !conjuncts.is_empty() {
                let fact = if conjuncts.len() == 1 {
                    conjuncts.pop().unwrap()
                } else {
                    format!("(and {})", conjuncts.join(" "))
                };
                facts.push((path.clone(), fact));
            }
            slots.insert(call.var.clone(), name.clone());
            // Remember the symbol for this occurrence under the rule target
            // too: single-draw rules are looked up by target variable.
            slots.entry(target.primed()).or_insert(name);
        }
    }
}

fn range_fact(name: &str, t: &LinearTerm, closed: &Formula, lower: bool, int: bool) -> String {
    let term = dump_term(t, int);
    let (inc, strict) = if lower { (">=", ">") } else { ("<=", "<") };
    match closed {
        Formula::True => format!("({inc} {name} {term})"),
        Formula::False => format!("({strict} {name} {term})"),
        f => format!(
            "(ite {} ({inc} {name} {term}) ({strict} {name} {term}))",
            dump_formula(f, int)
        ),
    }
}

/// The selection `ite` chain for output `oi`, with each arm's value rendered
/// with its own draws substituted.
fn build_ite_chain(
    branches: &[Branch],
    oi: usize,
    rename: &[Vec<(Var, BTreeMap<Var, String>)>],
    int: bool,
    out: &mut String,
) {
    fn value_of(rule: &LocalSkolem, slots: &BTreeMap<Var, String>, int: bool) -> String {
        match rule {
            LocalSkolem::Assign(t) => dump_term(t, int),
            LocalSkolem::GuardedPair { cond, when_true, when_false } => format!(
                "(ite {} {} {})",
                dump_formula(cond, int),
                value_of(when_true, slots, int),
                value_of(when_false, slots, int)
            ),
            LocalSkolem::Urng(call) => slots
                .get(&call.var)
                .cloned()
                .unwrap_or_else(|| "rng_unbound".into()),
        }
    }
    for (bi, b) in branches.iter().enumerate() {
        let (_, rule) = &b.updates[oi];
        let slots = &rename[bi][oi].1;
        let value = value_of(rule, slots, int);
        if bi + 1 == branches.len() {
            out.push_str(&value);
        } else {
            let guard = dump_formula(&b.guard_formula(), int);
            let _ = write!(out, "(ite {guard} {value} ");
        }
    }
    for _ in 1..branches.len() {
        out.push(')');
    }
    if branches.is_empty() {
        out.push('0');
    }
}

// ---------------------------------------------------------------------------
// Witness files
// ---------------------------------------------------------------------------

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Random => "random",
        Mode::Deterministic => "det",
    }
}

fn bound_sexp(b: &Bound, int: bool) -> String {
    let closed = formula_smt(&b.closed, int);
    match &b.term {
        Some(t) => format!("{closed} {}", formula_term(t, int)),
        None => format!("{closed} none"),
    }
}

fn formula_term(t: &LinearTerm, int: bool) -> String {
    crate::logic::print::term_smt(t, int)
}

fn rule_sexp(rule: &LocalSkolem, int: bool) -> String {
    match rule {
        LocalSkolem::Assign(t) => format!("(assign {})", formula_term(t, int)),
        LocalSkolem::GuardedPair { cond, when_true, when_false } => format!(
            "(cond {} {} {})",
            formula_smt(cond, int),
            rule_sexp(when_true, int),
            rule_sexp(when_false, int)
        ),
        LocalSkolem::Urng(call) => {
            let avoid: Vec<String> = call.avoid.iter().map(|t| formula_term(t, int)).collect();
            format!(
                "(urng (avoid {}) (lower {}) (upper {}))",
                avoid.join(" "),
                bound_sexp(&call.lower, int),
                bound_sexp(&call.upper, int)
            )
        }
    }
}

/// Serialize a witness as a single s-expression. The output is deterministic
/// and round-trips through [`read_witness`].
pub fn write_witness(w: &Witness) -> String {
    let contract = &w.contract;
    let int = contract.theory == Theory::Lia;
    let mut out = String::new();
    let _ = writeln!(out, "(witness");
    let _ = writeln!(out, "  (contract {})", smt_symbol(&contract.name));
    let theory = match contract.theory {
        Theory::Lia => "lia",
        Theory::Lra => "lra",
    };
    let _ = writeln!(out, "  (theory {theory})");
    let _ = writeln!(out, "  (mode {})", mode_name(w.mode));
    let sort_name = |s: Sort| match s {
        Sort::Int => "int",
        Sort::Real => "real",
        Sort::Bool => "bool",
    };
    for v in &contract.inputs {
        let _ = writeln!(out, "  (var input {} {})", smt_symbol(&v.name), sort_name(v.sort));
    }
    for v in &contract.outputs {
        let _ = writeln!(out, "  (var output {} {})", smt_symbol(&v.name), sort_name(v.sort));
    }
    let _ = writeln!(out, "  (assumptions {})", formula_smt(&contract.assumptions, int));
    let _ = writeln!(out, "  (initial {})", formula_smt(&contract.initial, int));
    let _ = writeln!(out, "  (transition {})", formula_smt(&contract.transition, int));
    let _ = writeln!(out, "  (fixpoint {})", formula_smt(&w.fixpoint, int));
    let inits: Vec<String> = contract
        .outputs
        .iter()
        .filter_map(|v| {
            w.init.get(v).map(|q| {
                format!("({} {})", smt_symbol(&v.name), rational_smt(q, v.sort != Sort::Real))
            })
        })
        .collect();
    let _ = writeln!(out, "  (init {})", inits.join(" "));
    for b in &w.tree.branches {
        let _ = writeln!(out, "  (branch");
        let guards: Vec<String> = b
            .guard
            .iter()
            .map(|l| formula_smt(&Formula::lit(l.clone()), int))
            .collect();
        let _ = writeln!(out, "    (guard {})", guards.join(" "));
        for (v, rule) in &b.updates {
            let _ = writeln!(out, "    (update {} {})", smt_symbol(&v.name), rule_sexp(rule, int));
        }
        let _ = writeln!(out, "  )");
    }
    let _ = writeln!(out, ")");
    out
}

fn field<'a>(items: &'a [SExpr], key: &str) -> Option<&'a [SExpr]> {
    items.iter().find_map(|s| {
        let list = s.list()?;
        match list.split_first() {
            Some((head, rest)) if head.atom() == Some(key) => Some(rest),
            _ => None,
        }
    })
}

fn expect_atom<'a>(s: &'a SExpr, what: &str) -> Result<&'a str> {
    s.atom().ok_or_else(|| s.err(format!("expected {what}")))
}

fn parse_bound(items: &[SExpr], env: &BTreeMap<String, Var>) -> Result<Bound> {
    match items {
        [closed, term] => {
            let closed = parse_formula(closed, env)?;
            let term = if term.atom() == Some("none") {
                None
            } else {
                Some(parse_term(term, env)?)
            };
            Ok(Bound { term, closed })
        }
        _ => Err(Error::Parse {
            line: 0,
            col: 0,
            msg: "a bound needs a closedness formula and a term (or `none`)".into(),
        }),
    }
}

fn parse_rule(s: &SExpr, env: &BTreeMap<String, Var>, target: &Var) -> Result<LocalSkolem> {
    let items = s.list().ok_or_else(|| s.err("expected an update rule"))?;
    let (head, rest) = items
        .split_first()
        .ok_or_else(|| s.err("empty update rule"))?;
    match head.atom() {
        Some("assign") => match rest {
            [t] => Ok(LocalSkolem::Assign(parse_term(t, env)?)),
            _ => Err(s.err("assign takes one term")),
        },
        Some("cond") => match rest {
            [c, a, b] => Ok(LocalSkolem::GuardedPair {
                cond: parse_formula(c, env)?,
                when_true: Box::new(parse_rule(a, env, target)?),
                when_false: Box::new(parse_rule(b, env, target)?),
            }),
            _ => Err(s.err("cond takes a formula and two rules")),
        },
        Some("urng") => {
            let avoid_items = field(rest, "avoid").ok_or_else(|| s.err("urng needs (avoid ...)"))?;
            let avoid = avoid_items
                .iter()
                .map(|t| parse_term(t, env))
                .collect::<Result<Vec<_>>>()?;
            let lower = parse_bound(
                field(rest, "lower").ok_or_else(|| s.err("urng needs (lower ...)"))?,
                env,
            )?;
            let upper = parse_bound(
                field(rest, "upper").ok_or_else(|| s.err("urng needs (upper ...)"))?,
                env,
            )?;
            Ok(LocalSkolem::Urng(UrngCall {
                var: target.primed(),
                avoid,
                lower,
                upper,
            }))
        }
        _ => Err(s.err("unknown update rule")),
    }
}

/// Parse a witness file produced by [`write_witness`].
pub fn read_witness(src: &str) -> Result<Witness> {
    let sexp = read_one(src)?;
    let items = sexp.list().ok_or_else(|| sexp.err("expected (witness ...)"))?;
    let (head, items) = items
        .split_first()
        .ok_or_else(|| sexp.err("expected (witness ...)"))?;
    if head.atom() != Some("witness") {
        return Err(head.err("expected (witness ...)"));
    }
    let one = |key: &str| -> Result<&SExpr> {
        match field(items, key) {
            Some([s]) => Ok(s),
            _ => Err(sexp.err(format!("witness needs exactly one ({key} ...)"))),
        }
    };

    let name = expect_atom(one("contract")?, "a contract name")?.to_string();
    let theory = match expect_atom(one("theory")?, "a theory")? {
        "lia" => Theory::Lia,
        "lra" => Theory::Lra,
        other => return Err(sexp.err(format!("unknown theory {other}"))),
    };
    let mode = match expect_atom(one("mode")?, "a mode")? {
        "random" => Mode::Random,
        "det" => Mode::Deterministic,
        other => return Err(sexp.err(format!("unknown mode {other}"))),
    };

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for s in items {
        let Some(list) = s.list() else { continue };
        if list.first().and_then(SExpr::atom) != Some("var") {
            continue;
        }
        let [_, role, name, sort] = list else {
            return Err(s.err("expected (var <role> <name> <sort>)"));
        };
        let sort = match expect_atom(sort, "a sort")? {
            "int" => Sort::Int,
            "real" => Sort::Real,
            "bool" => Sort::Bool,
            other => return Err(s.err(format!("unknown sort {other}"))),
        };
        let name = expect_atom(name, "a variable name")?;
        match expect_atom(role, "a role")? {
            "input" => inputs.push(Var::new(name, sort, VarRole::Input)),
            "output" => outputs.push(Var::new(name, sort, VarRole::Output)),
            other => return Err(s.err(format!("unknown role {other}"))),
        }
    }
    let mut env = name_env(inputs.iter().chain(&outputs));
    for v in &outputs {
        let p = v.primed();
        env.insert(p.display_name(), p);
    }

    let assumptions = parse_formula(one("assumptions")?, &env)?;
    let initial = parse_formula(one("initial")?, &env)?;
    let transition = parse_formula(one("transition")?, &env)?;
    let fixpoint = parse_formula(one("fixpoint")?, &env)?;

    let mut init = Model::new();
    if let Some(pairs) = field(items, "init") {
        for p in pairs {
            let [name, value] = p.list().ok_or_else(|| p.err("expected (<var> <value>)"))? else {
                return Err(p.err("expected (<var> <value>)"));
            };
            let name = expect_atom(name, "a variable name")?;
            let v = env
                .get(name)
                .cloned()
                .ok_or_else(|| p.err(format!("unknown init variable {name}")))?;
            init.set(v, parse_value(value)?);
        }
    }

    let mut branches = Vec::new();
    for s in items {
        let Some(list) = s.list() else { continue };
        let Some((head, rest)) = list.split_first() else { continue };
        if head.atom() != Some("branch") {
            continue;
        }
        let guard_items = field(rest, "guard").ok_or_else(|| s.err("branch needs (guard ...)"))?;
        let mut guard = Vec::new();
        for g in guard_items {
            match parse_formula(g, &env)? {
                Formula::Lit(l) => guard.push(l),
                _ => return Err(g.err("guards must be relational literals")),
            }
        }
        let mut updates = Vec::new();
        for u in rest {
            let Some(list) = u.list() else { continue };
            let Some((head, tail)) = list.split_first() else { continue };
            if head.atom() != Some("update") {
                continue;
            }
            let [name, rule] = tail else {
                return Err(u.err("expected (update <var> <rule>)"));
            };
            let name = expect_atom(name, "an output name")?;
            let target = outputs
                .iter()
                .find(|v| v.name.as_ref() == name)
                .cloned()
                .ok_or_else(|| u.err(format!("unknown output {name}")))?;
            updates.push((target.primed(), parse_rule(rule, &env, &target)?));
        }
        if updates.len() != outputs.len() {
            return Err(s.err("each branch needs exactly one update per output"));
        }
        for (v, (u, _)) in outputs.iter().zip(&updates) {
            if u.name != v.name {
                return Err(s.err("branch updates must follow output declaration order"));
            }
        }
        branches.push(Branch { guard, updates });
    }

    Ok(Witness {
        contract: Contract {
            name,
            theory,
            inputs,
            outputs,
            assumptions,
            initial,
            transition,
        },
        mode,
        fixpoint,
        init,
        tree: SkolemTree { branches },
    })
}
