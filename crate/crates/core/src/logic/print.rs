//! Printers: human-readable infix for diagnostics and displays, and
//! SMT-LIB 2 forms for external solving and witness files.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::logic::{Atom, Formula, LinearTerm, Literal, Rational, RelOp};

// ---------------------------------------------------------------------------
// Infix
// ---------------------------------------------------------------------------

fn atom_infix(a: &Atom) -> String {
    match a {
        Atom::Var(v) => v.display_name(),
        Atom::FloorDiv(t, k) => format!("div({}, {})", term_infix(t), k),
        Atom::Ite(c, x, y) => format!(
            "ite({}, {}, {})",
            formula_infix(c),
            term_infix(x),
            term_infix(y)
        ),
    }
}

fn rational_infix(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn term_infix(t: &LinearTerm) -> String {
    // A term whose parts are all negative prints as the negation of its
    // mirror image: -(position + x) rather than -position - x.
    if t.coeffs.len() >= 2
        && t.coeffs.values().all(Signed::is_negative)
        && t.constant.is_zero()
    {
        return format!("- ({})", term_infix(&t.scaled(&-Rational::one())));
    }
    let mut out = String::new();
    let mut first = true;
    for (a, c) in &t.coeffs {
        let mag = c.abs();
        let piece = if mag.is_one() {
            atom_infix(a)
        } else {
            format!("{}*{}", rational_infix(&mag), atom_infix(a))
        };
        if first {
            if c.is_negative() {
                out.push('-');
            }
            out.push_str(&piece);
            first = false;
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            out.push_str(&piece);
        }
    }
    if first {
        return rational_infix(&t.constant);
    }
    if !t.constant.is_zero() {
        out.push_str(if t.constant.is_negative() { " - " } else { " + " });
        out.push_str(&rational_infix(&t.constant.abs()));
    }
    out
}

/// Literals print with the constant moved to the right-hand side:
/// `position + x == 1` rather than `position + x - 1 == 0`.
pub fn literal_infix(l: &Literal) -> String {
    if l.lhs.coeffs.is_empty() {
        return format!("{} {} 0", rational_infix(&l.lhs.constant), l.op.token());
    }
    let lhs = LinearTerm { constant: Rational::zero(), coeffs: l.lhs.coeffs.clone() };
    let rhs = -l.lhs.constant.clone();
    format!("{} {} {}", term_infix(&lhs), l.op.token(), rational_infix(&rhs))
}

fn needs_parens(f: &Formula) -> bool {
    matches!(f, Formula::And(_) | Formula::Or(_) | Formula::Not(_))
}

fn child_infix(f: &Formula) -> String {
    if needs_parens(f) {
        format!("({})", formula_infix(f))
    } else {
        formula_infix(f)
    }
}

pub fn formula_infix(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Lit(l) => literal_infix(l),
        Formula::Var(v) => v.display_name(),
        Formula::Not(g) => format!("not {}", child_infix(g)),
        Formula::And(fs) => fs
            .iter()
            .map(child_infix)
            .collect::<Vec<_>>()
            .join(" and "),
        Formula::Or(fs) => fs.iter().map(child_infix).collect::<Vec<_>>().join(" or "),
    }
}

// ---------------------------------------------------------------------------
// SMT-LIB 2
// ---------------------------------------------------------------------------

/// Quote a name as an SMT-LIB symbol when it contains characters outside the
/// simple-symbol alphabet (primed names, for instance, become `|y'|`).
pub fn smt_symbol(name: &str) -> String {
    let simple = |c: char| c.is_ascii_alphanumeric() || "~!@$%^&*_+=<>.?/-".contains(c);
    let starts_digit = name.chars().next().is_some_and(|c| c.is_ascii_digit());
    if !name.is_empty() && !starts_digit && name.chars().all(simple) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn int_smt(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

/// Print a rational as an SMT-LIB numeral of the given theory. Integer
/// contexts require an integer value.
pub fn rational_smt(q: &Rational, int: bool) -> String {
    if int {
        debug_assert!(q.is_integer(), "integer context with non-integer {q}");
        int_smt(q.numer())
    } else if q.is_integer() {
        if q.numer().is_negative() {
            format!("(- {}.0)", -q.numer())
        } else {
            format!("{}.0", q.numer())
        }
    } else if q.is_negative() {
        format!("(- (/ {}.0 {}.0))", -q.numer(), q.denom())
    } else {
        format!("(/ {}.0 {}.0)", q.numer(), q.denom())
    }
}

fn atom_smt(a: &Atom, int: bool) -> String {
    match a {
        Atom::Var(v) => smt_symbol(&v.display_name()),
        Atom::FloorDiv(t, k) => format!("(div {} {})", term_smt(t, true), int_smt(k)),
        Atom::Ite(c, x, y) => format!(
            "(ite {} {} {})",
            formula_smt(c, int),
            term_smt(x, int),
            term_smt(y, int)
        ),
    }
}

pub fn term_smt(t: &LinearTerm, int: bool) -> String {
    let mut parts = Vec::new();
    for (a, c) in &t.coeffs {
        let atom = atom_smt(a, int);
        if c.is_one() {
            parts.push(atom);
        } else if (-c.clone()).is_one() {
            parts.push(format!("(- {atom})"));
        } else {
            parts.push(format!("(* {} {atom})", rational_smt(c, int)));
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

/// Print a literal. The numeral style follows the literal's own variables
/// (all-integral literals print integer numerals even inside a real-theory
/// formula, matching how their variables are declared); `default_int`
/// applies only to variable-free literals.
pub fn literal_smt(l: &Literal, default_int: bool) -> String {
    let vars = l.lhs.vars();
    let int = if vars.is_empty() {
        default_int
    } else {
        vars.iter().all(crate::logic::Var::is_integral)
    };
    let lhs = term_smt(&l.lhs, int);
    let zero = if int { "0" } else { "0.0" };
    match l.op {
        RelOp::Eq => format!("(= {lhs} {zero})"),
        RelOp::Ne => format!("(not (= {lhs} {zero}))"),
        RelOp::Lt => format!("(< {lhs} {zero})"),
        RelOp::Le => format!("(<= {lhs} {zero})"),
        RelOp::Gt => format!("(> {lhs} {zero})"),
        RelOp::Ge => format!("(>= {lhs} {zero})"),
    }
}

pub fn formula_smt(f: &Formula, int: bool) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Lit(l) => literal_smt(l, int),
        // Booleans ride through arithmetic as {0, 1}-valued integers.
        Formula::Var(v) => format!("(= {} 1)", smt_symbol(&v.display_name())),
        Formula::Not(g) => format!("(not {})", formula_smt(g, int)),
        Formula::And(fs) => format!(
            "(and {})",
            fs.iter()
                .map(|g| formula_smt(g, int))
                .collect::<Vec<_>>()
                .join(" ")
        ),
        Formula::Or(fs) => format!(
            "(or {})",
            fs.iter()
                .map(|g| formula_smt(g, int))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    }
}
