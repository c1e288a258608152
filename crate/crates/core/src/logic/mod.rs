//! Sorted variables, exact-rational linear terms, literals, formulas, and
//! models: the term language everything else in the crate is written against.
//!
//! All arithmetic is exact (`BigRational`); no floating point enters the
//! logic layer. Variable identity is the pair (name, primed): sort and role
//! ride along as metadata so that independently constructed occurrences of
//! the same contract variable compare equal.

mod formula;
mod literal;
mod model;
pub mod parse;
pub mod print;
mod term;

pub use formula::{nnf, rename_vars, subst_terms, to_dnf, true_literals, Formula};
pub use literal::{Isolated, Literal, RelOp};
pub use model::Model;
pub use term::{Atom, LinearTerm, Rational};

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Variable sorts. Bool-sorted variables are carried through the arithmetic
/// layers as integers constrained to {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Int => write!(f, "Int"),
            Sort::Real => write!(f, "Real"),
        }
    }
}

/// Where a variable came from in the source contract. Locals are treated as
/// outputs by elaboration; the distinction is kept only for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRole {
    Input,
    Output,
    Local,
}

/// The arithmetic theory a contract is declared over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Theory {
    Lia,
    Lra,
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theory::Lia => write!(f, "LIA"),
            Theory::Lra => write!(f, "LRA"),
        }
    }
}

/// A sorted variable, possibly primed (next-step copy).
///
/// Equality, ordering, and hashing use only (name, primed); a contract must
/// not declare two variables with the same name and different sorts.
#[derive(Debug, Clone)]
pub struct Var {
    pub name: Arc<str>,
    pub primed: bool,
    pub sort: Sort,
    pub role: VarRole,
}

impl Var {
    pub fn new(name: &str, sort: Sort, role: VarRole) -> Self {
        Var { name: Arc::from(name), primed: false, sort, role }
    }

    pub fn input(name: &str, sort: Sort) -> Self {
        Var::new(name, sort, VarRole::Input)
    }

    pub fn output(name: &str, sort: Sort) -> Self {
        Var::new(name, sort, VarRole::Output)
    }

    /// The primed (next-step) copy of this variable.
    pub fn primed(&self) -> Self {
        Var { primed: true, ..self.clone() }
    }

    /// The unprimed copy of this variable.
    pub fn unprimed(&self) -> Self {
        Var { primed: false, ..self.clone() }
    }

    /// Printed form: primed variables carry a trailing quote.
    pub fn display_name(&self) -> String {
        if self.primed {
            format!("{}'", self.name)
        } else {
            self.name.to_string()
        }
    }

    /// True when the variable ranges over integers (Bool is encoded in
    /// {0, 1}, so it counts).
    pub fn is_integral(&self) -> bool {
        matches!(self.sort, Sort::Int | Sort::Bool)
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.primed == other.primed
    }
}

impl Eq for Var {}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.name.as_ref(), self.primed).cmp(&(other.name.as_ref(), other.primed))
    }
}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.primed.hash(state);
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_name())
    }
}

/// An assume-guarantee contract over linear arithmetic.
///
/// `assumptions` ranges over inputs and current outputs, `initial` over
/// unprimed outputs only, and `transition` over current outputs, inputs, and
/// primed outputs.
#[derive(Debug, Clone)]
pub struct Contract {
    pub name: String,
    pub theory: Theory,
    pub inputs: Vec<Var>,
    pub outputs: Vec<Var>,
    pub assumptions: Formula,
    pub initial: Formula,
    pub transition: Formula,
}

impl Contract {
    /// Primed copies of the outputs, in declaration order.
    pub fn primed_outputs(&self) -> Vec<Var> {
        self.outputs.iter().map(Var::primed).collect()
    }

    pub fn lookup(&self, name: &str) -> Option<&Var> {
        self.inputs
            .iter()
            .chain(self.outputs.iter())
            .find(|v| v.name.as_ref() == name)
    }
}
