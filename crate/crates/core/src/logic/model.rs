//! Total assignments from variables to exact rationals.
//!
//! Bool-sorted variables are stored as 0 or 1. Evaluation is strict: looking
//! up an unassigned variable is an error, as is a Bool value outside {0, 1}.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::logic::{Formula, Literal, Rational, Var};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    map: BTreeMap<Var, Rational>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn set(&mut self, v: Var, q: Rational) {
        self.map.insert(v, q);
    }

    pub fn get(&self, v: &Var) -> Option<&Rational> {
        self.map.get(v)
    }

    pub fn value(&self, v: &Var) -> Result<&Rational> {
        self.map
            .get(v)
            .ok_or_else(|| Error::Internal(format!("model has no value for {v}")))
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.map.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Rational)> {
        self.map.iter()
    }

    /// Keep only the listed variables.
    pub fn restricted(&self, vars: &[Var]) -> Model {
        let mut out = Model::new();
        for v in vars {
            if let Some(q) = self.map.get(v) {
                out.set(v.clone(), q.clone());
            }
        }
        out
    }

    /// Add every binding from `other`, overriding on collision.
    pub fn extend(&mut self, other: &Model) {
        for (v, q) in &other.map {
            self.map.insert(v.clone(), q.clone());
        }
    }

    pub fn eval_literal(&self, lit: &Literal) -> Result<bool> {
        lit.holds(self)
    }

    pub fn eval_formula(&self, f: &Formula) -> Result<bool> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Lit(l) => l.holds(self),
            Formula::Var(v) => {
                let q = self.value(v)?;
                if q.is_one() {
                    Ok(true)
                } else if q.is_zero() {
                    Ok(false)
                } else {
                    Err(Error::Internal(format!(
                        "boolean variable {v} bound to non-boolean value {q}"
                    )))
                }
            }
            Formula::Not(g) => Ok(!self.eval_formula(g)?),
            Formula::And(fs) => {
                for g in fs {
                    if !self.eval_formula(g)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(fs) => {
                for g in fs {
                    if self.eval_formula(g)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, q)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} -> {q}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<(Var, Rational)> for Model {
    fn from_iter<T: IntoIterator<Item = (Var, Rational)>>(iter: T) -> Self {
        Model { map: iter.into_iter().collect() }
    }
}
