//! Greatest-fixpoint realizability checking and witness synthesis.
//!
//! Starting from the whole state space, the loop shrinks a candidate
//! invariant `F` over the contract's outputs until either
//!
//! * every state in `F` can respond to every admissible input with a
//!   successor back inside `F` — then the contract is realizable, a Skolem
//!   tree for the successor choice is extracted from the final validity
//!   proof, and any model of `initial ∧ F` serves as an initial state; or
//! * no initial state survives inside `F` — then no implementation exists
//!   and `F` documents how the requirement failed.
//!
//! Each round asks one ∀∃ validity question: under `F ∧ assumptions`, can
//! the primed outputs be chosen so that `transition ∧ F'` holds? An invalid
//! answer yields the region of states that can still respond; its
//! complement, with the inputs projected out, is removed from `F`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logic::{rename_vars, Contract, Formula, Model, Var};
use crate::mbp::eliminate;
use crate::skolem::LocalSkolem;
use crate::solver::{SatResult, Solver};
use crate::validity::{ae_val, AeOutcome, AevalConfig, Mode, SkolemTree};

/// Knobs for the synthesis loop.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Leaf style of the extracted witness: bounded random draws or fixed
    /// representatives.
    pub mode: Mode,
    /// Maximum number of fixpoint refinements.
    pub fixpoint_cap: usize,
    /// Forwarded to the validity check (branch enumeration cap).
    pub iter_cap: usize,
    /// Region cap for projecting inputs out of the shrink step.
    pub region_cap: usize,
    /// Seed the validity check with one branch per satisfiable disjunct of
    /// the transition before model-guided enumeration takes over.
    pub exhaustive_dnf: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            mode: Mode::Random,
            fixpoint_cap: 256,
            iter_cap: 10_000,
            region_cap: 10_000,
            exhaustive_dnf: false,
        }
    }
}

/// Result of the synthesis loop.
#[derive(Debug, Clone)]
pub enum SynthOutcome {
    /// The contract has an implementation: `tree` chooses primed outputs
    /// branch by branch, `init` satisfies `initial ∧ fixpoint`.
    Realizable {
        fixpoint: Formula,
        tree: SkolemTree,
        init: Model,
        iterations: usize,
        ae_calls: usize,
    },
    /// No initial state lies inside the final invariant.
    Unrealizable {
        fixpoint: Formula,
        iterations: usize,
        ae_calls: usize,
    },
}

impl SynthOutcome {
    pub fn is_realizable(&self) -> bool {
        matches!(self, SynthOutcome::Realizable { .. })
    }

    pub fn ae_calls(&self) -> usize {
        match self {
            SynthOutcome::Realizable { ae_calls, .. }
            | SynthOutcome::Unrealizable { ae_calls, .. } => *ae_calls,
        }
    }

    pub fn fixpoint(&self) -> &Formula {
        match self {
            SynthOutcome::Realizable { fixpoint, .. }
            | SynthOutcome::Unrealizable { fixpoint, .. } => fixpoint,
        }
    }
}

/// Run the greatest-fixpoint loop on `contract`.
pub fn synthesize(
    contract: &Contract,
    cfg: &SynthConfig,
    solver: &Solver,
) -> Result<SynthOutcome> {
    let primed: BTreeMap<Var, Var> = contract
        .outputs
        .iter()
        .map(|v| (v.clone(), v.primed()))
        .collect();
    let universals: Vec<Var> = contract
        .inputs
        .iter()
        .chain(contract.outputs.iter())
        .cloned()
        .collect();
    let existentials = contract.primed_outputs();
    let aeval_cfg = AevalConfig {
        mode: cfg.mode,
        iter_cap: cfg.iter_cap,
        exhaustive_dnf: cfg.exhaustive_dnf,
    };

    let mut fixpoint = Formula::True;
    let mut iterations = 0usize;
    let mut ae_calls = 0usize;
    loop {
        iterations += 1;
        if iterations > cfg.fixpoint_cap {
            return Err(Error::Resource(format!(
                "fixpoint did not converge within {} refinements",
                cfg.fixpoint_cap
            )));
        }
        // An invariant with no initial state inside refutes realizability
        // immediately, whether or not it is still shrinking.
        let seed = Formula::and2(contract.initial.clone(), fixpoint.clone());
        let init = match solver.check(&seed)? {
            SatResult::Unsat => {
                return Ok(SynthOutcome::Unrealizable { fixpoint, iterations, ae_calls })
            }
            SatResult::Sat(m) => m.restricted(&contract.outputs),
        };

        let context = Formula::and2(fixpoint.clone(), contract.assumptions.clone());
        let matrix = Formula::and2(
            contract.transition.clone(),
            rename_vars(&fixpoint, &primed),
        );
        ae_calls += 1;
        match ae_val(&universals, &existentials, &context, &matrix, &aeval_cfg, solver)? {
            AeOutcome::Valid(tree) => {
                return Ok(SynthOutcome::Realizable {
                    fixpoint,
                    tree,
                    init,
                    iterations,
                    ae_calls,
                })
            }
            AeOutcome::Invalid { valid_region } => {
                // States with an admissible input that no response covers.
                let doomed = Formula::and2(
                    contract.assumptions.clone(),
                    Formula::not(valid_region),
                );
                let losing = eliminate(&contract.inputs, &doomed, solver, cfg.region_cap)?;
                fixpoint = Formula::and2(fixpoint, Formula::not(losing));
            }
        }
    }
}

/// Convenience for tests and the command line: a witness bundles everything
/// the downstream stages need.
#[derive(Debug, Clone)]
pub struct Witness {
    pub contract: Contract,
    pub mode: Mode,
    pub fixpoint: Formula,
    pub init: Model,
    pub tree: SkolemTree,
}

impl Witness {
    /// Build a witness from a realizable outcome; errors on unrealizable.
    pub fn from_outcome(contract: &Contract, mode: Mode, outcome: SynthOutcome) -> Result<Witness> {
        match outcome {
            SynthOutcome::Realizable { fixpoint, tree, init, .. } => Ok(Witness {
                contract: contract.clone(),
                mode,
                fixpoint,
                init,
                tree,
            }),
            SynthOutcome::Unrealizable { .. } => Err(Error::Violation(
                "cannot extract a witness from an unrealizable contract".into(),
            )),
        }
    }

    /// The assignments of one branch, in output declaration order.
    pub fn branch_updates(&self, branch: usize) -> &[(Var, LocalSkolem)] {
        &self.tree.branches[branch].updates
    }
}
