//! Synthesis of randomizing reactive controllers from assume-guarantee contracts.
//!
//! The pipeline: a Lustre-subset contract is elaborated into assumptions,
//! initial guarantees, and transitional guarantees over linear integer or
//! real arithmetic; a greatest-fixpoint loop decides realizability; each
//! fixpoint step solves a forall-exists validity query whose witness is a
//! guarded tree of per-output Skolem assignments. Leaves either pin an output
//! to a term or draw it from an uninterpreted range generator, which keeps
//! the controller's admissible behavior intact instead of collapsing it to a
//! single deterministic choice. Back ends: in-process interpretation
//! (simulation, pursuit games, fuzz driving) and C code emission.

pub mod error;
pub mod fixpoint;
pub mod codegen;
pub mod logic;
pub mod lustre;
pub mod mbp;
pub mod sim;
pub mod skolem;
pub mod validity;
pub mod solver;

pub use codegen::{
    emit_c, emit_randval_default, emit_smtlib, randval_header, read_witness, witness_file_name,
    write_witness, EmitConfig, RngLinkage, Target,
};
pub use error::{Error, Result};
pub use fixpoint::{synthesize, SynthConfig, SynthOutcome, Witness};
pub use mbp::{eliminate, project, Projection};
pub use sim::{
    admissible, arena_cells, checked_draw, fuzz_emit, initial_state, parse_game_config,
    simulate_game, step, Arena, BiasedProvider, DrawRequest, GameConfig, Policy, RngProvider,
    RunTrace, TurnRecord, UniformProvider,
};
pub use skolem::{Bound, Buckets, LocalSkolem, UrngCall};
pub use validity::{ae_val, AeOutcome, AevalConfig, Branch, Mode, SkolemTree};
pub use logic::{
    Atom, Contract, Formula, LinearTerm, Literal, Model, Rational, RelOp, Sort, Theory, Var,
    VarRole,
};
pub use solver::{Backend, SatResult, Solver, SolverConfig};
