//! Command-line driver for the randsynth toolkit.
//!
//! Exit codes: 0 success (for `check`, realizable), 1 unrealizable or a
//! guarantee violation during simulation, 2 the solver could not decide
//! within its budget, 64 usage errors, 70 internal failures.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use randsynth_core::error::Result;
use randsynth_core::sim::{
    arena_cells, fuzz_emit, parse_game_config, simulate_game, BiasedProvider, RngProvider,
    UniformProvider,
};
use randsynth_core::solver::{Backend, Solver, SolverConfig};
use randsynth_core::{
    emit_c, emit_randval_default, emit_smtlib, lustre, randval_header, read_witness, synthesize,
    witness_file_name, write_witness, EmitConfig, Mode, SynthConfig, SynthOutcome, Witness,
};

#[derive(Parser)]
#[command(
    name = "randsynth",
    version,
    about = "Synthesize, emit, and run randomizing controllers for assume-guarantee contracts"
)]
struct Cli {
    /// SMT backend: `internal` (default) or an external SMT-LIB 2 command
    /// line such as `z3` or `cvc5 -q`. The RANDSYNTH_SOLVER environment
    /// variable supplies the default.
    #[arg(long, global = true)]
    solver: Option<String>,

    /// Wall-clock budget per external solver query, in milliseconds.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,

    /// Cap on enumerated witness branches per validity query.
    #[arg(long, global = true)]
    iter_cap: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LeafMode {
    /// Leaves draw from the full admissible range.
    Random,
    /// Leaves pin one representative value.
    #[value(alias = "deterministic")]
    Det,
}

impl From<LeafMode> for Mode {
    fn from(m: LeafMode) -> Mode {
        match m {
            LeafMode::Random => Mode::Random,
            LeafMode::Det => Mode::Deterministic,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetKind {
    /// A C translation unit with an init and a step function.
    C,
    /// An SMT-LIB 2 dump of the selection function and its range facts.
    Smtlib,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    /// Uniform over every admissible value.
    Uniform,
    /// Compliant but skewed toward the low end of each range.
    BiasedLow,
    /// Compliant but skewed toward the high end of each range.
    BiasedHigh,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a contract is realizable.
    Check {
        /// Contract source file.
        file: PathBuf,
    },
    /// Synthesize a controller and write its witness dump.
    Synth {
        /// Contract source file.
        file: PathBuf,
        /// Witness leaf style.
        #[arg(long, value_enum, default_value = "random")]
        mode: LeafMode,
        /// Destination path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit code for a witness dump or a contract source file.
    Codegen {
        /// A witness dump (from `synth --out`) or a contract source file,
        /// which is synthesized first.
        input: PathBuf,
        /// Output language.
        #[arg(long, value_enum, default_value = "c")]
        target: TargetKind,
        /// Leaf style when synthesizing from source (dumps carry their own).
        #[arg(long, value_enum, default_value = "random")]
        mode: LeafMode,
        /// Also write the default RandVal implementation and its header.
        #[arg(long)]
        emit_randval: bool,
        /// Directory receiving the generated files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run an arena game between the controller and a scripted adversary.
    ///
    /// The game configuration is JSON: {"arena": {"xmin": 0, "ymin": 0,
    /// "xmax": 6, "ymax": 6}, "delta": 1, "adversary_start": [6, 6],
    /// "policy": "chaser" | {"patrol": [[0.8, 0.8], ...]}, and optionally
    /// "robot_start": [x, y], "robot_vars": ["rx", "ry"],
    /// "adversary_inputs": ["dx", "dy"], "turns": N, "seed": N}. Numbers are
    /// exact decimals. Flags override the file's turns and seed.
    Simulate {
        /// A witness dump or a contract source file.
        input: PathBuf,
        /// Game configuration (JSON).
        #[arg(long)]
        game: PathBuf,
        /// Number of turns to play.
        #[arg(long)]
        turns: Option<usize>,
        /// Seed for the controller's random draws.
        #[arg(long)]
        seed: Option<u64>,
        /// Seed for the adversary policy; defaults to seed + 1.
        #[arg(long)]
        policy_seed: Option<u64>,
        /// Random-value provider driving the controller.
        #[arg(long, value_enum, default_value = "uniform")]
        provider: ProviderKind,
        /// Leaf style when synthesizing from source.
        #[arg(long, value_enum, default_value = "random")]
        mode: LeafMode,
        /// Write the turn-by-turn trace as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Stream controller records as CSV for a fuzzing harness.
    ///
    /// Inputs must all be boolean. Each record reads one line of 0/1 flags
    /// from standard input when --feedback is given (missing lines read as
    /// all-false), steps the controller, and prints the input and output
    /// values. A closed pipe ends the stream cleanly.
    FuzzEmit {
        /// A witness dump or a contract source file.
        input: PathBuf,
        /// Number of records to emit.
        #[arg(long, default_value = "10000")]
        records: usize,
        /// Seed for the controller's random draws.
        #[arg(long, default_value = "0")]
        seed: u64,
        /// Read per-record input flags from standard input.
        #[arg(long)]
        feedback: bool,
        /// Leaf style when synthesizing from source.
        #[arg(long, value_enum, default_value = "random")]
        mode: LeafMode,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let solver = {
        let spec = cli
            .solver
            .or_else(|| std::env::var("RANDSYNTH_SOLVER").ok())
            .unwrap_or_else(|| "internal".into());
        let mut cfg = SolverConfig {
            backend: Backend::from_spec(&spec),
            ..SolverConfig::default()
        };
        if let Some(ms) = cli.timeout_ms {
            cfg.timeout_ms = ms;
        }
        Solver::new(cfg)
    };
    let synth_cfg = |mode: LeafMode| {
        let mut cfg = SynthConfig { mode: mode.into(), ..SynthConfig::default() };
        if let Some(cap) = cli.iter_cap {
            cfg.iter_cap = cap;
        }
        cfg
    };

    match cli.cmd {
        Cmd::Check { file } => {
            let contract = lustre::load(&fs::read_to_string(&file)?)?;
            match synthesize(&contract, &synth_cfg(LeafMode::Det), &solver) {
                Ok(SynthOutcome::Realizable { iterations, ae_calls, .. }) => {
                    println!(
                        "realizable: {} ({iterations} fixpoint iterations, {ae_calls} validity queries)",
                        contract.name
                    );
                    Ok(0)
                }
                Ok(SynthOutcome::Unrealizable { iterations, ae_calls, .. }) => {
                    println!(
                        "unrealizable: {} ({iterations} fixpoint iterations, {ae_calls} validity queries)",
                        contract.name
                    );
                    Ok(1)
                }
                Err(e) if e.exit_code() == 2 => {
                    println!("indeterminate: {e}");
                    Ok(2)
                }
                Err(e) => Err(e),
            }
        }

        Cmd::Synth { file, mode, out } => {
            let contract = lustre::load(&fs::read_to_string(&file)?)?;
            match synthesize(&contract, &synth_cfg(mode), &solver)? {
                SynthOutcome::Unrealizable { .. } => {
                    eprintln!("unrealizable: {} has no implementation", contract.name);
                    Ok(1)
                }
                outcome => {
                    let w = Witness::from_outcome(&contract, mode.into(), outcome)?;
                    let dump = write_witness(&w);
                    match out {
                        Some(path) => {
                            fs::write(&path, dump)?;
                            println!("wrote {}", path.display());
                        }
                        None => print!("{dump}"),
                    }
                    eprintln!(
                        "synthesized `{}`: {} branches",
                        contract.name,
                        w.tree.branches.len()
                    );
                    Ok(0)
                }
            }
        }

        Cmd::Codegen { input, target, mode, emit_randval, out_dir } => {
            let Some(w) = load_witness(&input, mode, &synth_cfg(mode), &solver)? else {
                return Ok(1);
            };
            fs::create_dir_all(&out_dir)?;
            let mut written = Vec::new();
            match target {
                TargetKind::C => {
                    let path = out_dir.join(witness_file_name(&w.contract));
                    fs::write(&path, emit_c(&w, &EmitConfig::c(w.contract.theory)))?;
                    written.push(path);
                    if emit_randval {
                        let h = out_dir.join("randval.h");
                        fs::write(&h, randval_header())?;
                        written.push(h);
                        let c = out_dir.join("randval.c");
                        fs::write(&c, emit_randval_default(w.contract.theory))?;
                        written.push(c);
                    }
                }
                TargetKind::Smtlib => {
                    let path = out_dir.join(format!("{}_witness.smt2", w.contract.name));
                    fs::write(&path, emit_smtlib(&w))?;
                    written.push(path);
                }
            }
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }

        Cmd::Simulate { input, game, turns, seed, policy_seed, provider, mode, csv } => {
            let Some(w) = load_witness(&input, mode, &synth_cfg(mode), &solver)? else {
                return Ok(1);
            };
            let cfg = parse_game_config(&fs::read_to_string(&game)?)?;
            let turns = turns.or(cfg.turns).unwrap_or(1000);
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let policy_seed = policy_seed.unwrap_or_else(|| seed.wrapping_add(1));
            let mut provider: Box<dyn RngProvider> = match provider {
                ProviderKind::Uniform => Box::new(UniformProvider::new(seed)),
                ProviderKind::BiasedLow => Box::new(BiasedProvider::toward_lower(seed)),
                ProviderKind::BiasedHigh => Box::new(BiasedProvider::toward_upper(seed)),
            };
            let trace = simulate_game(&w, &cfg, turns, provider.as_mut(), policy_seed)?;
            if let Some(path) = &csv {
                fs::write(path, trace.csv())?;
                println!("wrote {}", path.display());
            }
            let robot_integral = w
                .contract
                .lookup(&cfg.robot_vars.0)
                .map(|v| v.is_integral())
                .unwrap_or(true);
            let cells = arena_cells(&cfg.arena, robot_integral);
            let status = match trace.records.iter().find(|r| !r.ok) {
                Some(r) => format!("guarantee violated at turn {}", r.turn),
                None => "no violations".into(),
            };
            println!(
                "{} turns, {}/{} cells covered, {status}",
                trace.records.len(),
                trace.coverage.len(),
                cells
            );
            Ok(i32::from(trace.violation))
        }

        Cmd::FuzzEmit { input, records, seed, feedback, mode } => {
            let Some(w) = load_witness(&input, mode, &synth_cfg(mode), &solver)? else {
                return Ok(1);
            };
            let mut provider = UniformProvider::new(seed);
            let stdout = std::io::stdout();
            let mut sink = stdout.lock();
            let emitted = if feedback {
                let stdin = std::io::stdin();
                let mut lines = stdin.lock();
                fuzz_emit(&w, records, &mut provider, Some(&mut lines), &mut sink)?
            } else {
                fuzz_emit(&w, records, &mut provider, None, &mut sink)?
            };
            let _ = sink.flush();
            eprintln!("emitted {emitted} records");
            Ok(0)
        }
    }
}

/// Obtain a witness from either a dump file or a contract source file; `None`
/// (with a message) means the contract turned out unrealizable.
fn load_witness(
    path: &Path,
    mode: LeafMode,
    cfg: &SynthConfig,
    solver: &Solver,
) -> Result<Option<Witness>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with("(witness") {
        return Ok(Some(read_witness(&text)?));
    }
    let contract = lustre::load(&text)?;
    match synthesize(&contract, cfg, solver)? {
        SynthOutcome::Unrealizable { .. } => {
            eprintln!("unrealizable: {} has no implementation", contract.name);
            Ok(None)
        }
        outcome => Ok(Some(Witness::from_outcome(&contract, mode.into(), outcome)?)),
    }
}
