//! In-process execution of synthesized controllers: checked random draws,
//! single-step semantics, adversarial arena games with coverage metrics, and
//! a record emitter for fuzzing harnesses.
//!
//! All state and inputs are exact rationals; the interpreter evaluates the
//! contract formulas directly, so a passing run certifies the guarantees at
//! every step rather than sampling them.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixpoint::Witness;
use crate::logic::{Model, Rational, Sort, Var};
use crate::skolem::{Bound, LocalSkolem, UrngCall};
use crate::validity::Mode;

/// Values wider than this saturate a missing range end; it matches the
/// 32-bit carrier the generated C runs on.
const SATURATION: i64 = i32::MAX as i64;

/// How many failed draws the exclusion loop tolerates before switching to a
/// deterministic scan (mirrors the generated C).
const RESAMPLE_CAP: usize = 10_000;

// ---------------------------------------------------------------------------
// Random draws
// ---------------------------------------------------------------------------

/// A fully evaluated draw request: concrete bounds with their inclusivity,
/// concrete excluded points, and the sort of value wanted.
#[derive(Debug, Clone)]
pub struct DrawRequest {
    pub integral: bool,
    pub avoid: Vec<Rational>,
    /// Lower end of the range and whether it is inclusive; `None` is
    /// unbounded below.
    pub lower: Option<(Rational, bool)>,
    /// Upper end of the range and whether it is inclusive.
    pub upper: Option<(Rational, bool)>,
}

impl DrawRequest {
    /// The tightest integer at least as large as the lower end, honoring
    /// openness; `None` when unbounded.
    fn int_lower(&self) -> Option<BigInt> {
        self.lower.as_ref().map(|(q, closed)| {
            let c = q.ceil().to_integer();
            if *closed || &Rational::from_integer(c.clone()) != q {
                c
            } else {
                c + 1
            }
        })
    }

    fn int_upper(&self) -> Option<BigInt> {
        self.upper.as_ref().map(|(q, closed)| {
            let f = q.floor().to_integer();
            if *closed || &Rational::from_integer(f.clone()) != q {
                f
            } else {
                f - 1
            }
        })
    }

    /// Does any admissible value exist?
    fn satisfiable(&self) -> bool {
        if self.integral {
            let lo = self.int_lower();
            let hi = self.int_upper();
            match (lo, hi) {
                (Some(lo), Some(hi)) => {
                    if lo > hi {
                        return false;
                    }
                    let count = &hi - &lo + 1;
                    let excluded = self
                        .avoid
                        .iter()
                        .filter(|q| q.is_integer())
                        .map(|q| q.to_integer())
                        .filter(|n| *n >= lo && *n <= hi)
                        .collect::<BTreeSet<_>>()
                        .len();
                    count > BigInt::from(excluded)
                }
                // A half-open or free integer range is infinite.
                _ => true,
            }
        } else {
            match (&self.lower, &self.upper) {
                (Some((lo, lc)), Some((hi, uc))) => {
                    if lo > hi {
                        false
                    } else if lo == hi {
                        *lc && *uc && !self.avoid.contains(lo)
                    } else {
                        // An interval with interior has uncountably many
                        // points; finitely many exclusions cannot empty it.
                        true
                    }
                }
                _ => true,
            }
        }
    }

    fn admits(&self, v: &Rational) -> bool {
        if self.integral && !v.is_integer() {
            return false;
        }
        if let Some((b, closed)) = &self.lower {
            if v < b || (!closed && v == b) {
                return false;
            }
        }
        if let Some((b, closed)) = &self.upper {
            if v > b || (!closed && v == b) {
                return false;
            }
        }
        !self.avoid.contains(v)
    }
}

/// Source of random values for controller execution. Implementations may use
/// any distribution whose support is the full admissible set; the checked
/// wrapper enforces the range contract on every draw.
pub trait RngProvider {
    fn draw(&mut self, req: &DrawRequest) -> Rational;
}

/// Draw through a provider and enforce the range contract: the value must lie
/// within the bounds (respecting openness), miss every excluded point, and be
/// an integer for integral sorts. A failing provider is reported, not
/// tolerated.
pub fn checked_draw(provider: &mut dyn RngProvider, req: &DrawRequest) -> Result<Rational> {
    if !req.satisfiable() {
        return Err(Error::Internal(
            "synthesized draw has an empty admissible set".into(),
        ));
    }
    let v = provider.draw(req);
    if !req.admits(&v) {
        return Err(Error::RngContract(format!(
            "provider returned {v}, outside the requested range"
        )));
    }
    Ok(v)
}

/// The default provider: uniform over the admissible set. Integer ranges are
/// normalized to closed form and drawn uniformly; real ranges are drawn on a
/// uniform 2^-32 grid spanning the range, with open ends stepped one grid
/// cell inward. Excluded points are resampled away, with a deterministic
/// scan after [`RESAMPLE_CAP`] misses.
pub struct UniformProvider {
    rng: ChaCha8Rng,
}

impl UniformProvider {
    pub fn new(seed: u64) -> UniformProvider {
        UniformProvider { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn draw_int(&mut self, req: &DrawRequest) -> Rational {
        let clamp = |n: BigInt| n.to_i64().unwrap_or(SATURATION).clamp(-SATURATION, SATURATION);
        let lo = req.int_lower().map_or(-SATURATION, clamp);
        let hi = req.int_upper().map_or(SATURATION, clamp);
        let hi = hi.max(lo);
        let hit = |v: i64, req: &DrawRequest| {
            let q = Rational::from_integer(v.into());
            req.avoid.contains(&q)
        };
        let mut v = self.rng.gen_range(lo..=hi);
        let mut tries = 0;
        while hit(v, req) && tries < RESAMPLE_CAP {
            v = self.rng.gen_range(lo..=hi);
            tries += 1;
        }
        if hit(v, req) {
            v = (lo..=hi).find(|c| !hit(*c, req)).unwrap_or(lo);
        }
        Rational::from_integer(v.into())
    }

    fn draw_real(&mut self, req: &DrawRequest) -> Rational {
        // A power-of-two grid keeps draws over decimal bounds exactly
        // representable in decimal, which the CSV emitters rely on.
        let cells = 1u64 << 32;
        let grid = Rational::from_integer(BigInt::from(cells));
        let sat = Rational::from_integer(SATURATION.into());
        let (lo_raw, lo_closed) = req
            .lower
            .clone()
            .unwrap_or((-sat.clone(), true));
        let (hi_raw, hi_closed) = req.upper.clone().unwrap_or((sat, true));
        let step = (&hi_raw - &lo_raw) / &grid;
        let lo = if lo_closed { lo_raw } else { lo_raw + &step };
        let hi = if hi_closed { hi_raw } else { hi_raw - &step };
        if hi <= lo {
            return lo;
        }
        let unit = (&hi - &lo) / &grid;
        let pick = |rng: &mut ChaCha8Rng| {
            // Inclusive on both ends, so closed bounds are attainable.
            let k = Rational::from_integer(BigInt::from(rng.gen_range(0..=cells)));
            &lo + (&hi - &lo) * k / &grid
        };
        let mut v = pick(&mut self.rng);
        let mut tries = 0;
        while req.avoid.contains(&v) && tries < RESAMPLE_CAP {
            v = pick(&mut self.rng);
            tries += 1;
        }
        if req.avoid.contains(&v) {
            // Walk the grid from the low end; the exclusion set is finite.
            let mut k = BigInt::zero();
            loop {
                let c = &lo + &unit * Rational::from_integer(k.clone());
                if !req.avoid.contains(&c) && c <= hi {
                    return c;
                }
                k += 1;
            }
        }
        v
    }
}

impl RngProvider for UniformProvider {
    fn draw(&mut self, req: &DrawRequest) -> Rational {
        if req.integral {
            self.draw_int(req)
        } else {
            self.draw_real(req)
        }
    }
}

/// A compliant but biased provider: it draws twice through the uniform
/// provider and keeps the extremum, skewing mass toward one end of every
/// range while leaving the full admissible set reachable.
pub struct BiasedProvider {
    inner: UniformProvider,
    toward_upper: bool,
}

impl BiasedProvider {
    pub fn toward_lower(seed: u64) -> BiasedProvider {
        BiasedProvider { inner: UniformProvider::new(seed), toward_upper: false }
    }

    pub fn toward_upper(seed: u64) -> BiasedProvider {
        BiasedProvider { inner: UniformProvider::new(seed), toward_upper: true }
    }
}

impl RngProvider for BiasedProvider {
    fn draw(&mut self, req: &DrawRequest) -> Rational {
        let a = self.inner.draw(req);
        let b = self.inner.draw(req);
        match (self.toward_upper, a > b) {
            (true, true) | (false, false) => a,
            _ => b,
        }
    }
}

// ---------------------------------------------------------------------------
// Single-step execution
// ---------------------------------------------------------------------------

fn merged(state: &Model, input: &Model) -> Model {
    let mut env = Model::new();
    for (v, q) in state.iter() {
        env.set(v.clone(), q.clone());
    }
    for (v, q) in input.iter() {
        env.set(v.clone(), q.clone());
    }
    env
}

/// Does the environment input satisfy the contract assumptions in this state?
pub fn admissible(w: &Witness, state: &Model, input: &Model) -> Result<bool> {
    w.contract.assumptions.holds(&merged(state, input))
}

fn eval_bound(b: &Bound, env: &Model) -> Result<Option<(Rational, bool)>> {
    match &b.term {
        None => Ok(None),
        Some(t) => Ok(Some((t.eval(env)?, b.closed.holds(env)?))),
    }
}

fn eval_rule(
    rule: &LocalSkolem,
    env: &Model,
    rng: &mut dyn RngProvider,
) -> Result<Rational> {
    match rule {
        LocalSkolem::Assign(t) => t.eval(env),
        LocalSkolem::GuardedPair { cond, when_true, when_false } => {
            if cond.holds(env)? {
                eval_rule(when_true, env, rng)
            } else {
                eval_rule(when_false, env, rng)
            }
        }
        LocalSkolem::Urng(call) => {
            let req = draw_request(call, env)?;
            checked_draw(rng, &req)
        }
    }
}

fn draw_request(call: &UrngCall, env: &Model) -> Result<DrawRequest> {
    Ok(DrawRequest {
        integral: call.var.is_integral(),
        avoid: call
            .avoid
            .iter()
            .map(|t| t.eval(env))
            .collect::<Result<Vec<_>>>()?,
        lower: eval_bound(&call.lower, env)?,
        upper: eval_bound(&call.upper, env)?,
    })
}

/// Pick the branch to execute: all true guards are collected, deterministic
/// runs take the first and random runs draw uniformly among them. When no
/// guard holds (possible only outside the synthesized region, but mirrored
/// from the generated C for parity) the final branch acts as the `else` arm.
fn select_branch(
    w: &Witness,
    env: &Model,
    rng: &mut dyn RngProvider,
) -> Result<usize> {
    let branches = &w.tree.branches;
    if branches.is_empty() {
        return Err(Error::Internal("witness tree has no branches".into()));
    }
    let mut live = Vec::new();
    for (i, b) in branches.iter().enumerate() {
        let mut all = true;
        for l in &b.guard {
            if !l.holds(env)? {
                all = false;
                break;
            }
        }
        if all {
            live.push(i);
        }
    }
    match (w.mode, live.len()) {
        (_, 0) => Ok(branches.len() - 1),
        (Mode::Deterministic, _) => Ok(live[0]),
        (Mode::Random, 1) => Ok(live[0]),
        (Mode::Random, n) => {
            let req = DrawRequest {
                integral: true,
                avoid: vec![],
                lower: Some((Rational::zero(), true)),
                upper: Some((Rational::from_integer(((n - 1) as i64).into()), true)),
            };
            let k = checked_draw(rng, &req)?
                .to_integer()
                .to_usize()
                .ok_or_else(|| Error::Internal("branch selector out of range".into()))?;
            Ok(live[k])
        }
    }
}

/// Execute one reaction of the synthesized controller.
///
/// The input is checked against the contract assumptions and the state
/// against the synthesized invariant before anything runs; afterwards the
/// transition guarantee and the invariant are re-evaluated on the produced
/// state, so a successful step is a certified step. Returns the next state
/// (a model over the contract outputs).
pub fn step(
    w: &Witness,
    state: &Model,
    input: &Model,
    rng: &mut dyn RngProvider,
) -> Result<Model> {
    for v in &w.contract.inputs {
        if !input.contains(v) {
            return Err(Error::Violation(format!("missing input value for {}", v.name)));
        }
    }
    for v in &w.contract.outputs {
        if !state.contains(v) {
            return Err(Error::Violation(format!("missing state value for {}", v.name)));
        }
    }
    let mut env = merged(state, input);
    if !w.contract.assumptions.holds(&env)? {
        return Err(Error::Violation(
            "input violates the contract assumptions".into(),
        ));
    }
    if !w.fixpoint.holds(&env)? {
        return Err(Error::Violation(
            "state lies outside the synthesized winning region".into(),
        ));
    }

    let branch = select_branch(w, &env, rng)?;
    for (v, rule) in &w.tree.branches[branch].updates {
        let value = eval_rule(rule, &env, rng)?;
        env.set(v.clone(), value);
    }

    if !w.contract.transition.holds(&env)? {
        return Err(Error::Violation(
            "synthesized update violates the transition guarantee".into(),
        ));
    }
    let mut next = Model::new();
    for v in &w.contract.outputs {
        let q = env.value(&v.primed())?.clone();
        next.set(v.clone(), q);
    }
    if !w.fixpoint.holds(&merged(&next, input))? {
        return Err(Error::Violation(
            "synthesized update leaves the winning region".into(),
        ));
    }
    Ok(next)
}

/// The initial state recorded in the witness; outputs the initial-state
/// formula leaves unconstrained default to zero.
pub fn initial_state(w: &Witness) -> Model {
    let mut state = Model::new();
    for v in &w.contract.outputs {
        let q = w.init.get(v).cloned().unwrap_or_else(Rational::zero);
        state.set(v.clone(), q);
    }
    state
}

// ---------------------------------------------------------------------------
// Arena games
// ---------------------------------------------------------------------------

/// Rectangular playing field.
#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub xmin: Rational,
    pub ymin: Rational,
    pub xmax: Rational,
    pub ymax: Rational,
}

/// How the adversary moves.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Cycle through fixed waypoints, moving at most `delta` per axis per
    /// turn (the waypoint advances once it is reached exactly).
    Patrol { waypoints: Vec<(Rational, Rational)> },
    /// Move toward the robot: each axis steps a uniform amount in
    /// `[0, delta]` toward the robot's coordinate, never overshooting it.
    Chaser,
}

/// An adversarial two-player arena run.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub arena: Arena,
    /// Per-axis speed limit of the adversary.
    pub delta: Rational,
    /// Robot start; defaults to the witness's initial state.
    pub robot_start: Option<(Rational, Rational)>,
    pub adversary_start: (Rational, Rational),
    pub policy: Policy,
    /// Contract output names holding the robot position.
    pub robot_vars: (String, String),
    /// Contract input names receiving the adversary's per-axis move.
    pub adversary_inputs: (String, String),
    /// Default turn count; a driver flag overrides it.
    pub turns: Option<usize>,
    /// Default seed; a driver flag overrides it.
    pub seed: Option<u64>,
}

/// One line of a run: positions after the turn resolved and whether every
/// guarantee held.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnRecord {
    pub turn: usize,
    pub rx: Rational,
    pub ry: Rational,
    pub ax: Rational,
    pub ay: Rational,
    pub ok: bool,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub records: Vec<TurnRecord>,
    /// Unit cells the robot visited (integer positions are their own cells;
    /// real positions fall into the unit cell of their floor).
    pub coverage: BTreeSet<(i64, i64)>,
    /// True when a guarantee failed; the run stops at the failing turn.
    pub violation: bool,
}

/// Exact decimal rendering of a rational when the denominator divides a
/// power of ten; falls back to `p/q`.
fn decimal(q: &Rational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
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
    if !den.is_one() {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let digits = twos.max(fives);
    let scale = BigInt::from(2).pow(digits - twos) * BigInt::from(5).pow(digits - fives);
    let scaled = (q.numer() * scale).magnitude().to_string();
    let digits = digits as usize;
    let pad = format!("{scaled:0>width$}", width = digits + 1);
    let (ip, fp) = pad.split_at(pad.len() - digits);
    let sign = if q.is_negative() { "-" } else { "" };
    format!("{sign}{ip}.{fp}")
}

impl RunTrace {
    /// Render as CSV with header `turn,rx,ry,ax,ay,ok`; `ok` is 1 or 0.
    pub fn csv(&self) -> String {
        let mut out = String::from("turn,rx,ry,ax,ay,ok\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.turn,
                decimal(&r.rx),
                decimal(&r.ry),
                decimal(&r.ax),
                decimal(&r.ay),
                u8::from(r.ok)
            ));
        }
        out
    }
}

/// Number of coverage cells the arena offers: one per integer position for
/// integer-valued robots, one per unit square for real-valued robots.
pub fn arena_cells(arena: &Arena, integral: bool) -> u64 {
    let span = |lo: &Rational, hi: &Rational| -> u64 {
        let cells = if integral {
            (hi.floor() - lo.ceil()).to_integer() + 1
        } else {
            hi.ceil().to_integer() - lo.floor().to_integer()
        };
        cells.max(BigInt::one()).to_u64().unwrap_or(1)
    };
    span(&arena.xmin, &arena.xmax) * span(&arena.ymin, &arena.ymax)
}

fn cell_of(x: &Rational, y: &Rational, arena: &Arena, integral: bool) -> (i64, i64) {
    let axis = |q: &Rational, lo: &Rational, hi: &Rational| -> i64 {
        let cell = q.floor().to_integer().to_i64().unwrap_or(0);
        let min = lo.floor().to_integer().to_i64().unwrap_or(0);
        let max = if integral {
            hi.floor().to_integer().to_i64().unwrap_or(0)
        } else {
            hi.ceil().to_integer().to_i64().unwrap_or(0) - 1
        };
        cell.clamp(min, max.max(min))
    };
    (
        axis(x, &arena.xmin, &arena.xmax),
        axis(y, &arena.ymin, &arena.ymax),
    )
}

struct Adversary {
    pos: (Rational, Rational),
    policy: Policy,
    waypoint: usize,
    delta: Rational,
    rng: ChaCha8Rng,
    integral: bool,
}

impl Adversary {
    /// Compute this turn's move (dx, dy) and advance the adversary.
    fn advance(&mut self, robot: &(Rational, Rational), arena: &Arena) -> (Rational, Rational) {
        let step = match &self.policy {
            Policy::Patrol { waypoints } => {
                if waypoints.is_empty() {
                    (Rational::zero(), Rational::zero())
                } else {
                    if self.pos == waypoints[self.waypoint % waypoints.len()] {
                        self.waypoint = (self.waypoint + 1) % waypoints.len();
                    }
                    let target = &waypoints[self.waypoint % waypoints.len()];
                    (
                        toward(&self.pos.0, &target.0, &self.delta),
                        toward(&self.pos.1, &target.1, &self.delta),
                    )
                }
            }
            Policy::Chaser => {
                let mag_x = self.draw_magnitude();
                let mag_y = self.draw_magnitude();
                (
                    toward(&self.pos.0, &robot.0, &mag_x),
                    toward(&self.pos.1, &robot.1, &mag_y),
                )
            }
        };
        // Stay inside the arena (a move toward an in-arena target already
        // is, but clip defensively so the contract assumptions hold).
        let nx = (&self.pos.0 + &step.0).clamp(arena.xmin.clone(), arena.xmax.clone());
        let ny = (&self.pos.1 + &step.1).clamp(arena.ymin.clone(), arena.ymax.clone());
        let mv = (&nx - &self.pos.0, &ny - &self.pos.1);
        self.pos = (nx, ny);
        mv
    }

    /// A uniform magnitude in [0, delta]: integer-valued for integer games,
    /// on a 2^32 grid otherwise.
    fn draw_magnitude(&mut self) -> Rational {
        if self.integral {
            let d = self.delta.to_integer().to_i64().unwrap_or(0).max(0);
            Rational::from_integer(self.rng.gen_range(0..=d).into())
        } else {
            let k = Rational::from_integer(BigInt::from(self.rng.gen::<u32>()));
            let cells = Rational::from_integer(BigInt::from(u32::MAX));
            &self.delta * k / cells
        }
    }
}

/// Per-axis step from `from` toward `to`, at most `limit` in magnitude and
/// never overshooting.
fn toward(from: &Rational, to: &Rational, limit: &Rational) -> Rational {
    let dist = to - from;
    let mag = dist.abs().min(limit.abs());
    if dist.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Play an arena game: the adversary moves first each turn (per its policy),
/// its move is fed to the controller as the contract input, and the
/// controller's step is checked against the guarantees. The run stops at the
/// first violated guarantee with the violation flagged in the trace; an
/// adversary move the contract assumptions reject is a configuration error
/// and reported as such.
pub fn simulate_game(
    w: &Witness,
    cfg: &GameConfig,
    turns: usize,
    provider: &mut dyn RngProvider,
    policy_seed: u64,
) -> Result<RunTrace> {
    let lookup_out = |name: &str| -> Result<Var> {
        w.contract
            .outputs
            .iter()
            .find(|v| v.name.as_ref() == name)
            .cloned()
            .ok_or_else(|| Error::Violation(format!("contract has no output named {name}")))
    };
    let lookup_in = |name: &str| -> Result<Var> {
        w.contract
            .inputs
            .iter()
            .find(|v| v.name.as_ref() == name)
            .cloned()
            .ok_or_else(|| Error::Violation(format!("contract has no input named {name}")))
    };
    let rx = lookup_out(&cfg.robot_vars.0)?;
    let ry = lookup_out(&cfg.robot_vars.1)?;
    let dx = lookup_in(&cfg.adversary_inputs.0)?;
    let dy = lookup_in(&cfg.adversary_inputs.1)?;
    let integral = rx.is_integral();

    let mut state = initial_state(w);
    if let Some((x, y)) = &cfg.robot_start {
        state.set(rx.clone(), x.clone());
        state.set(ry.clone(), y.clone());
    }
    let robot_pos = |state: &Model| -> Result<(Rational, Rational)> {
        Ok((state.value(&rx)?.clone(), state.value(&ry)?.clone()))
    };
    let mut robot = robot_pos(&state)?;
    if robot == cfg.adversary_start {
        return Err(Error::Violation(
            "robot and adversary must start on distinct positions".into(),
        ));
    }

    let mut adversary = Adversary {
        pos: cfg.adversary_start.clone(),
        policy: cfg.policy.clone(),
        waypoint: 0,
        delta: cfg.delta.clone(),
        rng: ChaCha8Rng::seed_from_u64(policy_seed),
        integral,
    };

    let mut trace = RunTrace::default();
    trace
        .coverage
        .insert(cell_of(&robot.0, &robot.1, &cfg.arena, integral));

    for turn in 1..=turns {
        let (mx, my) = adversary.advance(&robot, &cfg.arena);
        let mut input = Model::new();
        input.set(dx.clone(), mx);
        input.set(dy.clone(), my);
        if !admissible(w, &state, &input)? {
            return Err(Error::Violation(
                "adversary move violates the contract assumptions; check the game configuration"
                    .into(),
            ));
        }
        match step(w, &state, &input, provider) {
            Ok(next) => {
                state = next;
                robot = robot_pos(&state)?;
                trace
                    .coverage
                    .insert(cell_of(&robot.0, &robot.1, &cfg.arena, integral));
                trace.records.push(TurnRecord {
                    turn,
                    rx: robot.0.clone(),
                    ry: robot.1.clone(),
                    ax: adversary.pos.0.clone(),
                    ay: adversary.pos.1.clone(),
                    ok: true,
                });
            }
            Err(Error::Violation(_) | Error::RngContract(_)) => {
                trace.records.push(TurnRecord {
                    turn,
                    rx: robot.0.clone(),
                    ry: robot.1.clone(),
                    ax: adversary.pos.0.clone(),
                    ay: adversary.pos.1.clone(),
                    ok: false,
                });
                trace.violation = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Game configuration files
// ---------------------------------------------------------------------------

/// Parse a decimal JSON number exactly (the file format forbids exponents so
/// configurations stay exact).
fn exact_number(v: &serde_json::Value, what: &str) -> Result<Rational> {
    let serde_json::Value::Number(n) = v else {
        return Err(Error::Parse {
            line: 0,
            col: 0,
            msg: format!("{what} must be a number"),
        });
    };
    let text = n.to_string();
    parse_decimal(&text).ok_or_else(|| Error::Parse {
        line: 0,
        col: 0,
        msg: format!("{what}: `{text}` is not a plain decimal"),
    })
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (sign, rest) = match text.strip_prefix('-') {
        Some(r) => (-1, r),
        None => (1, text),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = BigInt::from(10).pow(frac_part.len() as u32);
    Some(Rational::new(numer * sign, denom))
}

fn exact_pair(v: &serde_json::Value, what: &str) -> Result<(Rational, Rational)> {
    let err = || Error::Parse {
        line: 0,
        col: 0,
        msg: format!("{what} must be a two-element number array"),
    };
    let arr = v.as_array().ok_or_else(err)?;
    let [x, y] = arr.as_slice() else {
        return Err(err());
    };
    Ok((exact_number(x, what)?, exact_number(y, what)?))
}

fn name_pair(v: &serde_json::Value, what: &str) -> Result<(String, String)> {
    let err = || Error::Parse {
        line: 0,
        col: 0,
        msg: format!("{what} must be a two-element string array"),
    };
    let arr = v.as_array().ok_or_else(err)?;
    let [x, y] = arr.as_slice() else {
        return Err(err());
    };
    match (x.as_str(), y.as_str()) {
        (Some(x), Some(y)) => Ok((x.to_string(), y.to_string())),
        _ => Err(err()),
    }
}

/// Read a game configuration from JSON. The schema:
///
/// ```json
/// {
///   "arena": {"xmin": 0, "ymin": 0, "xmax": 6, "ymax": 6},
///   "delta": 1,
///   "robot_start": [0, 0],
///   "adversary_start": [6, 6],
///   "policy": "chaser",
///   "robot_vars": ["rx", "ry"],
///   "adversary_inputs": ["dx", "dy"],
///   "turns": 1000,
///   "seed": 7
/// }
/// ```
///
/// `policy` may instead be `{"patrol": [[0.8, 0.8], [4.2, 0.8], ...]}`.
/// `robot_start`, `turns`, and `seed` are optional; numbers are parsed as
/// exact decimals, so `0.1` means one tenth, not its nearest double.
pub fn parse_game_config(json: &str) -> Result<GameConfig> {
    let perr = |msg: String| Error::Parse { line: 0, col: 0, msg };
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| perr(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| perr("the configuration must be a JSON object".into()))?;
    let get = |key: &str| -> Result<&serde_json::Value> {
        obj.get(key)
            .ok_or_else(|| perr(format!("missing required key `{key}`")))
    };

    let arena_v = get("arena")?
        .as_object()
        .ok_or_else(|| perr("`arena` must be an object".into()))?;
    let corner = |key: &str| -> Result<Rational> {
        exact_number(
            arena_v
                .get(key)
                .ok_or_else(|| perr(format!("`arena` is missing `{key}`")))?,
            key,
        )
    };
    let arena = Arena {
        xmin: corner("xmin")?,
        ymin: corner("ymin")?,
        xmax: corner("xmax")?,
        ymax: corner("ymax")?,
    };
    if arena.xmin >= arena.xmax || arena.ymin >= arena.ymax {
        return Err(perr("`arena` must have positive extent".into()));
    }

    let policy = match get("policy")? {
        serde_json::Value::String(s) if s == "chaser" => Policy::Chaser,
        serde_json::Value::Object(o) => {
            let pts = o
                .get("patrol")
                .and_then(|p| p.as_array())
                .ok_or_else(|| perr("`policy` object must hold a `patrol` array".into()))?;
            let waypoints = pts
                .iter()
                .map(|p| exact_pair(p, "patrol waypoint"))
                .collect::<Result<Vec<_>>>()?;
            if waypoints.is_empty() {
                return Err(perr("`patrol` needs at least one waypoint".into()));
            }
            Policy::Patrol { waypoints }
        }
        _ => return Err(perr("`policy` must be \"chaser\" or {\"patrol\": [...]}".into())),
    };

    let usize_field = |key: &str| -> Result<Option<usize>> {
        match obj.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|n| Some(n as usize))
                .ok_or_else(|| perr(format!("`{key}` must be a non-negative integer"))),
        }
    };

    let delta = exact_number(get("delta")?, "delta")?;
    if !delta.is_positive() {
        return Err(perr("`delta` must be positive".into()));
    }

    Ok(GameConfig {
        arena,
        delta,
        robot_start: match obj.get("robot_start") {
            None => None,
            Some(v) => Some(exact_pair(v, "robot_start")?),
        },
        adversary_start: exact_pair(get("adversary_start")?, "adversary_start")?,
        policy,
        robot_vars: match obj.get("robot_vars") {
            None => ("rx".into(), "ry".into()),
            Some(v) => name_pair(v, "robot_vars")?,
        },
        adversary_inputs: match obj.get("adversary_inputs") {
            None => ("dx".into(), "dy".into()),
            Some(v) => name_pair(v, "adversary_inputs")?,
        },
        turns: usize_field("turns")?,
        seed: match obj.get("seed") {
            None => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| perr("`seed` must be a non-negative integer".into()))?,
            ),
        },
    })
}

// ---------------------------------------------------------------------------
// Fuzz-record emission
// ---------------------------------------------------------------------------

/// Drive the controller as a record generator for a fuzzing harness.
///
/// Every record reads the boolean inputs from the feedback source (one
/// whitespace-separated line of 0/1 per record; a missing source or an
/// exhausted one reads as all-false), steps the controller, and writes one
/// CSV line of input and output values to the sink. A sink that closes
/// (broken pipe) stops the run cleanly. Returns the number of records
/// written.
pub fn fuzz_emit(
    w: &Witness,
    records: usize,
    provider: &mut dyn RngProvider,
    mut feedback: Option<&mut dyn BufRead>,
    sink: &mut dyn Write,
) -> Result<usize> {
    for v in &w.contract.inputs {
        if v.sort != Sort::Bool {
            return Err(Error::Unsupported(format!(
                "fuzz emission needs boolean inputs, but {} is numeric",
                v.name
            )));
        }
    }
    let header: Vec<&str> = w
        .contract
        .inputs
        .iter()
        .chain(&w.contract.outputs)
        .map(|v| v.name.as_ref())
        .collect();
    let closed = |e: &std::io::Error| e.kind() == std::io::ErrorKind::BrokenPipe;
    if let Err(e) = writeln!(sink, "{}", header.join(",")) {
        return if closed(&e) { Ok(0) } else { Err(e.into()) };
    }

    let mut state = initial_state(w);
    for i in 0..records {
        let flags = match feedback.as_deref_mut() {
            None => Vec::new(),
            Some(reader) => {
                let mut line = String::new();
                reader.read_line(&mut line)?;
                line.split_whitespace()
                    .map(|tok| matches!(tok, "1" | "true"))
                    .collect()
            }
        };
        let mut input = Model::new();
        for (k, v) in w.contract.inputs.iter().enumerate() {
            let bit = flags.get(k).copied().unwrap_or(false);
            input.set(v.clone(), Rational::from_integer(i64::from(bit).into()));
        }
        if !admissible(w, &state, &input)? {
            return Err(Error::Violation(
                "feedback input violates the contract assumptions".into(),
            ));
        }
        state = step(w, &state, &input, provider)?;
        let mut row: Vec<String> = w
            .contract
            .inputs
            .iter()
            .map(|v| decimal(input.value(v).expect("input was just populated")))
            .collect();
        for v in &w.contract.outputs {
            row.push(decimal(state.value(v)?));
        }
        if let Err(e) = writeln!(sink, "{}", row.join(",")) {
            return if closed(&e) { Ok(i) } else { Err(e.into()) };
        }
    }
    let _ = sink.flush();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Contract, Formula, LinearTerm, Literal, RelOp, Theory, VarRole};
    use crate::lustre;
    use crate::solver::Solver;
    use crate::validity::{Branch, SkolemTree};
    use crate::{synthesize, SynthConfig};

    const ONEDIM: &str = "\
node onedim(x, y : int) returns ();
var
  ok1, ok2 : bool;
  position : int;
let
  assert x >= -1 and x <= 1;
  position = 0 -> (pre(position) + x + y);
  ok1 = y >= -1 and y <= 1;
  ok2 = position >= 0;
  --%PROPERTY ok1;
  --%PROPERTY ok2;
  --%REALIZABLE x;
tel;
";

    fn rat(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn frac(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn req(lo: i64, hi: i64, avoid: &[i64]) -> DrawRequest {
        DrawRequest {
            integral: true,
            avoid: avoid.iter().map(|&n| rat(n)).collect(),
            lower: Some((rat(lo), true)),
            upper: Some((rat(hi), true)),
        }
    }

    fn onedim_witness(mode: Mode) -> Witness {
        let contract = lustre::load(ONEDIM).unwrap();
        let solver = Solver::new(Default::default());
        let cfg = SynthConfig { mode, ..SynthConfig::default() };
        let outcome = synthesize(&contract, &cfg, &solver).unwrap();
        Witness::from_outcome(&contract, mode, outcome).unwrap()
    }

    fn state_of(w: &Witness, pairs: &[(&str, i64)]) -> Model {
        let mut m = Model::new();
        for (name, value) in pairs {
            let v = w.contract.lookup(name).unwrap().clone();
            m.set(v, rat(*value));
        }
        m
    }

    // -- draws -------------------------------------------------------------

    #[test]
    fn closed_integer_draws_cover_exactly_the_range() {
        let mut rng = UniformProvider::new(1);
        let r = req(-1, 1, &[]);
        let mut seen = BTreeSet::new();
        for _ in 0..300 {
            seen.insert(checked_draw(&mut rng, &r).unwrap());
        }
        assert_eq!(seen, [rat(-1), rat(0), rat(1)].into_iter().collect());
    }

    #[test]
    fn open_bounds_step_inward() {
        let mut rng = UniformProvider::new(2);
        let open_int = DrawRequest {
            integral: true,
            avoid: vec![],
            lower: Some((rat(0), false)),
            upper: Some((rat(2), false)),
        };
        for _ in 0..50 {
            assert_eq!(checked_draw(&mut rng, &open_int).unwrap(), rat(1));
        }
        let open_real = DrawRequest {
            integral: false,
            avoid: vec![],
            lower: Some((rat(0), false)),
            upper: Some((rat(1), false)),
        };
        for _ in 0..200 {
            let v = checked_draw(&mut rng, &open_real).unwrap();
            assert!(v > rat(0) && v < rat(1), "strictly inside: {v}");
        }
    }

    #[test]
    fn exclusions_are_resampled_away() {
        let mut rng = UniformProvider::new(3);
        let r = req(0, 3, &[1, 2]);
        for _ in 0..100 {
            let v = checked_draw(&mut rng, &r).unwrap();
            assert!(v == rat(0) || v == rat(3), "got {v}");
        }
        // The pinched-with-exclusion case still finds its one value.
        let only = req(0, 1, &[0]);
        for _ in 0..20 {
            assert_eq!(checked_draw(&mut rng, &only).unwrap(), rat(1));
        }
    }

    #[test]
    fn a_lying_provider_is_caught() {
        struct Liar;
        impl RngProvider for Liar {
            fn draw(&mut self, _: &DrawRequest) -> Rational {
                Rational::from_integer(5.into())
            }
        }
        let err = checked_draw(&mut Liar, &req(0, 1, &[])).unwrap_err();
        assert!(matches!(err, Error::RngContract(_)));

        struct HalfStep;
        impl RngProvider for HalfStep {
            fn draw(&mut self, _: &DrawRequest) -> Rational {
                Rational::new(1.into(), 2.into())
            }
        }
        let err = checked_draw(&mut HalfStep, &req(0, 1, &[])).unwrap_err();
        assert!(matches!(err, Error::RngContract(_)));
    }

    #[test]
    fn impossible_requests_are_rejected_before_drawing() {
        let mut rng = UniformProvider::new(4);
        assert!(checked_draw(&mut rng, &req(1, 0, &[])).is_err());
        assert!(checked_draw(&mut rng, &req(0, 1, &[0, 1])).is_err());
        let pinched_open = DrawRequest {
            integral: false,
            avoid: vec![],
            lower: Some((rat(1), true)),
            upper: Some((rat(1), false)),
        };
        assert!(checked_draw(&mut rng, &pinched_open).is_err());
    }

    #[test]
    fn biased_providers_stay_inside_the_range_and_skew() {
        let r = req(0, 9, &[]);
        let mut low = BiasedProvider::toward_lower(5);
        let mut high = BiasedProvider::toward_upper(5);
        let (mut sum_low, mut sum_high) = (rat(0), rat(0));
        for _ in 0..300 {
            sum_low += checked_draw(&mut low, &r).unwrap();
            sum_high += checked_draw(&mut high, &r).unwrap();
        }
        assert!(sum_low < sum_high, "min-of-two must sit below max-of-two");
    }

    // -- single steps -------------------------------------------------------

    #[test]
    fn the_corridor_controller_draws_every_admissible_reply() {
        let w = onedim_witness(Mode::Random);
        let mut rng = UniformProvider::new(7);
        let state = state_of(&w, &[("position", 1), ("y", 0)]);
        let input = state_of(&w, &[("x", 0)]);
        let mut seen = BTreeSet::new();
        for _ in 0..1000 {
            let next = step(&w, &state, &input, &mut rng).unwrap();
            seen.insert(next.value(w.contract.lookup("y").unwrap()).unwrap().clone());
        }
        assert_eq!(seen, [rat(-1), rat(0), rat(1)].into_iter().collect());
    }

    #[test]
    fn a_forced_position_leaves_no_choice() {
        let w = onedim_witness(Mode::Random);
        let mut rng = UniformProvider::new(8);
        let state = state_of(&w, &[("position", 0), ("y", 0)]);
        let input = state_of(&w, &[("x", -1)]);
        for _ in 0..10 {
            let next = step(&w, &state, &input, &mut rng).unwrap();
            assert_eq!(next.value(w.contract.lookup("y").unwrap()).unwrap(), &rat(1));
            assert_eq!(
                next.value(w.contract.lookup("position").unwrap()).unwrap(),
                &rat(0)
            );
        }
    }

    #[test]
    fn deterministic_mode_repeats_itself() {
        let w = onedim_witness(Mode::Deterministic);
        let state = state_of(&w, &[("position", 3), ("y", 0)]);
        let input = state_of(&w, &[("x", 1)]);
        let mut first = None;
        for seed in 0..5 {
            let mut rng = UniformProvider::new(seed);
            let next = step(&w, &state, &input, &mut rng).unwrap();
            let y = next.value(w.contract.lookup("y").unwrap()).unwrap().clone();
            match &first {
                None => first = Some(y),
                Some(prev) => assert_eq!(&y, prev),
            }
        }
    }

    #[test]
    fn bad_inputs_and_bad_states_are_refused() {
        let w = onedim_witness(Mode::Random);
        let mut rng = UniformProvider::new(9);
        let state = state_of(&w, &[("position", 1), ("y", 0)]);
        let wild = state_of(&w, &[("x", 5)]);
        assert!(!admissible(&w, &state, &wild).unwrap());
        assert!(matches!(step(&w, &state, &wild, &mut rng), Err(Error::Violation(_))));

        let lost = state_of(&w, &[("position", -3), ("y", 0)]);
        let ok = state_of(&w, &[("x", 0)]);
        assert!(matches!(step(&w, &lost, &ok, &mut rng), Err(Error::Violation(_))));
    }

    #[test]
    fn a_single_assign_leaf_is_deterministic() {
        let x = Var::new("x", Sort::Int, VarRole::Input);
        let y = Var::new("y", Sort::Int, VarRole::Output);
        let contract = Contract {
            name: "hold".into(),
            theory: Theory::Lia,
            inputs: vec![x.clone()],
            outputs: vec![y.clone()],
            assumptions: Formula::True,
            initial: Formula::True,
            transition: Formula::cmp(LinearTerm::var(&y.primed()), RelOp::Eq, LinearTerm::zero()),
        };
        let mut init = Model::new();
        init.set(y.clone(), rat(0));
        let w = Witness {
            contract,
            mode: Mode::Random,
            fixpoint: Formula::True,
            init,
            tree: SkolemTree {
                branches: vec![Branch {
                    guard: vec![],
                    updates: vec![(y.primed(), LocalSkolem::Assign(LinearTerm::zero()))],
                }],
            },
        };
        let mut rng = UniformProvider::new(1);
        let state = initial_state(&w);
        let mut input = Model::new();
        input.set(x, rat(0));
        let next = step(&w, &state, &input, &mut rng).unwrap();
        assert_eq!(next.value(&y).unwrap(), &rat(0));
    }

    #[test]
    fn a_tree_that_breaks_its_own_guarantee_is_reported() {
        let x = Var::new("x", Sort::Int, VarRole::Input);
        let y = Var::new("y", Sort::Int, VarRole::Output);
        let contract = Contract {
            name: "broken".into(),
            theory: Theory::Lia,
            inputs: vec![x.clone()],
            outputs: vec![y.clone()],
            assumptions: Formula::True,
            initial: Formula::True,
            transition: Formula::cmp(
                LinearTerm::var(&y.primed()),
                RelOp::Le,
                LinearTerm::from_int(1),
            ),
        };
        let w = Witness {
            contract,
            mode: Mode::Random,
            fixpoint: Formula::True,
            init: Model::new(),
            tree: SkolemTree {
                branches: vec![Branch {
                    guard: vec![],
                    updates: vec![(y.primed(), LocalSkolem::Assign(LinearTerm::from_int(7)))],
                }],
            },
        };
        let mut rng = UniformProvider::new(1);
        let state = initial_state(&w);
        let mut input = Model::new();
        input.set(x, rat(0));
        let err = step(&w, &state, &input, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Violation(msg) if msg.contains("transition")));
    }

    // -- games ---------------------------------------------------------------

    /// A contract whose controller may place the robot on any arena cell each
    /// turn: ideal for exercising the game driver in isolation.
    fn teleport_witness(int_arena: bool) -> Witness {
        let sort = if int_arena { Sort::Int } else { Sort::Real };
        let hi = if int_arena { 6 } else { 5 };
        let dx = Var::new("dx", sort, VarRole::Input);
        let dy = Var::new("dy", sort, VarRole::Input);
        let rx = Var::new("rx", sort, VarRole::Output);
        let ry = Var::new("ry", sort, VarRole::Output);
        let inside = |v: &Var| {
            Formula::and2(
                Formula::cmp(LinearTerm::var(v), RelOp::Ge, LinearTerm::zero()),
                Formula::cmp(LinearTerm::var(v), RelOp::Le, LinearTerm::from_int(hi)),
            )
        };
        let bounded = |v: &Var, k: i64| {
            Formula::and2(
                Formula::cmp(LinearTerm::var(v), RelOp::Ge, LinearTerm::from_int(-k)),
                Formula::cmp(LinearTerm::var(v), RelOp::Le, LinearTerm::from_int(k)),
            )
        };
        let contract = Contract {
            name: "teleport".into(),
            theory: if int_arena { Theory::Lia } else { Theory::Lra },
            inputs: vec![dx.clone(), dy.clone()],
            outputs: vec![rx.clone(), ry.clone()],
            assumptions: Formula::and2(bounded(&dx, 6), bounded(&dy, 6)),
            initial: Formula::and2(inside(&rx), inside(&ry)),
            transition: Formula::and2(inside(&rx.primed()), inside(&ry.primed())),
        };
        let mut init = Model::new();
        init.set(rx.clone(), rat(3));
        init.set(ry.clone(), rat(3));
        let cell = |v: &Var| {
            LocalSkolem::Urng(UrngCall {
                var: v.primed(),
                avoid: vec![],
                lower: Bound { term: Some(LinearTerm::zero()), closed: Formula::True },
                upper: Bound { term: Some(LinearTerm::from_int(hi)), closed: Formula::True },
            })
        };
        Witness {
            contract,
            mode: Mode::Random,
            fixpoint: Formula::True,
            init,
            tree: SkolemTree {
                branches: vec![Branch {
                    guard: vec![],
                    updates: vec![(rx.primed(), cell(&rx)), (ry.primed(), cell(&ry))],
                }],
            },
        }
    }

    fn int_chaser_config() -> GameConfig {
        GameConfig {
            arena: Arena { xmin: rat(0), ymin: rat(0), xmax: rat(6), ymax: rat(6) },
            delta: rat(1),
            robot_start: None,
            adversary_start: (rat(6), rat(6)),
            policy: Policy::Chaser,
            robot_vars: ("rx".into(), "ry".into()),
            adversary_inputs: ("dx".into(), "dy".into()),
            turns: None,
            seed: None,
        }
    }

    #[test]
    fn a_zero_turn_game_covers_exactly_the_start_cell() {
        let w = teleport_witness(true);
        let mut rng = UniformProvider::new(1);
        let trace = simulate_game(&w, &int_chaser_config(), 0, &mut rng, 1).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(trace.coverage.len(), 1);
        assert!(!trace.violation);
    }

    #[test]
    fn chaser_games_run_track_and_cover() {
        let w = teleport_witness(true);
        let mut rng = UniformProvider::new(11);
        let cfg = int_chaser_config();
        let trace = simulate_game(&w, &cfg, 60, &mut rng, 3).unwrap();
        assert_eq!(trace.records.len(), 60);
        assert!(!trace.violation);
        assert!(trace.coverage.len() > 10, "teleporting covers many cells");
        assert!(trace.coverage.len() <= arena_cells(&cfg.arena, true) as usize);

        let mut prev = cfg.adversary_start.clone();
        for r in &trace.records {
            assert!(r.ok);
            for q in [&r.rx, &r.ry, &r.ax, &r.ay] {
                assert!(*q >= rat(0) && *q <= rat(6), "in arena: {q}");
            }
            assert!((&r.ax - &prev.0).abs() <= rat(1));
            assert!((&r.ay - &prev.1).abs() <= rat(1));
            prev = (r.ax.clone(), r.ay.clone());
        }

        let csv = trace.csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("turn,rx,ry,ax,ay,ok"));
        assert_eq!(lines.count(), 60);
    }

    #[test]
    fn arena_cell_counts_match_the_grid() {
        let int_arena = Arena { xmin: rat(0), ymin: rat(0), xmax: rat(6), ymax: rat(6) };
        assert_eq!(arena_cells(&int_arena, true), 49);
        let real_arena = Arena { xmin: rat(0), ymin: rat(0), xmax: rat(5), ymax: rat(5) };
        assert_eq!(arena_cells(&real_arena, false), 25);
    }

    #[test]
    fn patrol_walks_its_waypoints_exactly() {
        let w = teleport_witness(false);
        let mut rng = UniformProvider::new(2);
        let cfg = GameConfig {
            arena: Arena { xmin: rat(0), ymin: rat(0), xmax: rat(5), ymax: rat(5) },
            delta: frac(1, 10),
            robot_start: None,
            adversary_start: (frac(1, 2), frac(1, 2)),
            policy: Policy::Patrol {
                waypoints: vec![
                    (frac(4, 5), frac(4, 5)),
                    (frac(21, 5), frac(4, 5)),
                ],
            },
            robot_vars: ("rx".into(), "ry".into()),
            adversary_inputs: ("dx".into(), "dy".into()),
            turns: None,
            seed: None,
        };
        let trace = simulate_game(&w, &cfg, 4, &mut rng, 1).unwrap();
        assert!(!trace.violation);
        // 0.5 → 0.6 → 0.7 → 0.8 on both axes, then x alone moves on.
        assert_eq!(trace.records[2].ax, frac(4, 5));
        assert_eq!(trace.records[2].ay, frac(4, 5));
        assert_eq!(trace.records[3].ax, frac(9, 10));
        assert_eq!(trace.records[3].ay, frac(4, 5));
    }

    #[test]
    fn coinciding_starts_are_a_configuration_error() {
        let w = teleport_witness(true);
        let mut rng = UniformProvider::new(1);
        let mut cfg = int_chaser_config();
        cfg.robot_start = Some((rat(6), rat(6)));
        assert!(simulate_game(&w, &cfg, 5, &mut rng, 1).is_err());
    }

    #[test]
    fn game_configs_parse_with_exact_decimals() {
        let json = r#"{
            "arena": {"xmin": 0, "ymin": 0, "xmax": 5, "ymax": 5},
            "delta": 0.1,
            "adversary_start": [0.8, 0.8],
            "robot_start": [0.5, 0.5],
            "policy": {"patrol": [[0.8, 0.8], [4.2, 0.8], [4.2, 4.2], [0.8, 4.2]]},
            "turns": 1000,
            "seed": 7
        }"#;
        let cfg = parse_game_config(json).unwrap();
        assert_eq!(cfg.delta, frac(1, 10));
        assert_eq!(cfg.adversary_start, (frac(4, 5), frac(4, 5)));
        match &cfg.policy {
            Policy::Patrol { waypoints } => {
                assert_eq!(waypoints.len(), 4);
                assert_eq!(waypoints[1], (frac(21, 5), frac(4, 5)));
            }
            Policy::Chaser => panic!("expected a patrol policy"),
        }
        assert_eq!(cfg.turns, Some(1000));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.robot_vars, ("rx".into(), "ry".into()));

        assert!(parse_game_config("{}").is_err());
        assert!(parse_game_config("[1, 2]").is_err());
        let bad_delta = json.replace("0.1", "0");
        assert!(parse_game_config(&bad_delta).is_err());
    }

    // -- fuzzing -------------------------------------------------------------

    /// Two branches over one boolean input: covered steps pin `p` to zero,
    /// uncovered steps draw it from [1, 2].
    fn fuzz_witness() -> Witness {
        let cvg = Var::new("cvg", Sort::Bool, VarRole::Input);
        let p = Var::new("p", Sort::Real, VarRole::Output);
        let cvg_true = Literal::cmp(LinearTerm::var(&cvg), RelOp::Eq, LinearTerm::from_int(1));
        let cvg_false = Literal::cmp(LinearTerm::var(&cvg), RelOp::Eq, LinearTerm::zero());
        let in_range = Formula::and2(
            Formula::cmp(LinearTerm::var(&p.primed()), RelOp::Ge, LinearTerm::zero()),
            Formula::cmp(LinearTerm::var(&p.primed()), RelOp::Le, LinearTerm::from_int(2)),
        );
        let contract = Contract {
            name: "cvgdemo".into(),
            theory: Theory::Lra,
            inputs: vec![cvg.clone()],
            outputs: vec![p.clone()],
            assumptions: Formula::or2(
                Formula::lit(cvg_true.clone()),
                Formula::lit(cvg_false.clone()),
            ),
            initial: Formula::True,
            transition: in_range,
        };
        let mut init = Model::new();
        init.set(p.clone(), rat(1));
        Witness {
            contract,
            mode: Mode::Random,
            fixpoint: Formula::True,
            init,
            tree: SkolemTree {
                branches: vec![
                    Branch {
                        guard: vec![cvg_true],
                        updates: vec![(p.primed(), LocalSkolem::Assign(LinearTerm::zero()))],
                    },
                    Branch {
                        guard: vec![cvg_false],
                        updates: vec![(
                            p.primed(),
                            LocalSkolem::Urng(UrngCall {
                                var: p.primed(),
                                avoid: vec![],
                                lower: Bound {
                                    term: Some(LinearTerm::from_int(1)),
                                    closed: Formula::True,
                                },
                                upper: Bound {
                                    term: Some(LinearTerm::from_int(2)),
                                    closed: Formula::True,
                                },
                            }),
                        )],
                    },
                ],
            },
        }
    }

    #[test]
    fn fuzz_records_follow_the_feedback_bit() {
        let w = fuzz_witness();
        let mut rng = UniformProvider::new(3);
        let mut out = Vec::new();
        let n = fuzz_emit(&w, 5, &mut rng, None, &mut out).unwrap();
        assert_eq!(n, 5);
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("cvg,p"));
        for line in lines {
            let (cvg, p) = line.split_once(',').unwrap();
            assert_eq!(cvg, "0");
            let v = parse_decimal(p).unwrap();
            assert!(v >= rat(1) && v <= rat(2), "uncovered steps draw from [1,2]: {p}");
        }

        let mut feedback: &[u8] = b"1\n1\n0\n";
        let mut reader = std::io::BufReader::new(&mut feedback);
        let mut out = Vec::new();
        fuzz_emit(&w, 3, &mut rng, Some(&mut reader), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert!(rows[0].starts_with("1,0"));
        assert!(rows[1].starts_with("1,0"));
        assert!(rows[2].starts_with("0,"));
        assert_ne!(rows[2], "0,0");
    }

    #[test]
    fn a_closing_sink_stops_the_run_cleanly() {
        struct Closing {
            lines_left: usize,
        }
        impl Write for Closing {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                if self.lines_left == 0 {
                    Err(std::io::Error::from(std::io::ErrorKind::BrokenPipe))
                } else {
                    let newlines = buf.iter().filter(|&&b| b == b'\n').count();
                    self.lines_left = self.lines_left.saturating_sub(newlines);
                    Ok(buf.len())
                }
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let w = fuzz_witness();
        let mut rng = UniformProvider::new(4);
        // Header plus two records fit, the third write hits the closed pipe.
        let mut sink = Closing { lines_left: 3 };
        let n = fuzz_emit(&w, 10, &mut rng, None, &mut sink).unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn fuzzing_requires_boolean_inputs() {
        let w = teleport_witness(true);
        let mut rng = UniformProvider::new(5);
        let mut out = Vec::new();
        assert!(matches!(
            fuzz_emit(&w, 1, &mut rng, None, &mut out),
            Err(Error::Unsupported(_))
        ));
    }
}
