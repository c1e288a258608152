//! The generated C and the in-process interpreter must agree on behavior:
//! for every reachable state and admissible input of the corridor contract,
//! the set of values the random controller can choose — and the successor
//! state each choice produces — is identical on both sides.
//!
//! The C side links against a scripted `RandVal` that logs its range
//! arguments and returns a forced candidate; a candidate is admissible when
//! the logged range admits it. The interpreter side forces the same
//! candidate through a scripted provider; the checked draw rejects exactly
//! the out-of-range ones.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use randsynth_core::logic::Rational;
use randsynth_core::sim::{step, DrawRequest, RngProvider};
use randsynth_core::solver::Solver;
use randsynth_core::{
    emit_c, lustre, synthesize, EmitConfig, Mode, Model, SynthConfig, Theory, Witness,
};

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

const DRIVER: &str = r#"
#include <stdio.h>

typedef struct { int y; int position; } onedim_state;
void onedim_step(onedim_state *s, int x);

static double scripted;
static int called;
static int log_lflag, log_uflag;
static double log_lb, log_ub;

double RandVal(_Bool lflag, _Bool uflag, double lbound, double ubound)
{
    called = 1;
    log_lflag = lflag;
    log_uflag = uflag;
    log_lb = lbound;
    log_ub = ubound;
    return scripted;
}

int main(void)
{
    int position, x;
    double cand;
    while (scanf("%d %d %lf", &position, &x, &cand) == 3) {
        onedim_state s;
        s.y = 0;
        s.position = position;
        called = 0;
        scripted = cand;
        onedim_step(&s, x);
        printf("%d %d %d %d %d %.17g %.17g\n",
               s.y, s.position, called, log_lflag, log_uflag, log_lb, log_ub);
    }
    return 0;
}
"#;

/// Returns a fixed value for every draw; the checked wrapper turns an
/// out-of-range script into an error, which is how inadmissible candidates
/// are detected.
struct Scripted(Rational);

impl RngProvider for Scripted {
    fn draw(&mut self, _req: &DrawRequest) -> Rational {
        self.0.clone()
    }
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn compile(dir: &Path, sources: &[(&str, &str)], exe: &str) -> std::path::PathBuf {
    let mut paths = Vec::new();
    for (name, text) in sources {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        paths.push(p);
    }
    let out = dir.join(exe);
    let built = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .args(&paths)
        .arg("-o")
        .arg(&out)
        .output()
        .expect("cc must be available");
    assert!(
        built.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&built.stderr)
    );
    out
}

/// One C-side probe: the produced state, whether RandVal ran, and the range
/// it was asked for.
struct Probe {
    y: i64,
    position: i64,
    called: bool,
    lflag: bool,
    uflag: bool,
    lb: f64,
    ub: f64,
}

impl Probe {
    fn admits(&self, cand: i64) -> bool {
        let c = cand as f64;
        self.called
            && (if self.lflag { c >= self.lb } else { c > self.lb })
            && (if self.uflag { c <= self.ub } else { c < self.ub })
    }
}

#[test]
fn compiled_and_interpreted_controllers_admit_the_same_choices() {
    let contract = lustre::load(ONEDIM).unwrap();
    let solver = Solver::new(Default::default());
    let cfg = SynthConfig { mode: Mode::Random, ..SynthConfig::default() };
    let outcome = synthesize(&contract, &cfg, &solver).unwrap();
    let w = Witness::from_outcome(&contract, Mode::Random, outcome).unwrap();

    let dir = std::env::temp_dir().join(format!("rsyn_equiv_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let witness_c = emit_c(&w, &EmitConfig::c(Theory::Lia));
    let exe = compile(&dir, &[("onedim_witness.c", &witness_c), ("driver.c", DRIVER)], "probe");

    // Probe every state / input / candidate combination through the binary.
    let positions = 0..=5i64;
    let inputs = -1..=1i64;
    let candidates = -3..=3i64;
    let mut feed = String::new();
    for p in positions.clone() {
        for x in inputs.clone() {
            for c in candidates.clone() {
                feed.push_str(&format!("{p} {x} {c}\n"));
            }
        }
    }
    let mut child = Command::new(&exe)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(feed.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let mut lines = String::from_utf8(out.stdout).unwrap().lines().map(|l| {
        let f: Vec<&str> = l.split_whitespace().collect();
        Probe {
            y: f[0].parse().unwrap(),
            position: f[1].parse().unwrap(),
            called: f[2] == "1",
            lflag: f[3] == "1",
            uflag: f[4] == "1",
            lb: f[5].parse().unwrap(),
            ub: f[6].parse().unwrap(),
        }
    }).collect::<Vec<_>>().into_iter();

    let y_var = w.contract.lookup("y").unwrap().clone();
    let pos_var = w.contract.lookup("position").unwrap().clone();
    let x_var = w.contract.lookup("x").unwrap().clone();

    let mut some_state_offers_choice = false;
    for p in positions {
        for x in inputs.clone() {
            // candidate -> successor position, per side
            let mut c_admits: BTreeMap<i64, i64> = BTreeMap::new();
            let mut interp_admits: BTreeMap<i64, i64> = BTreeMap::new();
            for c in candidates.clone() {
                let probe = lines.next().expect("driver printed one line per probe");
                if probe.admits(c) {
                    assert_eq!(probe.y, c, "the compiled step keeps the drawn value");
                    c_admits.insert(c, probe.position);
                }

                let mut state = Model::new();
                state.set(pos_var.clone(), rat(p));
                state.set(y_var.clone(), rat(0));
                let mut input = Model::new();
                input.set(x_var.clone(), rat(x));
                if let Ok(next) = step(&w, &state, &input, &mut Scripted(rat(c))) {
                    assert_eq!(next.value(&y_var).unwrap(), &rat(c));
                    let np = next.value(&pos_var).unwrap().numer().try_into().unwrap();
                    interp_admits.insert(c, np);
                }
            }
            assert_eq!(
                c_admits, interp_admits,
                "admissible choices diverge at position={p}, x={x}"
            );
            assert!(
                !c_admits.is_empty(),
                "a winning state must offer a move at position={p}, x={x}"
            );
            if c_admits.len() > 1 {
                some_state_offers_choice = true;
            }
        }
    }
    assert!(some_state_offers_choice, "the corridor leaves slack somewhere");

    // The pinched state: one step from the wall, pushed toward it.
    let mut state = Model::new();
    state.set(pos_var.clone(), rat(0));
    state.set(y_var.clone(), rat(0));
    let mut input = Model::new();
    input.set(x_var.clone(), rat(-1));
    let forced: Vec<i64> = (-3..=3)
        .filter(|c| step(&w, &state, &input, &mut Scripted(rat(*c))).is_ok())
        .collect();
    assert_eq!(forced, vec![1], "only stepping away from the wall survives");

    std::fs::remove_dir_all(&dir).ok();
}
