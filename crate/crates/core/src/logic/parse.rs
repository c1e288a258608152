//! S-expression reader and SMT-LIB-style parsers for terms, formulas, and
//! solver value responses.
//!
//! Used to read external-solver answers and witness files back in; the
//! contract frontend has its own grammar and lives elsewhere.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::logic::{Formula, LinearTerm, Model, Rational, RelOp, Sort, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SExpr {
    pub line: usize,
    pub col: usize,
    pub kind: SExprKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExprKind {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Atom(s) => Some(s),
            SExprKind::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            SExprKind::Atom(_) => None,
        }
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Self {
        Reader { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b';' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn read(&mut self) -> Result<SExpr> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return Err(self.err("unclosed parenthesis")),
                        Some(b')') => {
                            self.bump();
                            return Ok(SExpr { line, col, kind: SExprKind::List(items) });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(b')') => Err(self.err("unmatched closing parenthesis")),
            Some(b'|') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err("unterminated |...| symbol")),
                        Some(b'|') => break,
                        Some(c) => s.push(c as char),
                    }
                }
                Ok(SExpr { line, col, kind: SExprKind::Atom(s) })
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if matches!(c, b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b';' | b'|') {
                        break;
                    }
                    s.push(c as char);
                    self.bump();
                }
                Ok(SExpr { line, col, kind: SExprKind::Atom(s) })
            }
        }
    }
}

/// Read every top-level s-expression in `src`.
pub fn read_all(src: &str) -> Result<Vec<SExpr>> {
    let mut r = Reader::new(src);
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

/// Read exactly one s-expression.
pub fn read_one(src: &str) -> Result<SExpr> {
    let mut all = read_all(src)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        n => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: format!("expected one s-expression, found {n}"),
        }),
    }
}

/// Parse a numeric atom: `17`, `-3`, `2.5`.
fn parse_numeral(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let q = if let Some((whole, frac)) = body.split_once('.') {
        if !whole.chars().all(|c| c.is_ascii_digit())
            || frac.is_empty()
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let denom = BigInt::from(10u32).pow(frac.len() as u32);
        let numer: BigInt = format!("{whole}{frac}").parse().ok()?;
        Rational::new(numer, denom)
    } else {
        if !body.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        Rational::from_integer(body.parse().ok()?)
    };
    Some(if neg { -q } else { q })
}

/// Parse a solver value: numeral, decimal, `true`/`false`, `(- v)`,
/// `(/ a b)`, possibly nested.
pub fn parse_value(s: &SExpr) -> Result<Rational> {
    match &s.kind {
        SExprKind::Atom(a) => match a.as_str() {
            "true" => Ok(Rational::one()),
            "false" => Ok(Rational::zero()),
            text => parse_numeral(text).ok_or_else(|| s.err(format!("not a value: {text}"))),
        },
        SExprKind::List(items) => {
            let head = items
                .first()
                .and_then(SExpr::atom)
                .ok_or_else(|| s.err("not a value"))?;
            match (head, items.len()) {
                ("-", 2) => Ok(-parse_value(&items[1])?),
                ("/", 3) => {
                    let n = parse_value(&items[1])?;
                    let d = parse_value(&items[2])?;
                    if d.is_zero() {
                        Err(s.err("division by zero in value"))
                    } else {
                        Ok(n / d)
                    }
                }
                _ => Err(s.err(format!("not a value form: ({head} ...)"))),
            }
        }
    }
}

/// Parse a `get-value` response `((name value) ...)` into a model.
pub fn parse_get_value(s: &SExpr, env: &BTreeMap<String, Var>) -> Result<Model> {
    let items = s.list().ok_or_else(|| s.err("expected a list of bindings"))?;
    let mut m = Model::new();
    for item in items {
        let pair = item.list().ok_or_else(|| item.err("expected (name value)"))?;
        if pair.len() != 2 {
            return Err(item.err("expected (name value)"));
        }
        let name = pair[0]
            .atom()
            .ok_or_else(|| pair[0].err("expected a symbol"))?;
        let var = env
            .get(name)
            .ok_or_else(|| pair[0].err(format!("unknown symbol {name}")))?;
        m.set(var.clone(), parse_value(&pair[1])?);
    }
    Ok(m)
}

/// Parse a linear term. `env` maps printed names (primed forms included) to
/// variables.
pub fn parse_term(s: &SExpr, env: &BTreeMap<String, Var>) -> Result<LinearTerm> {
    match &s.kind {
        SExprKind::Atom(a) => {
            if let Some(q) = parse_numeral(a) {
                return Ok(LinearTerm::constant(q));
            }
            match env.get(a.as_str()) {
                Some(v) => Ok(LinearTerm::var(v)),
                None => Err(s.err(format!("unknown symbol {a}"))),
            }
        }
        SExprKind::List(items) => {
            let head = items
                .first()
                .and_then(SExpr::atom)
                .ok_or_else(|| s.err("expected an operator"))?;
            let args = &items[1..];
            match head {
                "+" => {
                    let mut acc = LinearTerm::zero();
                    for a in args {
                        acc = acc + parse_term(a, env)?;
                    }
                    Ok(acc)
                }
                "-" => match args {
                    [x] => Ok(-parse_term(x, env)?),
                    [x, rest @ ..] if !rest.is_empty() => {
                        let mut acc = parse_term(x, env)?;
                        for r in rest {
                            acc = acc - parse_term(r, env)?;
                        }
                        Ok(acc)
                    }
                    _ => Err(s.err("- needs at least one argument")),
                },
                "*" => {
                    let mut constant = Rational::one();
                    let mut sym: Option<LinearTerm> = None;
                    for a in args {
                        let t = parse_term(a, env)?;
                        match t.as_constant() {
                            Some(c) => constant *= c.clone(),
                            None => {
                                if sym.is_some() {
                                    return Err(
                                        s.err("nonlinear product of two non-constant terms")
                                    );
                                }
                                sym = Some(t);
                            }
                        }
                    }
                    Ok(match sym {
                        Some(t) => t.scaled(&constant),
                        None => LinearTerm::constant(constant),
                    })
                }
                "/" => match args {
                    [a, b] => {
                        let t = parse_term(a, env)?;
                        let d = parse_term(b, env)?;
                        let c = d
                            .as_constant()
                            .ok_or_else(|| s.err("division by a non-constant"))?;
                        if c.is_zero() {
                            return Err(s.err("division by zero"));
                        }
                        Ok(t.scaled(&(Rational::one() / c.clone())))
                    }
                    _ => Err(s.err("/ needs exactly two arguments")),
                },
                "div" => match args {
                    [a, b] => {
                        let t = parse_term(a, env)?;
                        let k = parse_term(b, env)?
                            .as_constant()
                            .filter(|c| c.is_integer())
                            .map(|c| c.to_integer())
                            .ok_or_else(|| s.err("div needs a constant integer divisor"))?;
                        LinearTerm::floor_div(t, k)
                    }
                    _ => Err(s.err("div needs exactly two arguments")),
                },
                "mod" => match args {
                    [a, b] => {
                        let t = parse_term(a, env)?;
                        let k = parse_term(b, env)?
                            .as_constant()
                            .filter(|c| c.is_integer())
                            .map(|c| c.to_integer())
                            .ok_or_else(|| s.err("mod needs a constant integer divisor"))?;
                        let d = LinearTerm::floor_div(t.clone(), k.clone())?;
                        Ok(t - d.scaled(&Rational::from_integer(k)))
                    }
                    _ => Err(s.err("mod needs exactly two arguments")),
                },
                "ite" => match args {
                    [c, a, b] => Ok(LinearTerm::ite(
                        parse_formula(c, env)?,
                        parse_term(a, env)?,
                        parse_term(b, env)?,
                    )),
                    _ => Err(s.err("ite needs exactly three arguments")),
                },
                other => Err(s.err(format!("unknown term operator {other}"))),
            }
        }
    }
}

fn rel_of(head: &str) -> Option<RelOp> {
    match head {
        "<" => Some(RelOp::Lt),
        "<=" => Some(RelOp::Le),
        ">" => Some(RelOp::Gt),
        ">=" => Some(RelOp::Ge),
        _ => None,
    }
}

/// Parse a formula. Equality between terms becomes an arithmetic literal;
/// equality where either side is boolean becomes an if-and-only-if.
pub fn parse_formula(s: &SExpr, env: &BTreeMap<String, Var>) -> Result<Formula> {
    match &s.kind {
        SExprKind::Atom(a) => match a.as_str() {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            name => match env.get(name) {
                Some(v) if v.sort == Sort::Bool => Ok(Formula::var(v.clone())),
                Some(v) => Err(s.err(format!("{v} is not boolean"))),
                None => Err(s.err(format!("unknown symbol {name}"))),
            },
        },
        SExprKind::List(items) => {
            let head = items
                .first()
                .and_then(SExpr::atom)
                .ok_or_else(|| s.err("expected an operator"))?;
            let args = &items[1..];
            if let Some(op) = rel_of(head) {
                if args.len() < 2 {
                    return Err(s.err(format!("{head} needs at least two arguments")));
                }
                let terms: Vec<LinearTerm> = args
                    .iter()
                    .map(|a| parse_term(a, env))
                    .collect::<Result<_>>()?;
                let chain = terms
                    .windows(2)
                    .map(|w| Formula::cmp(w[0].clone(), op, w[1].clone()))
                    .collect();
                return Ok(Formula::and(chain));
            }
            match head {
                "and" => Ok(Formula::and(
                    args.iter()
                        .map(|a| parse_formula(a, env))
                        .collect::<Result<_>>()?,
                )),
                "or" => Ok(Formula::or(
                    args.iter()
                        .map(|a| parse_formula(a, env))
                        .collect::<Result<_>>()?,
                )),
                "not" => match args {
                    [a] => Ok(Formula::not(parse_formula(a, env)?)),
                    _ => Err(s.err("not needs exactly one argument")),
                },
                "=>" => {
                    if args.len() < 2 {
                        return Err(s.err("=> needs at least two arguments"));
                    }
                    let mut fs: Vec<Formula> = args
                        .iter()
                        .map(|a| parse_formula(a, env))
                        .collect::<Result<_>>()?;
                    let mut acc = fs.pop().unwrap();
                    while let Some(f) = fs.pop() {
                        acc = Formula::implies(f, acc);
                    }
                    Ok(acc)
                }
                "=" | "distinct" => {
                    if args.len() != 2 {
                        return Err(s.err(format!("{head} needs exactly two arguments")));
                    }
                    let as_terms = parse_term(&args[0], env)
                        .and_then(|a| Ok((a, parse_term(&args[1], env)?)));
                    match as_terms {
                        Ok((a, b)) => {
                            let op = if head == "=" { RelOp::Eq } else { RelOp::Ne };
                            Ok(Formula::cmp(a, op, b))
                        }
                        Err(_) => {
                            let a = parse_formula(&args[0], env)?;
                            let b = parse_formula(&args[1], env)?;
                            let f = Formula::iff(a, b);
                            Ok(if head == "=" { f } else { Formula::not(f) })
                        }
                    }
                }
                "ite" => match args {
                    [c, a, b] => Ok(Formula::ite(
                        parse_formula(c, env)?,
                        parse_formula(a, env)?,
                        parse_formula(b, env)?,
                    )),
                    _ => Err(s.err("ite needs exactly three arguments")),
                },
                other => Err(s.err(format!("unknown formula operator {other}"))),
            }
        }
    }
}

/// Environment builder: printed name (primed forms included) to variable.
pub fn name_env<'a>(vars: impl IntoIterator<Item = &'a Var>) -> BTreeMap<String, Var> {
    let mut env = BTreeMap::new();
    for v in vars {
        env.insert(v.display_name(), v.clone());
    }
    env
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::VarRole;

    fn env() -> BTreeMap<String, Var> {
        let x = Var::new("x", Sort::Int, VarRole::Input);
        let y = Var::new("y", Sort::Int, VarRole::Output);
        let b = Var::new("b", Sort::Bool, VarRole::Input);
        name_env([&x, &y, &y.primed(), &b])
    }

    #[test]
    fn reads_nested_lists_and_comments() {
        let src = "; header\n(a (b c) |y'|)";
        let s = read_one(src).unwrap();
        let items = s.list().unwrap();
        assert_eq!(items[0].atom(), Some("a"));
        assert_eq!(items[2].atom(), Some("y'"));
    }

    #[test]
    fn reports_positions() {
        let err = read_one("(a\n(b").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn parses_values() {
        assert_eq!(parse_value(&read_one("7").unwrap()).unwrap(), Rational::from_integer(7.into()));
        assert_eq!(
            parse_value(&read_one("(- 3)").unwrap()).unwrap(),
            Rational::from_integer((-3).into())
        );
        assert_eq!(
            parse_value(&read_one("(/ 1 2)").unwrap()).unwrap(),
            Rational::new(1.into(), 2.into())
        );
        assert_eq!(
            parse_value(&read_one("(- (/ 1 2))").unwrap()).unwrap(),
            Rational::new((-1).into(), 2.into())
        );
        assert_eq!(
            parse_value(&read_one("2.5").unwrap()).unwrap(),
            Rational::new(5.into(), 2.into())
        );
    }

    #[test]
    fn parses_terms_with_primes_and_div() {
        let e = env();
        let t = parse_term(&read_one("(+ (* 2 x) |y'| (- 3))").unwrap(), &e).unwrap();
        let yp = e["y'"].clone();
        assert_eq!(t.coeff_of(&e["x"]), Rational::from_integer(2.into()));
        assert_eq!(t.coeff_of(&yp), Rational::from_integer(1.into()));
        assert_eq!(t.constant, Rational::from_integer((-3).into()));

        let d = parse_term(&read_one("(div (+ x 7) 3)").unwrap(), &e).unwrap();
        assert!(!d.coeffs.is_empty());
        let m = parse_term(&read_one("(mod 7 3)").unwrap(), &e).unwrap();
        assert_eq!(m.as_constant(), Some(&Rational::from_integer(1.into())));
    }

    #[test]
    fn parses_formulas_with_chains_and_bools() {
        let e = env();
        // Chained comparison becomes a conjunction.
        let f = parse_formula(&read_one("(<= 0 x 5)").unwrap(), &e).unwrap();
        match f {
            Formula::And(fs) => assert_eq!(fs.len(), 2),
            other => panic!("expected conjunction, got {other}"),
        }
        // Boolean equality is an iff.
        let g = parse_formula(&read_one("(= b true)").unwrap(), &e).unwrap();
        assert_eq!(g, Formula::var(e["b"].clone()));
        // Arithmetic disequality.
        let h = parse_formula(&read_one("(distinct x 3)").unwrap(), &e).unwrap();
        match h {
            Formula::Lit(l) => assert_eq!(l.op, RelOp::Ne),
            other => panic!("expected literal, got {other}"),
        }
    }

    #[test]
    fn value_roundtrip_with_printer() {
        use crate::logic::print::rational_smt;
        for q in [
            Rational::from_integer(5.into()),
            Rational::from_integer((-7).into()),
            Rational::new(3.into(), 4.into()),
            Rational::new((-9).into(), 2.into()),
        ] {
            for int in [true, false] {
                if int && !q.is_integer() {
                    continue;
                }
                let printed = rational_smt(&q, int);
                let back = parse_value(&read_one(&printed).unwrap()).unwrap();
                assert_eq!(back, q, "roundtrip {printed}");
            }
        }
    }
}
