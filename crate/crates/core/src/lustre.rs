//! The contract surface language: a Lustre subset.
//!
//! A contract is a single synchronous node. Parameters marked by the
//! `--%REALIZABLE` pragma are the environment's inputs; every other
//! parameter and every local is an output the implementation must drive.
//! `assert` statements restrict the environment, equations and
//! `--%PROPERTY`-marked booleans constrain the implementation.
//!
//! Elaboration produces the three formulas of a [`Contract`]:
//!
//! * assumptions — the asserts, over current inputs and outputs;
//! * initial — for `v = a -> b`, the constraint `v = a`; stateless
//!   equations and properties as written;
//! * transition — for `v = a -> b`, the constraint `v' = b` where `pre(w)`
//!   reads the unprimed (previous) output and a bare output occurrence
//!   reads the primed (chosen) one; stateless equations and properties are
//!   carried over with all outputs primed.
//!
//! Stateless boolean locals are inlined into their use sites, so marker
//! variables vanish from the formulas. Stateful booleans stay as 0/1
//! outputs, their definitions encoded as equivalences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::logic::{
    Contract, Formula, LinearTerm, Literal, Rational, RelOp, Sort, Theory, Var, VarRole,
};

// ---------------------------------------------------------------------
// Source positions
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }
}

// ---------------------------------------------------------------------
// Abstract syntax
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    RealDiv,
    IntDiv,
    Mod,
    And,
    Or,
    Implies,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt, Pos),
    Real(Rational, Pos),
    Bool(bool, Pos),
    Ident(String, Pos),
    Pre(Box<Expr>, Pos),
    Arrow(Box<Expr>, Box<Expr>, Pos),
    Unary(UnOp, Box<Expr>, Pos),
    Binary(BinOp, Box<Expr>, Box<Expr>, Pos),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>, Pos),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Int(_, p)
            | Expr::Real(_, p)
            | Expr::Bool(_, p)
            | Expr::Ident(_, p)
            | Expr::Pre(_, p)
            | Expr::Arrow(_, _, p)
            | Expr::Unary(_, _, p)
            | Expr::Binary(_, _, _, p)
            | Expr::Ite(_, _, _, p) => *p,
        }
    }

    /// A copy with all source positions cleared, for structural comparison.
    pub fn strip(&self) -> Expr {
        let z = Pos::default();
        match self {
            Expr::Int(k, _) => Expr::Int(k.clone(), z),
            Expr::Real(q, _) => Expr::Real(q.clone(), z),
            Expr::Bool(b, _) => Expr::Bool(*b, z),
            Expr::Ident(n, _) => Expr::Ident(n.clone(), z),
            Expr::Pre(e, _) => Expr::Pre(Box::new(e.strip()), z),
            Expr::Arrow(a, b, _) => Expr::Arrow(Box::new(a.strip()), Box::new(b.strip()), z),
            Expr::Unary(op, e, _) => Expr::Unary(*op, Box::new(e.strip()), z),
            Expr::Binary(op, a, b, _) => {
                Expr::Binary(*op, Box::new(a.strip()), Box::new(b.strip()), z)
            }
            Expr::Ite(c, a, b, _) => {
                Expr::Ite(Box::new(c.strip()), Box::new(a.strip()), Box::new(b.strip()), z)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub target: String,
    pub value: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceContract {
    pub name: String,
    /// Parameters of the node header, in order: `(name, sort)`.
    pub params: Vec<(String, Sort)>,
    /// `var` block declarations, in order.
    pub locals: Vec<(String, Sort)>,
    pub equations: Vec<Equation>,
    pub asserts: Vec<Expr>,
    /// `--%PROPERTY` identifiers, in order of appearance.
    pub properties: Vec<String>,
    /// `--%REALIZABLE` identifiers, in order of appearance.
    pub realizable: Vec<String>,
    /// Whether the node carries `--%MAIN`.
    pub main: bool,
}

impl SourceContract {
    /// A copy with all source positions cleared, for structural comparison.
    pub fn strip_positions(&self) -> SourceContract {
        SourceContract {
            equations: self
                .equations
                .iter()
                .map(|e| Equation {
                    target: e.target.clone(),
                    value: e.value.strip(),
                    pos: Pos::default(),
                })
                .collect(),
            asserts: self.asserts.iter().map(Expr::strip).collect(),
            ..self.clone()
        }
    }
}

// ---------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Real(Rational),
    Sym(&'static str),
    /// `--%KEY arg1 arg2;`
    Pragma(String, Vec<String>),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), at: 0, line: 1, col: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.at + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn lex(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
                self.bump();
            }
            let pos = self.pos();
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, pos });
                return Ok(out);
            };
            if c == b'-' && self.peek2() == Some(b'-') {
                self.bump();
                self.bump();
                if self.peek() == Some(b'%') {
                    self.bump();
                    out.push(self.pragma(pos)?);
                } else {
                    while !matches!(self.peek(), None | Some(b'\n')) {
                        self.bump();
                    }
                }
                continue;
            }
            if c.is_ascii_alphabetic() || c == b'_' {
                let mut name = String::new();
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    name.push(self.bump().unwrap() as char);
                }
                out.push(Token { tok: Tok::Ident(name), pos });
                continue;
            }
            if c.is_ascii_digit() {
                out.push(self.number(pos)?);
                continue;
            }
            let sym: &'static str = match c {
                b'(' => "(",
                b')' => ")",
                b';' => ";",
                b':' => ":",
                b',' => ",",
                b'+' => "+",
                b'*' => "*",
                b'/' => "/",
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        out.push(Token { tok: Tok::Sym("->"), pos });
                    } else {
                        out.push(Token { tok: Tok::Sym("-"), pos });
                    }
                    continue;
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        out.push(Token { tok: Tok::Sym("=>"), pos });
                    } else {
                        out.push(Token { tok: Tok::Sym("="), pos });
                    }
                    continue;
                }
                b'<' => {
                    self.bump();
                    match self.peek() {
                        Some(b'=') => {
                            self.bump();
                            out.push(Token { tok: Tok::Sym("<="), pos });
                        }
                        Some(b'>') => {
                            self.bump();
                            out.push(Token { tok: Tok::Sym("<>"), pos });
                        }
                        _ => out.push(Token { tok: Tok::Sym("<"), pos }),
                    }
                    continue;
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        out.push(Token { tok: Tok::Sym(">="), pos });
                    } else {
                        out.push(Token { tok: Tok::Sym(">"), pos });
                    }
                    continue;
                }
                other => {
                    return Err(pos.err(format!("unexpected character {:?}", other as char)))
                }
            };
            self.bump();
            out.push(Token { tok: Tok::Sym(sym), pos });
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Token> {
        let mut digits = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            digits.push(self.bump().unwrap() as char);
        }
        if self.peek() == Some(b'.') && matches!(self.peek2(), Some(c) if c.is_ascii_digit()) {
            self.bump();
            let mut frac = String::new();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                frac.push(self.bump().unwrap() as char);
            }
            let numer: BigInt = format!("{digits}{frac}").parse().unwrap();
            let denom = BigInt::from(10u8).pow(frac.len() as u32);
            return Ok(Token { tok: Tok::Real(Rational::new(numer, denom)), pos });
        }
        Ok(Token { tok: Tok::Int(digits.parse().unwrap()), pos })
    }

    /// After `--%`: a keyword, space- or comma-separated arguments, `;`.
    fn pragma(&mut self, pos: Pos) -> Result<Token> {
        let mut raw = String::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => {
                    return Err(pos.err("pragma is not terminated by ';'"))
                }
                Some(b';') => {
                    self.bump();
                    break;
                }
                Some(_) => raw.push(self.bump().unwrap() as char),
            }
        }
        let mut parts = raw
            .split(|c: char| c.is_ascii_whitespace() || c == ',')
            .filter(|s| !s.is_empty());
        let Some(key) = parts.next() else {
            return Err(pos.err("empty pragma"));
        };
        Ok(Token {
            tok: Tok::Pragma(key.to_string(), parts.map(str::to_string).collect()),
            pos,
        })
    }
}

// ---------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Sym(t) if *t == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        let t = self.bump();
        match &t.tok {
            Tok::Sym(got) if *got == s => Ok(()),
            other => Err(t.pos.err(format!("expected `{s}`, found {}", describe(other)))),
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Ident(n) if n == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(n) if n == kw => Ok(()),
            other => Err(t.pos.err(format!("expected `{kw}`, found {}", describe(other)))),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos)> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(n) if !is_keyword(&n) => Ok((n, t.pos)),
            other => Err(t.pos.err(format!("expected an identifier, found {}", describe(&other)))),
        }
    }

    fn file(&mut self) -> Result<Vec<SourceContract>> {
        let mut nodes = Vec::new();
        while !matches!(self.peek().tok, Tok::Eof) {
            nodes.push(self.node()?);
        }
        if nodes.is_empty() {
            return Err(self.peek().pos.err("no node declaration found"));
        }
        Ok(nodes)
    }

    fn node(&mut self) -> Result<SourceContract> {
        self.expect_kw("node")?;
        let (name, _) = self.expect_ident()?;
        self.expect_sym("(")?;
        let params = self.param_list(")")?;
        self.expect_sym(")")?;
        self.expect_kw("returns")?;
        self.expect_sym("(")?;
        let rets = self.param_list(")")?;
        self.expect_sym(")")?;
        if let Some((n, _)) = rets.first() {
            return Err(self
                .peek()
                .pos
                .err(format!("return parameters are unsupported (`{n}`): drive outputs through locals")));
        }
        self.expect_sym(";")?;
        let mut locals = Vec::new();
        if self.eat_kw("var") {
            loop {
                let group = self.param_group()?;
                locals.extend(group);
                self.expect_sym(";")?;
                if matches!(&self.peek().tok, Tok::Ident(n) if n == "let") {
                    break;
                }
            }
        }
        self.expect_kw("let")?;
        let mut sc = SourceContract {
            name,
            params,
            locals,
            equations: Vec::new(),
            asserts: Vec::new(),
            properties: Vec::new(),
            realizable: Vec::new(),
            main: false,
        };
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Ident(n) if n == "tel" => {
                    self.bump();
                    self.expect_sym(";")?;
                    break;
                }
                Tok::Ident(n) if n == "assert" => {
                    self.bump();
                    let e = self.expr()?;
                    self.expect_sym(";")?;
                    sc.asserts.push(e);
                }
                Tok::Pragma(key, args) => {
                    self.bump();
                    match key.as_str() {
                        "PROPERTY" => {
                            if args.len() != 1 {
                                return Err(t.pos.err("PROPERTY takes exactly one identifier"));
                            }
                            sc.properties.push(args[0].clone());
                        }
                        "REALIZABLE" => {
                            if args.is_empty() {
                                return Err(t.pos.err("REALIZABLE needs at least one identifier"));
                            }
                            sc.realizable.extend(args.iter().cloned());
                        }
                        "MAIN" => {
                            if !args.is_empty() {
                                return Err(t.pos.err("MAIN takes no arguments"));
                            }
                            sc.main = true;
                        }
                        other => {
                            return Err(t.pos.err(format!("unknown pragma `{other}`")));
                        }
                    }
                }
                Tok::Ident(_) => {
                    let (target, pos) = self.expect_ident()?;
                    self.expect_sym("=")?;
                    let value = self.expr()?;
                    self.expect_sym(";")?;
                    sc.equations.push(Equation { target, value, pos });
                }
                Tok::Eof => return Err(t.pos.err("unterminated node body: missing `tel;`")),
                other => {
                    return Err(t.pos.err(format!("unexpected {} in node body", describe(other))))
                }
            }
        }
        if sc.properties.is_empty() {
            return Err(Error::Parse {
                line: 0,
                col: 0,
                msg: format!("node `{}` declares no --%PROPERTY", sc.name),
            });
        }
        Ok(sc)
    }

    /// `a, b : int; c : bool; ...` up to (not including) the closing token.
    fn param_list(&mut self, close: &str) -> Result<Vec<(String, Sort)>> {
        let mut out = Vec::new();
        if matches!(&self.peek().tok, Tok::Sym(s) if *s == close) {
            return Ok(out);
        }
        loop {
            out.extend(self.param_group()?);
            if !self.eat_sym(";") {
                break;
            }
            if matches!(&self.peek().tok, Tok::Sym(s) if *s == close) {
                break;
            }
        }
        Ok(out)
    }

    /// `a, b : int`
    fn param_group(&mut self) -> Result<Vec<(String, Sort)>> {
        let mut names = vec![self.expect_ident()?];
        while self.eat_sym(",") {
            names.push(self.expect_ident()?);
        }
        self.expect_sym(":")?;
        let (sort_name, pos) = {
            let t = self.bump();
            match t.tok {
                Tok::Ident(n) => (n, t.pos),
                other => {
                    return Err(t.pos.err(format!("expected a type, found {}", describe(&other))))
                }
            }
        };
        let sort = match sort_name.as_str() {
            "int" => Sort::Int,
            "real" => Sort::Real,
            "bool" => Sort::Bool,
            other => return Err(pos.err(format!("unknown type `{other}`"))),
        };
        Ok(names.into_iter().map(|(n, _)| (n, sort)).collect())
    }

    // Expression grammar, loosest binding first:
    //   expr    := implies ('->' expr)?
    //   implies := or ('=>' implies)?
    //   or      := and ('or' and)*
    //   and     := cmp ('and' cmp)*
    //   cmp     := sum (relop sum)?
    //   sum     := term (('+'|'-') term)*
    //   term    := unary (('*'|'/'|'div'|'mod') unary)*
    //   unary   := '-' unary | 'not' unary | 'pre' '(' expr ')' | atom
    //   atom    := literal | ident | '(' expr ')' | 'if' expr 'then' expr 'else' expr
    fn expr(&mut self) -> Result<Expr> {
        let a = self.implies()?;
        if matches!(&self.peek().tok, Tok::Sym("->")) {
            let pos = self.bump().pos;
            let b = self.expr()?;
            return Ok(Expr::Arrow(Box::new(a), Box::new(b), pos));
        }
        Ok(a)
    }

    fn implies(&mut self) -> Result<Expr> {
        let a = self.or()?;
        if matches!(&self.peek().tok, Tok::Sym("=>")) {
            let pos = self.bump().pos;
            let b = self.implies()?;
            return Ok(Expr::Binary(BinOp::Implies, Box::new(a), Box::new(b), pos));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Expr> {
        let mut a = self.and()?;
        while matches!(&self.peek().tok, Tok::Ident(n) if n == "or") {
            let pos = self.bump().pos;
            let b = self.and()?;
            a = Expr::Binary(BinOp::Or, Box::new(a), Box::new(b), pos);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut a = self.cmp()?;
        while matches!(&self.peek().tok, Tok::Ident(n) if n == "and") {
            let pos = self.bump().pos;
            let b = self.cmp()?;
            a = Expr::Binary(BinOp::And, Box::new(a), Box::new(b), pos);
        }
        Ok(a)
    }

    fn cmp(&mut self) -> Result<Expr> {
        let a = self.sum()?;
        let op = match &self.peek().tok {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("<>") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(a),
        };
        let pos = self.bump().pos;
        let b = self.sum()?;
        Ok(Expr::Binary(op, Box::new(a), Box::new(b), pos))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut a = self.term()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(a),
            };
            let pos = self.bump().pos;
            let b = self.term()?;
            a = Expr::Binary(op, Box::new(a), Box::new(b), pos);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut a = self.unary()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::RealDiv,
                Tok::Ident(n) if n == "div" => BinOp::IntDiv,
                Tok::Ident(n) if n == "mod" => BinOp::Mod,
                _ => return Ok(a),
            };
            let pos = self.bump().pos;
            let b = self.unary()?;
            a = Expr::Binary(op, Box::new(a), Box::new(b), pos);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Sym("-") => {
                self.bump();
                let e = self.unary()?;
                Ok(Expr::Unary(UnOp::Neg, Box::new(e), t.pos))
            }
            Tok::Ident(n) if n == "not" => {
                self.bump();
                let e = self.unary()?;
                Ok(Expr::Unary(UnOp::Not, Box::new(e), t.pos))
            }
            Tok::Ident(n) if n == "pre" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Pre(Box::new(e), t.pos))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Int(k) => Ok(Expr::Int(k, t.pos)),
            Tok::Real(q) => Ok(Expr::Real(q, t.pos)),
            Tok::Ident(n) if n == "true" => Ok(Expr::Bool(true, t.pos)),
            Tok::Ident(n) if n == "false" => Ok(Expr::Bool(false, t.pos)),
            Tok::Ident(n) if n == "if" => {
                let c = self.expr()?;
                self.expect_kw("then")?;
                let a = self.expr()?;
                self.expect_kw("else")?;
                let b = self.expr()?;
                Ok(Expr::Ite(Box::new(c), Box::new(a), Box::new(b), t.pos))
            }
            Tok::Ident(n) if !is_keyword(&n) => Ok(Expr::Ident(n, t.pos)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            other => Err(t.pos.err(format!("expected an expression, found {}", describe(&other)))),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "node"
            | "returns"
            | "var"
            | "let"
            | "tel"
            | "assert"
            | "if"
            | "then"
            | "else"
            | "pre"
            | "not"
            | "and"
            | "or"
            | "div"
            | "mod"
            | "true"
            | "false"
            | "int"
            | "real"
            | "bool"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(n) => format!("`{n}`"),
        Tok::Int(k) => format!("`{k}`"),
        Tok::Real(q) => format!("`{q}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Pragma(k, _) => format!("pragma `{k}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parse a `.lus` source into its nodes.
pub fn parse(text: &str) -> Result<Vec<SourceContract>> {
    let toks = Lexer::new(text).lex()?;
    Parser { toks, at: 0 }.file()
}

/// The node elaboration should run on: the single node, or the `--%MAIN`
/// one when several are declared.
pub fn main_node(nodes: &[SourceContract]) -> Result<&SourceContract> {
    match nodes {
        [] => Err(Error::Elaborate("no nodes to elaborate".into())),
        [only] => Ok(only),
        many => {
            let mains: Vec<&SourceContract> = many.iter().filter(|n| n.main).collect();
            match mains.as_slice() {
                [one] => Ok(one),
                [] => Err(Error::Elaborate(
                    "multiple nodes declared but none carries --%MAIN".into(),
                )),
                _ => Err(Error::Elaborate("multiple nodes carry --%MAIN".into())),
            }
        }
    }
}

/// Parse and elaborate in one step.
pub fn load(text: &str) -> Result<Contract> {
    let nodes = parse(text)?;
    elaborate(main_node(&nodes)?)
}

// ---------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------

impl fmt::Display for SourceContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}(", self.name)?;
        print_params(f, &self.params)?;
        writeln!(f, ") returns();")?;
        if !self.locals.is_empty() {
            writeln!(f, "var")?;
            for (n, s) in &self.locals {
                writeln!(f, "  {n} : {};", sort_name(*s))?;
            }
        }
        writeln!(f, "let")?;
        for a in &self.asserts {
            writeln!(f, "  assert {};", PrintExpr(a))?;
        }
        for eq in &self.equations {
            writeln!(f, "  {} = {};", eq.target, PrintExpr(&eq.value))?;
        }
        for p in &self.properties {
            writeln!(f, "  --%PROPERTY {p};")?;
        }
        if !self.realizable.is_empty() {
            writeln!(f, "  --%REALIZABLE {};", self.realizable.join(" "))?;
        }
        if self.main {
            writeln!(f, "  --%MAIN;")?;
        }
        write!(f, "tel;")
    }
}

fn print_params(f: &mut fmt::Formatter<'_>, params: &[(String, Sort)]) -> fmt::Result {
    let mut first = true;
    let mut i = 0;
    while i < params.len() {
        let mut j = i + 1;
        while j < params.len() && params[j].1 == params[i].1 {
            j += 1;
        }
        if !first {
            write!(f, "; ")?;
        }
        first = false;
        let names: Vec<&str> = params[i..j].iter().map(|(n, _)| n.as_str()).collect();
        write!(f, "{} : {}", names.join(", "), sort_name(params[i].1))?;
        i = j;
    }
    Ok(())
}

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Int => "int",
        Sort::Real => "real",
        Sort::Bool => "bool",
    }
}

/// Fully parenthesized expression printing: reparsing is unambiguous.
struct PrintExpr<'a>(&'a Expr);

impl fmt::Display for PrintExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Int(k, _) => write!(f, "{k}"),
            Expr::Real(q, _) => write!(f, "{}", print_decimal(q)),
            Expr::Bool(b, _) => write!(f, "{b}"),
            Expr::Ident(n, _) => write!(f, "{n}"),
            Expr::Pre(e, _) => write!(f, "pre({})", PrintExpr(e)),
            Expr::Arrow(a, b, _) => write!(f, "({} -> {})", PrintExpr(a), PrintExpr(b)),
            Expr::Unary(UnOp::Neg, e, _) => write!(f, "(- {})", PrintExpr(e)),
            Expr::Unary(UnOp::Not, e, _) => write!(f, "(not {})", PrintExpr(e)),
            Expr::Binary(op, a, b, _) => {
                write!(f, "({} {} {})", PrintExpr(a), binop_name(*op), PrintExpr(b))
            }
            Expr::Ite(c, a, b, _) => write!(
                f,
                "(if {} then {} else {})",
                PrintExpr(c),
                PrintExpr(a),
                PrintExpr(b)
            ),
        }
    }
}

fn binop_name(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::RealDiv => "/",
        BinOp::IntDiv => "div",
        BinOp::Mod => "mod",
        BinOp::And => "and",
        BinOp::Or => "or",
        BinOp::Implies => "=>",
        BinOp::Eq => "=",
        BinOp::Ne => "<>",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
    }
}

/// Exact decimal form when the denominator is a product of twos and fives;
/// otherwise a fraction `(p / q)` (which reparses through division).
fn print_decimal(q: &Rational) -> String {
    use num_traits::{One, Signed, Zero};
    let mut d = q.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("({} / {})", q.numer(), q.denom());
    }
    let scale = twos.max(fives);
    let scaled = q.numer() * BigInt::from(10).pow(scale) / q.denom();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let digits = scaled.abs().to_string();
    if scale == 0 {
        return format!("{sign}{digits}.0");
    }
    let pad = format!("{digits:0>width$}", width = scale as usize + 1);
    let (int_part, frac_part) = pad.split_at(pad.len() - scale as usize);
    format!("{sign}{int_part}.{frac_part}")
}

// ---------------------------------------------------------------------
// Elaboration
// ---------------------------------------------------------------------

/// Either side of the typed expression translation.
enum Elab {
    Num(LinearTerm),
    Bool(Formula),
}

impl Elab {
    fn num(self, pos: Pos) -> Result<LinearTerm> {
        match self {
            Elab::Num(t) => Ok(t),
            Elab::Bool(_) => Err(Error::Elaborate(format!(
                "expected a numeric expression at {}:{}",
                pos.line, pos.col
            ))),
        }
    }

    fn boolean(self, pos: Pos) -> Result<Formula> {
        match self {
            Elab::Bool(f) => Ok(f),
            Elab::Num(_) => Err(Error::Elaborate(format!(
                "expected a boolean expression at {}:{}",
                pos.line, pos.col
            ))),
        }
    }
}

/// Which frame an expression is translated into.
#[derive(Clone, Copy, PartialEq)]
enum Frame {
    /// The initial instant: outputs read their initial (unprimed) values;
    /// `pre` has no value here.
    Init,
    /// A transition: a bare output reads the primed (newly chosen) value,
    /// `pre(output)` the unprimed (previous) one, and inputs are the
    /// current turn's inputs.
    Step,
}

struct Ctx {
    vars: BTreeMap<String, Var>,
    /// Stateless boolean locals, inlined at use sites.
    inline: BTreeMap<String, Expr>,
}

impl Ctx {
    fn elab(&self, e: &Expr, frame: Frame, under_pre: bool) -> Result<Elab> {
        match e {
            Expr::Int(k, _) => Ok(Elab::Num(LinearTerm::constant(Rational::from_integer(
                k.clone(),
            )))),
            Expr::Real(q, _) => Ok(Elab::Num(LinearTerm::constant(q.clone()))),
            Expr::Bool(b, _) => Ok(Elab::Bool(if *b { Formula::True } else { Formula::False })),
            Expr::Ident(n, pos) => {
                if let Some(def) = self.inline.get(n) {
                    return self.elab(def, frame, under_pre);
                }
                let Some(v) = self.vars.get(n) else {
                    return Err(pos.err(format!("unknown identifier `{n}`")));
                };
                let v = self.frame_var(v, frame, under_pre, *pos)?;
                match v.sort {
                    Sort::Bool => Ok(Elab::Bool(Formula::Var(v))),
                    _ => Ok(Elab::Num(LinearTerm::var(&v))),
                }
            }
            Expr::Pre(inner, pos) => {
                if frame == Frame::Init {
                    return Err(pos.err("`pre` has no value in the initial instant"));
                }
                if under_pre {
                    return Err(pos.err("nested `pre` needs more than one step of memory"));
                }
                self.elab(inner, frame, true)
            }
            Expr::Arrow(_, _, pos) => Err(pos.err(
                "`->` is only supported at the top level of an equation",
            )),
            Expr::Unary(UnOp::Neg, inner, pos) => {
                let t = self.elab(inner, frame, under_pre)?.num(*pos)?;
                Ok(Elab::Num(t.scaled(&-Rational::from_integer(1.into()))))
            }
            Expr::Unary(UnOp::Not, inner, pos) => {
                let f = self.elab(inner, frame, under_pre)?.boolean(*pos)?;
                Ok(Elab::Bool(Formula::not(f)))
            }
            Expr::Binary(op, a, b, pos) => self.elab_binary(*op, a, b, *pos, frame, under_pre),
            Expr::Ite(c, a, b, pos) => {
                let c = self.elab(c, frame, under_pre)?.boolean(*pos)?;
                let av = self.elab(a, frame, under_pre)?;
                match av {
                    Elab::Bool(at) => {
                        let bt = self.elab(b, frame, under_pre)?.boolean(*pos)?;
                        Ok(Elab::Bool(Formula::ite(c, at, bt)))
                    }
                    Elab::Num(at) => {
                        let bt = self.elab(b, frame, under_pre)?.num(*pos)?;
                        Ok(Elab::Num(LinearTerm::ite(c, at, bt)))
                    }
                }
            }
        }
    }

    fn elab_binary(
        &self,
        op: BinOp,
        a: &Expr,
        b: &Expr,
        pos: Pos,
        frame: Frame,
        under_pre: bool,
    ) -> Result<Elab> {
        use BinOp::*;
        match op {
            And | Or | Implies => {
                let fa = self.elab(a, frame, under_pre)?.boolean(a.pos())?;
                let fb = self.elab(b, frame, under_pre)?.boolean(b.pos())?;
                Ok(Elab::Bool(match op {
                    And => Formula::and2(fa, fb),
                    Or => Formula::or2(fa, fb),
                    _ => Formula::implies(fa, fb),
                }))
            }
            Eq | Ne => {
                let av = self.elab(a, frame, under_pre)?;
                match av {
                    Elab::Bool(fa) => {
                        let fb = self.elab(b, frame, under_pre)?.boolean(b.pos())?;
                        let iff = Formula::iff(fa, fb);
                        Ok(Elab::Bool(if op == Eq { iff } else { Formula::not(iff) }))
                    }
                    Elab::Num(ta) => {
                        let tb = self.elab(b, frame, under_pre)?.num(b.pos())?;
                        let rel = if op == Eq { RelOp::Eq } else { RelOp::Ne };
                        Ok(Elab::Bool(Formula::lit(Literal::cmp(ta, rel, tb))))
                    }
                }
            }
            Lt | Le | Gt | Ge => {
                let ta = self.elab(a, frame, under_pre)?.num(a.pos())?;
                let tb = self.elab(b, frame, under_pre)?.num(b.pos())?;
                let rel = match op {
                    Lt => RelOp::Lt,
                    Le => RelOp::Le,
                    Gt => RelOp::Gt,
                    _ => RelOp::Ge,
                };
                Ok(Elab::Bool(Formula::lit(Literal::cmp(ta, rel, tb))))
            }
            Add | Sub => {
                let ta = self.elab(a, frame, under_pre)?.num(a.pos())?;
                let tb = self.elab(b, frame, under_pre)?.num(b.pos())?;
                Ok(Elab::Num(if op == Add { ta + tb } else { ta - tb }))
            }
            Mul => {
                let ta = self.elab(a, frame, under_pre)?.num(a.pos())?;
                let tb = self.elab(b, frame, under_pre)?.num(b.pos())?;
                if let Some(k) = ta.as_constant() {
                    let k = k.clone();
                    Ok(Elab::Num(tb.scaled(&k)))
                } else if let Some(k) = tb.as_constant() {
                    let k = k.clone();
                    Ok(Elab::Num(ta.scaled(&k)))
                } else {
                    Err(pos.err("nonlinear multiplication: one factor must be constant"))
                }
            }
            RealDiv => {
                use num_traits::Zero;
                let ta = self.elab(a, frame, under_pre)?.num(a.pos())?;
                let tb = self.elab(b, frame, under_pre)?.num(b.pos())?;
                let Some(k) = tb.as_constant() else {
                    return Err(pos.err("division by a non-constant"));
                };
                if k.is_zero() {
                    return Err(pos.err("division by zero"));
                }
                Ok(Elab::Num(ta.scaled(&k.recip())))
            }
            IntDiv | Mod => {
                use num_traits::Zero;
                let ta = self.elab(a, frame, under_pre)?.num(a.pos())?;
                let tb = self.elab(b, frame, under_pre)?.num(b.pos())?;
                let Some(k) = tb.as_constant() else {
                    return Err(pos.err("`div`/`mod` by a non-constant"));
                };
                if !k.is_integer() || k.is_zero() {
                    return Err(pos.err("`div`/`mod` needs a nonzero integer constant"));
                }
                let k = k.clone();
                let quot = LinearTerm::floor_div(ta.clone(), k.numer().clone())
                    .map_err(|e| pos.err(e.to_string()))?;
                if op == IntDiv {
                    Ok(Elab::Num(quot))
                } else {
                    Ok(Elab::Num(ta - quot.scaled(&k)))
                }
            }
        }
    }

    /// Map a declared variable into the requested frame.
    fn frame_var(&self, v: &Var, frame: Frame, under_pre: bool, pos: Pos) -> Result<Var> {
        match (frame, under_pre, v.role) {
            (_, false, VarRole::Input) => Ok(v.clone()),
            (_, true, VarRole::Input) => {
                Err(pos.err(format!("`pre` of input `{}` is unsupported", v.display_name())))
            }
            (Frame::Init, false, _) => Ok(v.clone()),
            (Frame::Init, true, _) => unreachable!("pre rejected in the initial frame"),
            (Frame::Step, false, _) => Ok(v.primed()),
            (Frame::Step, true, _) => Ok(v.clone()),
        }
    }
}

/// Elaborate one node into a [`Contract`].
pub fn elaborate(sc: &SourceContract) -> Result<Contract> {
    // ---- classify declarations ---------------------------------------
    let mut declared: BTreeMap<String, Sort> = BTreeMap::new();
    for (n, s) in sc.params.iter().chain(sc.locals.iter()) {
        if declared.insert(n.clone(), *s).is_some() {
            return Err(Error::Elaborate(format!("`{n}` is declared twice")));
        }
    }
    for r in &sc.realizable {
        if !sc.params.iter().any(|(n, _)| n == r) {
            return Err(Error::Elaborate(format!(
                "--%REALIZABLE `{r}` is not a parameter of `{}`",
                sc.name
            )));
        }
    }
    let mut equations: BTreeMap<&str, &Equation> = BTreeMap::new();
    for eq in &sc.equations {
        if !declared.contains_key(&eq.target) {
            return Err(eq.pos.err(format!("equation defines undeclared `{}`", eq.target)));
        }
        if sc.realizable.contains(&eq.target) {
            return Err(eq
                .pos
                .err(format!("input `{}` cannot be defined by an equation", eq.target)));
        }
        if equations.insert(&eq.target, eq).is_some() {
            return Err(eq.pos.err(format!("`{}` is defined twice", eq.target)));
        }
    }
    for p in &sc.properties {
        let Some(s) = declared.get(p) else {
            return Err(Error::Elaborate(format!("--%PROPERTY `{p}` is not declared")));
        };
        if *s != Sort::Bool {
            return Err(Error::Elaborate(format!("--%PROPERTY `{p}` is not a boolean")));
        }
        if !equations.contains_key(p.as_str()) {
            return Err(Error::Elaborate(format!("--%PROPERTY `{p}` has no defining equation")));
        }
    }

    // Stateless boolean locals are inlined away; everything else declared
    // beyond the inputs is an output.
    let is_stateful = |name: &str| {
        matches!(equations.get(name), Some(eq) if matches!(eq.value, Expr::Arrow(..)))
    };
    let mut inline: BTreeMap<String, Expr> = BTreeMap::new();
    for (n, s) in &sc.locals {
        if *s == Sort::Bool && !is_stateful(n) {
            if let Some(eq) = equations.get(n.as_str()) {
                inline.insert(n.clone(), eq.value.clone());
            }
        }
    }
    // Inlining must not be circular.
    check_cycles(&inline)?;

    let mut inputs: Vec<Var> = Vec::new();
    let mut outputs: Vec<Var> = Vec::new();
    let mut vars: BTreeMap<String, Var> = BTreeMap::new();
    for (n, s) in sc.params.iter().chain(sc.locals.iter()) {
        if inline.contains_key(n) {
            continue;
        }
        let role = if sc.realizable.contains(n) { VarRole::Input } else { VarRole::Output };
        let v = Var::new(n, *s, role);
        if role == VarRole::Input {
            inputs.push(v.clone());
        } else {
            outputs.push(v.clone());
        }
        vars.insert(n.clone(), v);
    }

    let theory = {
        let numeric: BTreeSet<Sort> = vars
            .values()
            .map(|v| v.sort)
            .filter(|s| *s != Sort::Bool)
            .collect();
        if numeric.contains(&Sort::Int) && numeric.contains(&Sort::Real) {
            return Err(Error::Elaborate(
                "mixed int and real variables in one contract are unsupported".into(),
            ));
        } else if numeric.contains(&Sort::Real) {
            Theory::Lra
        } else {
            Theory::Lia
        }
    };

    let ctx = Ctx { vars, inline };

    // ---- combinational cycle check per frame --------------------------
    let defined: BTreeSet<&str> = equations.keys().copied().collect();
    let mut init_deps: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut step_deps: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (name, eq) in &equations {
        let (init_expr, step_expr): (&Expr, &Expr) = match &eq.value {
            Expr::Arrow(a, b, _) => (a, b),
            e => (e, e),
        };
        let mut di = BTreeSet::new();
        current_frame_deps(init_expr, &defined, &ctx.inline, &mut di);
        init_deps.insert(name.to_string(), di);
        let mut ds = BTreeSet::new();
        current_frame_deps(step_expr, &defined, &ctx.inline, &mut ds);
        step_deps.insert(name.to_string(), ds);
    }
    toposort_or_cycle(&init_deps)?;
    toposort_or_cycle(&step_deps)?;

    // ---- assumptions ---------------------------------------------------
    let mut assumptions: Vec<Formula> = Vec::new();
    // A boolean input only ever takes its two honest values.
    for v in &inputs {
        if v.sort == Sort::Bool {
            assumptions.push(bool_domain(v));
        }
    }
    for a in &sc.asserts {
        assumptions.push(ctx.elab(a, Frame::Init, false)?.boolean(a.pos())?);
    }

    // ---- guarantees ----------------------------------------------------
    let mut initial: Vec<Formula> = Vec::new();
    let mut transition: Vec<Formula> = Vec::new();
    for v in &outputs {
        if v.sort == Sort::Bool {
            initial.push(bool_domain(v));
            transition.push(bool_domain(&v.primed()));
        }
    }
    for eq in &sc.equations {
        if ctx.inline.contains_key(&eq.target) {
            continue;
        }
        let v = &ctx.vars[&eq.target];
        let (init_expr, step_expr): (&Expr, &Expr) = match &eq.value {
            Expr::Arrow(a, b, _) => (a, b),
            e => (e, e),
        };
        initial.push(equation_constraint(&ctx, v, init_expr, Frame::Init)?);
        transition.push(equation_constraint(&ctx, &v.primed(), step_expr, Frame::Step)?);
    }
    for p in &sc.properties {
        let eq = equations[p.as_str()];
        if ctx.inline.contains_key(p) {
            // The defining expression itself must hold.
            initial.push(ctx.elab(&eq.value, Frame::Init, false)?.boolean(eq.pos)?);
            transition.push(ctx.elab(&eq.value, Frame::Step, false)?.boolean(eq.pos)?);
        } else {
            // A stateful property variable is pinned to true in both frames.
            let v = &ctx.vars[p];
            initial.push(Formula::Var(v.clone()));
            transition.push(Formula::Var(v.primed()));
        }
    }

    let mut contract = Contract {
        name: sc.name.clone(),
        theory,
        inputs,
        outputs,
        assumptions: Formula::and(assumptions),
        initial: Formula::and(initial),
        transition: Formula::and(transition),
    };
    lower_bool_atoms(&mut contract);
    Ok(contract)
}

/// `v = expr` as a constraint: an equivalence for booleans, an equality for
/// numerics.
fn equation_constraint(ctx: &Ctx, v: &Var, expr: &Expr, frame: Frame) -> Result<Formula> {
    match ctx.elab(expr, frame, false)? {
        Elab::Bool(f) => Ok(Formula::iff(Formula::Var(v.clone()), f)),
        Elab::Num(t) => Ok(Formula::lit(Literal::cmp(LinearTerm::var(v), RelOp::Eq, t))),
    }
}

/// `b = 0 or b = 1` for a boolean treated as an integer.
fn bool_domain(v: &Var) -> Formula {
    Formula::or2(
        Formula::lit(Literal::cmp(LinearTerm::var(v), RelOp::Eq, LinearTerm::zero())),
        Formula::lit(Literal::cmp(LinearTerm::var(v), RelOp::Eq, LinearTerm::from_int(1))),
    )
}

/// Identifiers read in the current frame (not under `pre`), with inlined
/// booleans expanded through their definitions.
fn current_frame_deps(
    e: &Expr,
    defined: &BTreeSet<&str>,
    inline: &BTreeMap<String, Expr>,
    out: &mut BTreeSet<String>,
) {
    match e {
        Expr::Ident(n, _) => {
            if defined.contains(n.as_str()) {
                out.insert(n.clone());
            }
            if let Some(def) = inline.get(n) {
                current_frame_deps(def, defined, inline, out);
            }
        }
        Expr::Pre(..) => {}
        Expr::Int(..) | Expr::Real(..) | Expr::Bool(..) => {}
        Expr::Arrow(a, b, _) | Expr::Binary(_, a, b, _) => {
            current_frame_deps(a, defined, inline, out);
            current_frame_deps(b, defined, inline, out);
        }
        Expr::Unary(_, a, _) => current_frame_deps(a, defined, inline, out),
        Expr::Ite(c, a, b, _) => {
            current_frame_deps(c, defined, inline, out);
            current_frame_deps(a, defined, inline, out);
            current_frame_deps(b, defined, inline, out);
        }
    }
}

/// Depth-first cycle detection over name dependencies.
fn toposort_or_cycle(deps: &BTreeMap<String, BTreeSet<String>>) -> Result<()> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    fn visit(
        n: &str,
        deps: &BTreeMap<String, BTreeSet<String>>,
        marks: &mut BTreeMap<String, Mark>,
    ) -> Result<()> {
        match marks.get(n) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Visiting) => {
                return Err(Error::Elaborate(format!(
                    "circular combinational definition involving `{n}`"
                )))
            }
            None => {}
        }
        marks.insert(n.to_string(), Mark::Visiting);
        if let Some(ds) = deps.get(n) {
            for d in ds {
                // Self-reference under the current frame is immediate.
                if d == n {
                    return Err(Error::Elaborate(format!(
                        "`{n}` is defined in terms of itself without `pre`"
                    )));
                }
                if deps.contains_key(d) {
                    visit(d, deps, marks)?;
                }
            }
        }
        marks.insert(n.to_string(), Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for n in deps.keys() {
        visit(n, deps, &mut marks)?;
    }
    Ok(())
}

/// Inlined boolean definitions must not refer to each other in a cycle.
fn check_cycles(inline: &BTreeMap<String, Expr>) -> Result<()> {
    let defined: BTreeSet<&str> = inline.keys().map(String::as_str).collect();
    let mut deps = BTreeMap::new();
    for (n, e) in inline {
        let mut d = BTreeSet::new();
        inline_deps(e, &defined, &mut d);
        deps.insert(n.clone(), d);
    }
    toposort_or_cycle(&deps)
}

fn inline_deps(e: &Expr, defined: &BTreeSet<&str>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Ident(n, _) => {
            if defined.contains(n.as_str()) {
                out.insert(n.clone());
            }
        }
        Expr::Int(..) | Expr::Real(..) | Expr::Bool(..) => {}
        Expr::Pre(a, _) | Expr::Unary(_, a, _) => inline_deps(a, defined, out),
        Expr::Arrow(a, b, _) | Expr::Binary(_, a, b, _) => {
            inline_deps(a, defined, out);
            inline_deps(b, defined, out);
        }
        Expr::Ite(c, a, b, _) => {
            inline_deps(c, defined, out);
            inline_deps(a, defined, out);
            inline_deps(b, defined, out);
        }
    }
}

/// Replace remaining boolean-variable atoms (`Formula::Var`) by `v = 1`
/// literals so every downstream pass sees arithmetic only.
fn lower_bool_atoms(c: &mut Contract) {
    c.assumptions = lower_formula(&c.assumptions);
    c.initial = lower_formula(&c.initial);
    c.transition = lower_formula(&c.transition);
}

fn lower_formula(f: &Formula) -> Formula {
    match f {
        Formula::Var(v) => Formula::lit(Literal::cmp(
            LinearTerm::var(v),
            RelOp::Eq,
            LinearTerm::from_int(1),
        )),
        Formula::Not(g) => Formula::not(lower_formula(g)),
        Formula::And(fs) => Formula::and(fs.iter().map(lower_formula).collect()),
        Formula::Or(fs) => Formula::or(fs.iter().map(lower_formula).collect()),
        other => other.clone(),
    }
}
