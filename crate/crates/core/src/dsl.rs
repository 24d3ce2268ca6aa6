//! The `.rwm` text format: terms, rules, algebras, systems and whole model
//! files, with positioned diagnostics and a canonical printer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::dynamics::{
    linear_system, mpnn_system, CartesianDynamicalSystem, DynamicsError, MpnnSpec, StateVector,
};
use crate::eval::{CarrierKind, EvalError, Expr, SigmaAlgebra, Value};
use crate::number::Number;
use crate::correspondence::{CorrespondenceError, RewritingModel};
use crate::rewrite::{first_occurrence_order, instance_at, iterability_witness, Identity, RewriteRule};
use crate::term::{Position, Signature, Symbol, Term, Variable, IOTA};

const MAX_EXPR_DEPTH: usize = 256;
const MAX_SIZE: usize = 1_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    fn start() -> Self {
        Span { line: 1, col: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    UnknownSymbol,
    ArityMismatch,
    NameClash,
    Iterability,
    Coverage,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    fn new(span: Span, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic {
            span,
            kind,
            message: message.into(),
        }
    }

    fn syntax(span: Span, message: impl Into<String>) -> Self {
        Diagnostic::new(span, DiagnosticKind::Syntax, message)
    }

    fn invalid(span: Span, message: impl Into<String>) -> Self {
        Diagnostic::new(span, DiagnosticKind::Invalid, message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

/// All diagnostics collected for one input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct DslError {
    pub diagnostics: Vec<Diagnostic>,
}

impl DslError {
    pub fn has(&self, kind: DiagnosticKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

fn fail<T>(mut diagnostics: Vec<Diagnostic>) -> Result<T, DslError> {
    diagnostics.sort_by_key(|d| d.span);
    Err(DslError { diagnostics })
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Slash,
    Eq,
    At,
    Arrow,
    Minus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(s) => return write!(f, "number `{s}`"),
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Slash => "`/`",
            Tok::Eq => "`=`",
            Tok::At => "`@`",
            Tok::Arrow => "`=>`",
            Tok::Minus => "`-`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(src: &str, diags: &mut Vec<Diagnostic>) -> Vec<(Tok, Span)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let at = |k: usize| chars.get(k).copied().unwrap_or('\0');
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let start = i;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() {
            while at(i).is_ascii_alphanumeric() || at(i) == '_' {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && at(i + 1).is_ascii_digit()) {
            while at(i).is_ascii_digit() || at(i) == '.' {
                i += 1;
            }
            if matches!(at(i), 'e' | 'E')
                && (at(i + 1).is_ascii_digit()
                    || (matches!(at(i + 1), '+' | '-') && at(i + 2).is_ascii_digit()))
            {
                i += 2;
                while at(i).is_ascii_digit() {
                    i += 1;
                }
            }
            Tok::Num(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '/' => Tok::Slash,
                '@' => Tok::At,
                '-' => Tok::Minus,
                '=' if at(i) == '>' => {
                    i += 1;
                    Tok::Arrow
                }
                '=' => Tok::Eq,
                other => {
                    diags.push(Diagnostic::syntax(span, format!("unexpected character {other:?}")));
                    col += 1;
                    continue;
                }
            }
        };
        col += i - start;
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    out
}

// ---------------------------------------------------------------------------
// Parser

/// A term as written: postorder nodes, `arity: None` for a bare identifier.
#[derive(Debug, Clone)]
struct RawNode {
    name: String,
    span: Span,
    arity: Option<usize>,
}

#[derive(Debug, Clone)]
struct RawTerm {
    span: Span,
    nodes: Vec<RawNode>,
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    toks: &'a [(Tok, Span)],
    depth: Vec<usize>,
    pos: usize,
    expr_depth: usize,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [(Tok, Span)]) -> Self {
        let mut depth = Vec::with_capacity(toks.len());
        let mut d = 0usize;
        for (t, _) in toks {
            if *t == Tok::RBrace {
                d = d.saturating_sub(1);
            }
            depth.push(d);
            if *t == Tok::LBrace {
                d += 1;
            }
        }
        Parser {
            toks,
            depth,
            pos: 0,
            expr_depth: 0,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        Diagnostic::syntax(self.span(), format!("expected {what}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn uint(&mut self, what: &str) -> PResult<(usize, Span)> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let span = self.bump().1;
                match s.parse::<usize>() {
                    Ok(n) if n <= MAX_SIZE => Ok((n, span)),
                    Ok(_) => Err(Diagnostic::invalid(span, format!("{what} exceeds {MAX_SIZE}"))),
                    Err(_) => Err(Diagnostic::syntax(span, format!("expected {what}, found `{s}`"))),
                }
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn number(&mut self) -> PResult<Number> {
        let neg = self.eat(Tok::Minus);
        let (mut text, span) = match self.peek().clone() {
            Tok::Num(s) => (s, self.bump().1),
            _ => return Err(self.unexpected("a number")),
        };
        if self.eat(Tok::Slash) {
            match self.peek().clone() {
                Tok::Num(d) => {
                    self.bump();
                    text = format!("{text}/{d}");
                }
                _ => return Err(self.unexpected("a denominator")),
            }
        }
        let n: Number = text
            .parse()
            .map_err(|_| Diagnostic::syntax(span, format!("malformed number `{text}`")))?;
        Ok(if neg { Number::new(-n.into_rational()) } else { n })
    }

    fn list<T>(
        &mut self,
        open: Tok,
        close: Tok,
        mut item: impl FnMut(&mut Self) -> PResult<T>,
    ) -> PResult<Vec<T>> {
        self.expect(open)?;
        let mut out = Vec::new();
        if self.eat(close.clone()) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(Tok::Comma) {
                if self.eat(close.clone()) {
                    return Ok(out);
                }
                continue;
            }
            self.expect(close)?;
            return Ok(out);
        }
    }

    fn vector(&mut self) -> PResult<Vec<Number>> {
        self.list(Tok::LBrack, Tok::RBrack, Self::number)
    }

    fn matrix(&mut self) -> PResult<Vec<Vec<Number>>> {
        self.list(Tok::LBrack, Tok::RBrack, Self::vector)
    }

    fn exprs(&mut self) -> PResult<Vec<Expr>> {
        self.list(Tok::LBrack, Tok::RBrack, Self::expr)
    }

    fn expr(&mut self) -> PResult<Expr> {
        if self.expr_depth >= MAX_EXPR_DEPTH {
            return Err(Diagnostic::syntax(self.span(), "expression nested too deeply"));
        }
        self.expr_depth += 1;
        let e = self.expr_inner();
        self.expr_depth -= 1;
        e
    }

    fn expr_inner(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Minus | Tok::Num(_) => return Ok(Expr::Num(self.number()?)),
            Tok::LBrack => return Ok(Expr::Vector(self.vector()?)),
            Tok::Ident(_) => {}
            _ => return Err(self.unexpected("an expression")),
        }
        let (name, span) = self.ident("an expression")?;
        let args = |p: &mut Self| p.list(Tok::LParen, Tok::RParen, Self::expr);
        let exact = |p: &mut Self, n: usize| -> PResult<Vec<Expr>> {
            let es = args(p)?;
            if es.len() != n {
                return Err(Diagnostic::syntax(
                    span,
                    format!("`{name}` takes {n} operand(s), found {}", es.len()),
                ));
            }
            Ok(es)
        };
        let nonempty = |p: &mut Self| -> PResult<Vec<Expr>> {
            let es = args(p)?;
            if es.is_empty() {
                return Err(Diagnostic::syntax(span, format!("`{name}` needs at least one operand")));
            }
            Ok(es)
        };
        Ok(match name.as_str() {
            "proj" => {
                self.expect(Tok::LParen)?;
                let (i, ispan) = self.uint("a projection index")?;
                self.expect(Tok::RParen)?;
                if i == 0 {
                    return Err(Diagnostic::syntax(ispan, "proj indices are 1-based"));
                }
                Expr::Proj(i)
            }
            "add" => Expr::Add(nonempty(self)?),
            "mul" => Expr::Mul(nonempty(self)?),
            "tuple" => Expr::Tuple(nonempty(self)?),
            "sub" => {
                let mut es = exact(self, 2)?;
                let b = es.pop().expect("two operands");
                let a = es.pop().expect("two operands");
                Expr::sub(a, b)
            }
            "neg" => Expr::Neg(Box::new(exact(self, 1)?.remove(0))),
            "tanh" => Expr::Tanh(Box::new(exact(self, 1)?.remove(0))),
            "compose" => {
                let mut es = nonempty(self)?;
                let outer = es.remove(0);
                Expr::compose(outer, es)
            }
            "affine" => {
                self.expect(Tok::LParen)?;
                let matrix = self.matrix()?;
                self.expect(Tok::Comma)?;
                let bias = self.vector()?;
                self.expect(Tok::RParen)?;
                Expr::Affine { matrix, bias }
            }
            "cons" => {
                self.expect(Tok::LParen)?;
                let (sym, sspan) = self.ident("a symbol")?;
                self.expect(Tok::Slash)?;
                let (arity, _) = self.uint("an arity")?;
                self.expect(Tok::RParen)?;
                Expr::Cons(
                    Symbol::new(&sym, arity).map_err(|e| Diagnostic::invalid(sspan, e.to_string()))?,
                )
            }
            other => {
                return Err(Diagnostic::syntax(
                    span,
                    format!(
                        "unknown operation `{other}`; expected proj, add, sub, mul, neg, tanh, affine, compose, tuple or cons"
                    ),
                ))
            }
        })
    }

    /// Terms are parsed with an explicit stack so nesting depth is unbounded.
    fn term(&mut self) -> PResult<RawTerm> {
        let span = self.span();
        let mut nodes = Vec::new();
        let mut open: Vec<(String, Span, usize)> = Vec::new();
        loop {
            let (name, nspan) = self.ident("a term")?;
            if self.eat(Tok::LParen) {
                open.push((name, nspan, 0));
                continue;
            }
            nodes.push(RawNode {
                name,
                span: nspan,
                arity: None,
            });
            loop {
                let Some(top) = open.last_mut() else {
                    return Ok(RawTerm { span, nodes });
                };
                top.2 += 1;
                if self.eat(Tok::Comma) {
                    break;
                }
                if self.eat(Tok::RParen) {
                    let (name, nspan, k) = open.pop().expect("non-empty");
                    nodes.push(RawNode {
                        name,
                        span: nspan,
                        arity: Some(k),
                    });
                    continue;
                }
                return Err(self.unexpected("`,` or `)`"));
            }
        }
    }

    fn carrier(&mut self) -> PResult<CarrierKind> {
        let (name, span) = self.ident("a carrier")?;
        match name.as_str() {
            "rational" => Ok(CarrierKind::Rational),
            "float" => Ok(CarrierKind::Float),
            "term" => Ok(CarrierKind::Term),
            "vector" => {
                self.expect(Tok::LParen)?;
                let (n, nspan) = self.uint("a vector length")?;
                self.expect(Tok::RParen)?;
                if n == 0 {
                    return Err(Diagnostic::syntax(nspan, "vector carrier needs a positive length"));
                }
                Ok(CarrierKind::Vector(n))
            }
            other => Err(Diagnostic::syntax(
                span,
                format!("unknown carrier `{other}`; expected rational, float, vector(k) or term"),
            )),
        }
    }

    fn position(&mut self) -> PResult<(Position, Span)> {
        let (tok, span) = self.bump();
        let text = match tok {
            Tok::Ident(s) | Tok::Num(s) => s,
            other => {
                return Err(Diagnostic::syntax(span, format!("expected a position, found {other}")))
            }
        };
        Position::parse(&text)
            .map(|p| (p, span))
            .map_err(|e| Diagnostic::syntax(span, format!("invalid position `{text}`: {e}")))
    }

    /// Skips to the next top-level block keyword.
    fn sync_top(&mut self) {
        let from = self.pos;
        while !self.at_eof() {
            if self.pos > from
                && self.depth[self.pos] == 0
                && matches!(self.peek(), Tok::Ident(s) if BLOCKS.contains(&s.as_str()))
                && matches!(self.toks[self.pos - 1].0, Tok::Semi | Tok::RBrace)
            {
                return;
            }
            self.bump();
        }
    }

    /// Skips past the current `;`-terminated entry of a block at `inner` depth.
    fn sync_entry(&mut self, inner: usize) {
        while !self.at_eof() {
            let d = self.depth[self.pos];
            match self.peek() {
                Tok::Semi if d == inner => {
                    self.bump();
                    return;
                }
                Tok::RBrace if d < inner => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Parses `{ entry* }`, recovering at `;` after a bad entry.
    fn block_entries(
        &mut self,
        diags: &mut Vec<Diagnostic>,
        mut entry: impl FnMut(&mut Self, &mut Vec<Diagnostic>) -> PResult<()>,
    ) -> PResult<()> {
        self.expect(Tok::LBrace)?;
        let inner = self.depth[self.pos];
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(());
                }
                Tok::Eof => return Err(self.unexpected("`}`")),
                _ => {
                    if let Err(d) = entry(self, diags) {
                        diags.push(d);
                        self.sync_entry(inner);
                    }
                }
            }
        }
    }
}

const BLOCKS: &[&str] = &["signature", "variables", "rule", "algebra", "initial", "system", "mpnn"];

#[derive(Debug, Clone)]
enum RawInitial {
    Term(RawTerm),
    State(Vec<Expr>),
}

#[derive(Debug, Clone)]
struct RawRule {
    span: Span,
    lhs: RawTerm,
    rhs: RawTerm,
    position: Position,
    checked: bool,
}

#[derive(Debug, Clone)]
struct RawAlgebra {
    span: Span,
    carrier: CarrierKind,
    entries: Vec<(String, Span, Expr)>,
}

#[derive(Debug, Clone)]
struct RawEdge {
    span: Span,
    from: usize,
    to: usize,
    label: Option<Vec<Number>>,
    directed: bool,
}

#[derive(Debug, Clone, Default)]
struct RawSystem {
    span: Span,
    mpnn: bool,
    carrier: Option<CarrierKind>,
    items: BTreeMap<&'static str, Span>,
    matrix: Option<Vec<Vec<Number>>>,
    functional: Option<Vec<Number>>,
    dim: Option<usize>,
    transition: Option<Vec<Expr>>,
    output: Option<Expr>,
    context: Option<Expr>,
    vertices: Option<usize>,
    hidden: Option<usize>,
    labels: Option<usize>,
    edges: Vec<RawEdge>,
    message: Option<Vec<Expr>>,
    update: Option<Vec<Expr>>,
    readout: Option<Expr>,
}

#[derive(Debug, Default)]
struct RawFile {
    signature: Option<(Span, Vec<(String, usize, Span)>)>,
    variables: Option<(Span, Vec<(String, Span)>)>,
    rule: Option<RawRule>,
    algebra: Option<RawAlgebra>,
    initial: Option<(Span, RawInitial)>,
    system: Option<RawSystem>,
}

fn set_once<T>(slot: &mut Option<T>, value: T, span: Span, what: &str, diags: &mut Vec<Diagnostic>) {
    if slot.is_some() {
        diags.push(Diagnostic::invalid(span, format!("duplicate `{what}`")));
    } else {
        *slot = Some(value);
    }
}

fn parse_raw(src: &str) -> (RawFile, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let toks = lex(src, &mut diags);
    let mut p = Parser::new(&toks);
    let mut file = RawFile::default();
    while !p.at_eof() {
        if let Err(d) = parse_block(&mut p, &mut file, &mut diags) {
            diags.push(d);
            p.sync_top();
        }
    }
    (file, diags)
}

fn parse_block(p: &mut Parser<'_>, file: &mut RawFile, diags: &mut Vec<Diagnostic>) -> PResult<()> {
    let (kw, span) = match p.peek() {
        Tok::Ident(s) if BLOCKS.contains(&s.as_str()) => {
            let s = s.clone();
            (s, p.bump().1)
        }
        _ => {
            return Err(p.unexpected(
                "a block (signature, variables, rule, algebra, initial, system or mpnn)",
            ))
        }
    };
    match kw.as_str() {
        "signature" => {
            let decls = p.list(Tok::LBrace, Tok::RBrace, |p| {
                let (name, s) = p.ident("a symbol name")?;
                p.expect(Tok::Slash)?;
                let (arity, _) = p.uint("an arity")?;
                Ok((name, arity, s))
            })?;
            set_once(&mut file.signature, (span, decls), span, "signature", diags);
        }
        "variables" => {
            let vars = p.list(Tok::LBrace, Tok::RBrace, |p| p.ident("a variable name"))?;
            set_once(&mut file.variables, (span, vars), span, "variables", diags);
        }
        "rule" => {
            let lhs = p.term()?;
            p.expect(Tok::Arrow)?;
            let rhs = p.term()?;
            p.expect(Tok::At)?;
            let (position, _) = p.position()?;
            let checked = if p.is_keyword("unchecked") {
                p.bump();
                false
            } else {
                true
            };
            p.expect(Tok::Semi)?;
            let rule = RawRule {
                span,
                lhs,
                rhs,
                position,
                checked,
            };
            set_once(&mut file.rule, rule, span, "rule", diags);
        }
        "algebra" => {
            let carrier = p.carrier()?;
            let mut entries = Vec::new();
            p.block_entries(diags, |p, _| {
                let (name, s) = p.ident("a symbol name")?;
                p.expect(Tok::Eq)?;
                let e = p.expr()?;
                p.expect(Tok::Semi)?;
                entries.push((name, s, e));
                Ok(())
            })?;
            let alg = RawAlgebra {
                span,
                carrier,
                entries,
            };
            set_once(&mut file.algebra, alg, span, "algebra", diags);
        }
        "initial" => {
            let init = if *p.peek() == Tok::LBrack {
                RawInitial::State(p.list(Tok::LBrack, Tok::RBrack, |p| match p.peek() {
                    Tok::LBrack => Ok(Expr::Vector(p.vector()?)),
                    _ => Ok(Expr::Num(p.number()?)),
                })?)
            } else {
                RawInitial::Term(p.term()?)
            };
            p.expect(Tok::Semi)?;
            set_once(&mut file.initial, (span, init), span, "initial", diags);
        }
        "system" | "mpnn" => {
            let mut sys = RawSystem {
                span,
                mpnn: kw == "mpnn",
                carrier: Some(p.carrier()?),
                ..RawSystem::default()
            };
            p.block_entries(diags, |p, diags| system_item(p, &mut sys, diags))?;
            set_once(&mut file.system, sys, span, "system", diags);
        }
        _ => unreachable!("keyword list is closed"),
    }
    Ok(())
}

fn system_item(p: &mut Parser<'_>, sys: &mut RawSystem, diags: &mut Vec<Diagnostic>) -> PResult<()> {
    let (name, span) = p.ident("a system item")?;
    const SYSTEM_ITEMS: &[&str] = &["matrix", "functional", "dim", "transition", "output", "context"];
    const MPNN_ITEMS: &[&str] = &[
        "vertices", "hidden", "labels", "edge", "arc", "message", "update", "readout",
    ];
    let allowed = if sys.mpnn { MPNN_ITEMS } else { SYSTEM_ITEMS };
    let Some(&key) = allowed.iter().find(|k| **k == name) else {
        return Err(Diagnostic::syntax(
            span,
            format!("unknown item `{name}`; expected one of {}", allowed.join(", ")),
        ));
    };
    if key != "edge" && key != "arc" && sys.items.insert(key, span).is_some() {
        diags.push(Diagnostic::invalid(span, format!("duplicate `{key}`")));
    }
    match key {
        "matrix" => sys.matrix = Some(p.matrix()?),
        "functional" => sys.functional = Some(p.vector()?),
        "dim" => sys.dim = Some(p.uint("a dimension")?.0),
        "transition" => sys.transition = Some(p.exprs()?),
        "output" => sys.output = Some(p.expr()?),
        "context" => sys.context = Some(p.expr()?),
        "vertices" => sys.vertices = Some(p.uint("a vertex count")?.0),
        "hidden" => sys.hidden = Some(p.uint("a hidden dimension")?.0),
        "labels" => sys.labels = Some(p.uint("a label dimension")?.0),
        "message" => sys.message = Some(p.exprs()?),
        "update" => sys.update = Some(p.exprs()?),
        "readout" => sys.readout = Some(p.expr()?),
        "edge" | "arc" => {
            let (from, _) = p.uint("a vertex")?;
            let (to, _) = p.uint("a vertex")?;
            let label = if *p.peek() == Tok::LBrack {
                Some(p.vector()?)
            } else {
                None
            };
            sys.edges.push(RawEdge {
                span,
                from,
                to,
                label,
                directed: key == "arc",
            });
        }
        _ => unreachable!("item list is closed"),
    }
    p.expect(Tok::Semi)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Resolution

fn resolve_term(
    raw: &RawTerm,
    sig: &Signature,
    vars: &BTreeSet<Variable>,
    diags: &mut Vec<Diagnostic>,
) -> Option<Term> {
    let before = diags.len();
    let placeholder = || Term::var(Variable::new("hole").expect("placeholder name"));
    let mut stack: Vec<Term> = Vec::new();
    for node in &raw.nodes {
        let k = node.arity.unwrap_or(0);
        let args = stack.split_off(stack.len() - k);
        let sym = if node.name == IOTA {
            Some(Symbol::iota())
        } else {
            sig.lookup(&node.name)
        };
        let built = match (sym, node.arity) {
            (Some(sym), _) if sym.arity() == k => {
                Some(Term::apply(sym, args).expect("arity checked"))
            }
            (Some(sym), _) => {
                diags.push(Diagnostic::new(
                    node.span,
                    DiagnosticKind::ArityMismatch,
                    format!("`{}` has arity {} but is applied to {k} argument(s)", sym.name(), sym.arity()),
                ));
                None
            }
            (None, None) => match Variable::new(&node.name) {
                Ok(v) if vars.contains(&v) => Some(Term::var(v)),
                _ => {
                    diags.push(Diagnostic::new(
                        node.span,
                        DiagnosticKind::UnknownSymbol,
                        format!("`{}` is neither a declared constant nor a declared variable", node.name),
                    ));
                    None
                }
            },
            (None, Some(_)) => {
                diags.push(Diagnostic::new(
                    node.span,
                    DiagnosticKind::UnknownSymbol,
                    format!("unknown symbol `{}`", node.name),
                ));
                None
            }
        };
        stack.push(built.unwrap_or_else(placeholder));
    }
    if diags.len() > before {
        return None;
    }
    stack.pop()
}

fn one_term(src: &str) -> Result<RawTerm, DslError> {
    let mut diags = Vec::new();
    let toks = lex(src, &mut diags);
    let mut p = Parser::new(&toks);
    match p.term() {
        Ok(raw) => {
            if !p.at_eof() {
                diags.push(p.unexpected("end of input"));
            }
            if diags.is_empty() {
                return Ok(raw);
            }
        }
        Err(d) => diags.push(d),
    }
    fail(diags)
}

/// Parses a term over `sig`; bare identifiers that are not constants must be
/// in `vars`. `iota` is always available.
pub fn parse_term(src: &str, sig: &Signature, vars: &BTreeSet<Variable>) -> Result<Term, DslError> {
    let raw = one_term(src)?;
    let mut diags = Vec::new();
    match resolve_term(&raw, sig, vars, &mut diags) {
        Some(t) => Ok(t),
        None => fail(diags),
    }
}

/// Parses a term and infers its signature. Bare identifiers for which
/// `is_var` holds become variables; everything else is an operator whose
/// arity is read off its uses.
pub fn parse_term_inferred(
    src: &str,
    is_var: impl Fn(&str) -> bool,
) -> Result<(Term, Signature), DslError> {
    let raw = one_term(src)?;
    let mut sig = Signature::default();
    let mut vars = BTreeSet::new();
    let mut diags = Vec::new();
    for node in &raw.nodes {
        if node.name == IOTA {
            sig = sig.with_identity();
            continue;
        }
        if node.arity.is_none() && is_var(&node.name) {
            match Variable::new(&node.name) {
                Ok(v) => {
                    vars.insert(v);
                }
                Err(e) => diags.push(Diagnostic::invalid(node.span, e.to_string())),
            }
            continue;
        }
        let inserted = Symbol::new(&node.name, node.arity.unwrap_or(0)).and_then(|s| sig.insert(s));
        if let Err(e) = inserted {
            diags.push(Diagnostic::new(node.span, DiagnosticKind::ArityMismatch, e.to_string()));
        }
    }
    if !diags.is_empty() {
        return fail(diags);
    }
    match resolve_term(&raw, &sig, &vars, &mut diags) {
        Some(t) => Ok((t, sig)),
        None => fail(diags),
    }
}

/// Canonical text of a term: no whitespace, `iota` spelled out.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

/// `e` for the root, otherwise dot-separated positive indices.
pub fn parse_position(src: &str) -> Result<Position, DslError> {
    Position::parse(src.trim()).map_err(|e| DslError {
        diagnostics: vec![Diagnostic::syntax(
            Span::start(),
            format!("invalid position `{src}`: {e}"),
        )],
    })
}

// ---------------------------------------------------------------------------
// Model files

/// A validated model file: either a rewriting model or a dynamical system.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Rewriting(RewritingFile),
    System(SystemFile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewritingFile {
    /// Always extended by `iota`.
    pub signature: Signature,
    pub variables: Vec<Variable>,
    pub rule: RewriteRule,
    /// False for rules marked `unchecked`, which may be applied but not iterated
    /// indefinitely.
    pub checked: bool,
    pub algebra: SigmaAlgebra,
    pub initial: Term,
}

impl RewritingFile {
    pub fn is_iterable(&self) -> bool {
        iterability_witness(&self.rule.identity).is_some()
    }

    pub fn from_model(m: &RewritingModel) -> Self {
        RewritingFile {
            signature: m.algebra().signature().clone().with_identity(),
            variables: first_occurrence_order(m.rule().lhs()),
            rule: m.rule().clone(),
            checked: true,
            algebra: m.algebra().clone(),
            initial: m.initial().clone(),
        }
    }

    pub fn model(&self) -> Result<RewritingModel, CorrespondenceError> {
        RewritingModel::new(self.rule.clone(), self.algebra.clone(), self.initial.clone())
    }

    pub fn with_carrier(&self, carrier: CarrierKind) -> Self {
        RewritingFile {
            algebra: self.algebra.with_carrier(carrier),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemBody {
    Linear {
        matrix: Vec<Vec<Number>>,
        functional: Vec<Number>,
    },
    General {
        transition: Vec<Expr>,
        output: Expr,
    },
    Mpnn(MpnnSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub carrier: CarrierKind,
    pub body: SystemBody,
    /// Applied after the output map.
    pub context: Option<Expr>,
    /// Literal initial state, one number or vector per coordinate.
    pub initial: Vec<Expr>,
}

impl SystemFile {
    pub fn dim(&self) -> usize {
        match &self.body {
            SystemBody::Linear { matrix, .. } => matrix.len(),
            SystemBody::General { transition, .. } => transition.len(),
            SystemBody::Mpnn(spec) => spec.vertices() * spec.hidden_dim,
        }
    }

    /// The system with its context folded into the output map.
    pub fn system(&self) -> Result<CartesianDynamicalSystem, DynamicsError> {
        let sys = match &self.body {
            SystemBody::Linear { matrix, functional } => {
                linear_system(self.carrier, matrix.clone(), functional.clone())?
            }
            SystemBody::General { transition, output } => {
                CartesianDynamicalSystem::new(self.carrier, transition.clone(), output.clone())?
            }
            SystemBody::Mpnn(spec) => mpnn_system(&MpnnSpec {
                carrier: self.carrier,
                ..spec.clone()
            })?,
        };
        Ok(match &self.context {
            Some(c) => sys.map_output(c.clone()),
            None => sys,
        })
    }

    pub fn initial_state(&self) -> Result<StateVector, EvalError> {
        self.initial.iter().map(|e| e.apply(&[], self.carrier)).collect()
    }

    pub fn with_carrier(&self, carrier: CarrierKind) -> Self {
        let mut out = self.clone();
        out.carrier = carrier;
        if let SystemBody::Mpnn(spec) = &mut out.body {
            spec.carrier = carrier;
        }
        out
    }

    /// Writes an arbitrary system in `transition`/`output` form.
    pub fn general(
        sys: &CartesianDynamicalSystem,
        x0: &[Value],
        context: Option<Expr>,
    ) -> Result<Self, EvalError> {
        Ok(SystemFile {
            carrier: sys.carrier(),
            body: SystemBody::General {
                transition: sys.transition().to_vec(),
                output: sys.output().clone(),
            },
            context,
            initial: x0.iter().map(value_literal).collect::<Result<_, _>>()?,
        })
    }
}

/// A carrier value as a literal expression.
pub fn value_literal(v: &Value) -> Result<Expr, EvalError> {
    let num = |x: f64| {
        Number::from_f64(x).ok_or_else(|| EvalError::CarrierMismatch(format!("{x} is not finite")))
    };
    match v {
        Value::Rational(r) => Ok(Expr::Num(Number::new(r.clone()))),
        Value::Float(x) => Ok(Expr::Num(num(*x)?)),
        Value::Vector(xs) => Ok(Expr::Vector(xs.iter().map(|&x| num(x)).collect::<Result<_, _>>()?)),
        Value::Term(_) => Err(EvalError::Unsupported {
            op: "literal",
            carrier: "term".into(),
        }),
    }
}

/// Parses and validates a model file, reporting every problem found.
pub fn parse_model(src: &str) -> Result<ModelFile, DslError> {
    let (raw, mut diags) = parse_raw(src);
    let model = validate(raw, &mut diags);
    match model {
        Some(m) if diags.is_empty() => Ok(m),
        _ => {
            if diags.is_empty() {
                diags.push(Diagnostic::invalid(Span::start(), "invalid model"));
            }
            fail(diags)
        }
    }
}

fn validate(raw: RawFile, diags: &mut Vec<Diagnostic>) -> Option<ModelFile> {
    match (&raw.rule, &raw.system) {
        (Some(rule), Some(sys)) => {
            diags.push(Diagnostic::invalid(
                sys.span.max(rule.span),
                "a file describes either a rewriting model or a system, not both",
            ));
            None
        }
        (Some(_), None) => validate_rewriting(raw, diags).map(ModelFile::Rewriting),
        (None, Some(_)) => validate_system(raw, diags).map(ModelFile::System),
        (None, None) => {
            diags.push(Diagnostic::invalid(
                Span::start(),
                "file declares neither a rule nor a system",
            ));
            None
        }
    }
}

fn validate_rewriting(raw: RawFile, diags: &mut Vec<Diagnostic>) -> Option<RewritingFile> {
    let before = diags.len();
    let rule = raw.rule.expect("caller checked");

    let mut sig = Signature::default().with_identity();
    for (name, arity, span) in raw.signature.map(|s| s.1).unwrap_or_default() {
        if name == IOTA {
            if arity != 1 {
                diags.push(Diagnostic::invalid(span, "`iota` is reserved for the unary identity"));
            }
            continue;
        }
        if let Err(e) = Symbol::new(&name, arity).and_then(|s| sig.insert(s)) {
            diags.push(Diagnostic::invalid(span, e.to_string()));
        }
    }

    let mut var_list = Vec::new();
    let mut vars = BTreeSet::new();
    for (name, span) in raw.variables.map(|v| v.1).unwrap_or_default() {
        match Variable::new(&name) {
            Err(e) => diags.push(Diagnostic::invalid(span, e.to_string())),
            Ok(v) => {
                if sig.lookup(&name).is_some() {
                    diags.push(Diagnostic::new(
                        span,
                        DiagnosticKind::NameClash,
                        format!("`{name}` is declared both as a symbol and as a variable"),
                    ));
                } else if !vars.insert(v.clone()) {
                    diags.push(Diagnostic::invalid(span, format!("variable `{name}` declared twice")));
                } else {
                    var_list.push(v);
                }
            }
        }
    }

    let lhs = resolve_term(&rule.lhs, &sig, &vars, diags);
    let rhs = resolve_term(&rule.rhs, &sig, &vars, diags);
    let identity = match (lhs, rhs) {
        (Some(l), Some(r)) => match Identity::new(l, r) {
            Ok(id) => {
                if rule.checked && iterability_witness(&id).is_none() {
                    diags.push(Diagnostic::new(
                        rule.rhs.span,
                        DiagnosticKind::Iterability,
                        "right-hand side is not an instance of the left-hand side (no τ with r = τ(l)), so the rule cannot be iterated; mark it `unchecked` to allow single steps",
                    ));
                }
                Some(id)
            }
            Err(e) => {
                diags.push(Diagnostic::invalid(rule.span, e.to_string()));
                None
            }
        },
        _ => None,
    };

    let algebra = match raw.algebra {
        None => {
            diags.push(Diagnostic::new(rule.span, DiagnosticKind::Coverage, "missing `algebra` block"));
            None
        }
        Some(alg) => build_algebra(alg, &sig, diags),
    };

    let initial = match raw.initial {
        None => {
            diags.push(Diagnostic::invalid(rule.span, "missing `initial` term"));
            None
        }
        Some((span, RawInitial::State(_))) => {
            diags.push(Diagnostic::invalid(span, "a rewriting model starts from a ground term, not a state vector"));
            None
        }
        Some((span, RawInitial::Term(t))) => {
            let t0 = resolve_term(&t, &sig, &vars, diags);
            match (&t0, &identity) {
                (Some(t0), _) if !t0.is_ground() => {
                    diags.push(Diagnostic::invalid(span, "initial term must be ground"));
                }
                (Some(t0), Some(id)) if !instance_at(t0, id.lhs(), &rule.position) => {
                    diags.push(Diagnostic::invalid(
                        span,
                        format!(
                            "initial term has no instance of the left-hand side at position {}",
                            rule.position
                        ),
                    ));
                }
                _ => {}
            }
            t0
        }
    };

    if diags.len() > before {
        return None;
    }
    Some(RewritingFile {
        signature: sig,
        variables: var_list,
        rule: RewriteRule::new(identity?, rule.position),
        checked: rule.checked,
        algebra: algebra?,
        initial: initial?,
    })
}

fn build_algebra(alg: RawAlgebra, sig: &Signature, diags: &mut Vec<Diagnostic>) -> Option<SigmaAlgebra> {
    let mut interps = BTreeMap::new();
    let mut ok = true;
    for (name, span, expr) in alg.entries {
        if name == IOTA {
            diags.push(Diagnostic::invalid(span, "`iota` is always the identity and cannot be reinterpreted"));
            ok = false;
            continue;
        }
        let Some(sym) = sig.lookup(&name) else {
            diags.push(Diagnostic::new(
                span,
                DiagnosticKind::UnknownSymbol,
                format!("interpretation given for undeclared symbol `{name}`"),
            ));
            ok = false;
            continue;
        };
        if interps.insert(sym, expr).is_some() {
            diags.push(Diagnostic::invalid(span, format!("`{name}` interpreted twice")));
            ok = false;
        }
    }
    if alg.carrier == CarrierKind::Term {
        for sym in sig.symbols() {
            interps.entry(sym.clone()).or_insert_with(|| Expr::Cons(sym.clone()));
        }
    }
    match SigmaAlgebra::new(sig.clone(), alg.carrier, interps) {
        Ok(a) if ok => Some(a),
        Ok(_) => None,
        Err(errors) => {
            for e in errors {
                let kind = match e {
                    crate::eval::AlgebraError::MissingInterpretation(_) => DiagnosticKind::Coverage,
                    _ => DiagnosticKind::Invalid,
                };
                diags.push(Diagnostic::new(alg.span, kind, e.to_string()));
            }
            None
        }
    }
}

fn validate_system(raw: RawFile, diags: &mut Vec<Diagnostic>) -> Option<SystemFile> {
    let before = diags.len();
    let sys = raw.system.expect("caller checked");
    for (present, span, what) in [
        (raw.signature.as_ref().map(|s| s.0), "signature"),
        (raw.variables.as_ref().map(|s| s.0), "variables"),
        (raw.algebra.as_ref().map(|s| s.span), "algebra"),
    ]
    .map(|(s, w)| (s.is_some(), s.unwrap_or_default(), w))
    {
        if present {
            diags.push(Diagnostic::invalid(span, format!("`{what}` has no meaning in a system file")));
        }
    }
    let carrier = sys.carrier.expect("parsed with a carrier");
    if carrier == CarrierKind::Term {
        diags.push(Diagnostic::invalid(sys.span, "systems need a numeric carrier"));
        return None;
    }
    let item_span = |k: &str| sys.items.get(k).copied().unwrap_or(sys.span);
    let require = |v: bool, k: &str, diags: &mut Vec<Diagnostic>| {
        if !v {
            diags.push(Diagnostic::invalid(sys.span, format!("missing `{k}`")));
        }
    };

    let body = if sys.mpnn {
        require(sys.vertices.is_some(), "vertices", diags);
        require(sys.hidden.is_some(), "hidden", diags);
        require(sys.message.is_some(), "message", diags);
        require(sys.update.is_some(), "update", diags);
        require(sys.readout.is_some(), "readout", diags);
        let n = sys.vertices.unwrap_or(0);
        let label_dim = sys.labels.unwrap_or(0);
        if n.saturating_mul(sys.hidden.unwrap_or(0)) > MAX_SIZE {
            diags.push(Diagnostic::invalid(item_span("hidden"), "state dimension too large"));
            return None;
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut edge_labels = BTreeMap::new();
        for e in &sys.edges {
            if e.from == 0 || e.to == 0 || e.from > n || e.to > n {
                diags.push(Diagnostic::invalid(
                    e.span,
                    format!("edge names vertex outside 1..{n}"),
                ));
                continue;
            }
            if let Some(l) = &e.label {
                if l.len() != label_dim {
                    diags.push(Diagnostic::invalid(
                        e.span,
                        format!("edge label has length {}, expected {label_dim}", l.len()),
                    ));
                    continue;
                }
            }
            let (v, w) = (e.from - 1, e.to - 1);
            let mut add = |v: usize, w: usize| {
                neighbors[v].push(w);
                if let Some(l) = &e.label {
                    edge_labels.insert((v, w), l.clone());
                }
            };
            add(v, w);
            if !e.directed && v != w {
                add(w, v);
            }
        }
        SystemBody::Mpnn(MpnnSpec {
            carrier,
            hidden_dim: sys.hidden.unwrap_or(0),
            neighbors,
            label_dim,
            edge_labels,
            message: sys.message.clone().unwrap_or_default(),
            update: sys.update.clone().unwrap_or_default(),
            readout: sys.readout.clone().unwrap_or(Expr::Proj(1)),
        })
    } else if sys.matrix.is_some() || sys.functional.is_some() {
        require(sys.matrix.is_some(), "matrix", diags);
        require(sys.functional.is_some(), "functional", diags);
        for k in ["dim", "transition", "output"] {
            if sys.items.contains_key(k) {
                diags.push(Diagnostic::invalid(
                    item_span(k),
                    format!("`{k}` cannot be combined with `matrix`/`functional`"),
                ));
            }
        }
        SystemBody::Linear {
            matrix: sys.matrix.clone().unwrap_or_default(),
            functional: sys.functional.clone().unwrap_or_default(),
        }
    } else {
        require(sys.transition.is_some(), "transition", diags);
        require(sys.output.is_some(), "output", diags);
        let transition = sys.transition.clone().unwrap_or_default();
        if let Some(d) = sys.dim {
            if d != transition.len() {
                diags.push(Diagnostic::invalid(
                    item_span("dim"),
                    format!("`dim {d}` but {} transition component(s) given", transition.len()),
                ));
            }
        }
        SystemBody::General {
            transition,
            output: sys.output.clone().unwrap_or(Expr::Proj(1)),
        }
    };
    if let Some(c) = &sys.context {
        if let Err(m) = c.validate() {
            diags.push(Diagnostic::invalid(item_span("context"), m));
        } else if c.max_proj().is_none_or(|m| m > 1) {
            diags.push(Diagnostic::invalid(
                item_span("context"),
                "context is a function of one value and may only read proj(1)",
            ));
        }
    }
    if diags.len() > before {
        return None;
    }

    let initial = match raw.initial {
        Some((_, RawInitial::State(v))) => v,
        Some((span, RawInitial::Term(_))) => {
            diags.push(Diagnostic::invalid(span, "a system starts from a state vector `[..]`"));
            return None;
        }
        None => {
            diags.push(Diagnostic::invalid(sys.span, "missing `initial` state"));
            return None;
        }
    };
    let file = SystemFile {
        carrier,
        body,
        context: sys.context,
        initial,
    };
    if let Err(e) = file.system() {
        diags.push(Diagnostic::invalid(sys.span, e.to_string()));
        return None;
    }
    let init_span = sys.span;
    if file.initial.len() != file.dim() {
        diags.push(Diagnostic::invalid(
            init_span,
            format!("initial state has {} entries, system dimension is {}", file.initial.len(), file.dim()),
        ));
        return None;
    }
    if let Err(e) = file.initial_state() {
        diags.push(Diagnostic::invalid(init_span, format!("initial state: {e}")));
        return None;
    }
    Some(file)
}

// ---------------------------------------------------------------------------
// Printing

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn vector_text(v: &[Number]) -> String {
    format!("[{}]", join(v))
}

fn matrix_text(m: &[Vec<Number>]) -> String {
    format!("[{}]", m.iter().map(|r| vector_text(r)).collect::<Vec<_>>().join(","))
}

/// Canonical text of a model file.
pub fn print(model: &ModelFile) -> String {
    let mut s = String::new();
    match model {
        ModelFile::Rewriting(m) => {
            let decls: Vec<String> = m.signature.symbols().iter().map(Symbol::to_string).collect();
            let _ = writeln!(s, "signature {{ {} }}", decls.join(", "));
            let vars: Vec<&str> = m.variables.iter().map(Variable::name).collect();
            let _ = writeln!(s, "variables {{ {} }}", vars.join(", "));
            let _ = writeln!(
                s,
                "rule {} => {} @ {}{};",
                m.rule.lhs(),
                m.rule.rhs(),
                m.rule.position,
                if m.checked { "" } else { " unchecked" }
            );
            let _ = writeln!(s, "algebra {} {{", m.algebra.carrier());
            for sym in m.signature.symbols() {
                if let Some(e) = m.algebra.interpretations().get(sym) {
                    let _ = writeln!(s, "  {} = {e};", sym.name());
                }
            }
            let _ = writeln!(s, "}}");
            let _ = writeln!(s, "initial {};", m.initial);
        }
        ModelFile::System(f) => {
            match &f.body {
                SystemBody::Linear { matrix, functional } => {
                    let _ = writeln!(s, "system {} {{", f.carrier);
                    let _ = writeln!(s, "  matrix {};", matrix_text(matrix));
                    let _ = writeln!(s, "  functional {};", vector_text(functional));
                }
                SystemBody::General { transition, output } => {
                    let _ = writeln!(s, "system {} {{", f.carrier);
                    let _ = writeln!(s, "  dim {};", transition.len());
                    let _ = writeln!(s, "  transition [{}];", join(transition));
                    let _ = writeln!(s, "  output {output};");
                }
                SystemBody::Mpnn(spec) => {
                    let _ = writeln!(s, "mpnn {} {{", f.carrier);
                    let _ = writeln!(s, "  vertices {};", spec.vertices());
                    let _ = writeln!(s, "  hidden {};", spec.hidden_dim);
                    let _ = writeln!(s, "  labels {};", spec.label_dim);
                    for (v, ns) in spec.neighbors.iter().enumerate() {
                        for &w in ns {
                            let _ = write!(s, "  arc {} {}", v + 1, w + 1);
                            if let Some(l) = spec.edge_labels.get(&(v, w)) {
                                let _ = write!(s, " {}", vector_text(l));
                            }
                            let _ = writeln!(s, ";");
                        }
                    }
                    let _ = writeln!(s, "  message [{}];", join(&spec.message));
                    let _ = writeln!(s, "  update [{}];", join(&spec.update));
                    let _ = writeln!(s, "  readout {};", spec.readout);
                }
            }
            if let Some(c) = &f.context {
                let _ = writeln!(s, "  context {c};");
            }
            let _ = writeln!(s, "}}");
            let _ = writeln!(s, "initial [{}];", join(&f.initial));
        }
    }
    s
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

/// Helpers for writing terms tersely in tests: identifiers starting with
/// `u`..`z` are variables, everything else is an operator.
pub mod test_support {
    use super::*;

    pub fn is_conventional_variable(name: &str) -> bool {
        matches!(name.chars().next(), Some('u'..='z'))
    }

    pub fn t(src: &str) -> Term {
        parse_term_inferred(src, is_conventional_variable)
            .unwrap_or_else(|e| panic!("bad test term {src:?}: {e}"))
            .0
    }

    pub fn tv(name: &str) -> Variable {
        Variable::new(name).expect("valid variable name")
    }
}
