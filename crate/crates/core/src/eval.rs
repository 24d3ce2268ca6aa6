//! Σ-algebras over pluggable carriers and catamorphic evaluation.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::number::Number;
use crate::term::{Signature, Symbol, Term, TermKind, Variable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no interpretation for symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("interpretation of `{symbol}` has arity {found}, symbol has arity {expected}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("proj({index}) applied to {available} argument(s)")]
    ProjectionOutOfRange { index: usize, available: usize },
    #[error("{op} is not available on the {carrier} carrier")]
    Unsupported { op: &'static str, carrier: String },
    #[error("affine map expects {expected} input(s), got {found}")]
    AffineShape { expected: usize, found: usize },
}

/// The set an algebra interprets terms in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarrierKind {
    Rational,
    Float,
    /// Fixed-length float vectors.
    Vector(usize),
    /// Ground terms; the initial algebra.
    Term,
}

impl CarrierKind {
    pub fn is_exact(self) -> bool {
        matches!(self, CarrierKind::Rational | CarrierKind::Term)
    }
}

impl std::str::FromStr for CarrierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "rational" => Ok(CarrierKind::Rational),
            "float" => Ok(CarrierKind::Float),
            "term" => Ok(CarrierKind::Term),
            _ => s
                .strip_prefix("vector(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|n| n.trim().parse::<usize>().ok())
                .filter(|&n| n > 0)
                .map(CarrierKind::Vector)
                .ok_or_else(|| format!("unknown carrier `{s}`; expected rational, float, term or vector(k)")),
        }
    }
}

impl fmt::Display for CarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CarrierKind::Rational => f.write_str("rational"),
            CarrierKind::Float => f.write_str("float"),
            CarrierKind::Vector(n) => write!(f, "vector({n})"),
            CarrierKind::Term => f.write_str("term"),
        }
    }
}

/// An element of a carrier.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Rational(BigRational),
    Float(f64),
    Vector(Vec<f64>),
    Term(Term),
}

impl Value {
    pub fn rational(n: i64) -> Self {
        Value::Rational(BigRational::from_integer(n.into()))
    }

    /// Coerces a literal into a carrier.
    pub fn from_number(n: &Number, carrier: CarrierKind) -> Result<Self, EvalError> {
        match carrier {
            CarrierKind::Rational => Ok(Value::Rational(n.as_rational().clone())),
            CarrierKind::Float | CarrierKind::Vector(_) => Ok(Value::Float(n.to_f64())),
            CarrierKind::Term => Err(EvalError::Unsupported {
                op: "numeric literal",
                carrier: carrier.to_string(),
            }),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Rational(r) => r.to_f64(),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Value::Term(t) => Some(t),
            _ => None,
        }
    }

    /// Absolute difference for numeric values, `0`/`inf` for terms.
    pub fn distance(&self, other: &Value) -> f64 {
        match (self, other) {
            (Value::Rational(a), Value::Rational(b)) => {
                if a == b {
                    0.0
                } else {
                    (a - b).abs().to_f64().unwrap_or(f64::INFINITY).max(f64::MIN_POSITIVE)
                }
            }
            (Value::Vector(a), Value::Vector(b)) if a.len() == b.len() => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            (Value::Term(a), Value::Term(b)) => {
                if a == b {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => (x - y).abs(),
                _ => f64::INFINITY,
            },
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Value::Rational(_) => "rational",
            Value::Float(_) => "float",
            Value::Vector(_) => "vector",
            Value::Term(_) => "term",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Value::Float(x) => write!(f, "{x}"),
            Value::Vector(v) => {
                f.write_str("[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Value::Term(t) => write!(f, "{t}"),
        }
    }
}

/// The closed interpretation language. An expression denotes a function of
/// an argument list; `Proj(i)` selects the i-th argument (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(Number),
    Vector(Vec<Number>),
    Proj(usize),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Tanh(Box<Expr>),
    /// `M·x + b` where `x` is the concatenation of all arguments.
    Affine {
        matrix: Vec<Vec<Number>>,
        bias: Vec<Number>,
    },
    /// `outer(inner₁(args), ..., innerₖ(args))`.
    Compose(Box<Expr>, Vec<Expr>),
    /// Concatenates its operands into a vector.
    Tuple(Vec<Expr>),
    /// Term-carrier node constructor.
    Cons(Symbol),
}

impl Expr {
    pub fn proj(i: usize) -> Self {
        Expr::Proj(i)
    }

    pub fn num(n: impl Into<Number>) -> Self {
        Expr::Num(n.into())
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(vec![a, b])
    }

    pub fn compose(outer: Expr, inners: Vec<Expr>) -> Self {
        Expr::Compose(Box::new(outer), inners)
    }

    /// A single-row affine functional `c₀ + Σ cᵢ xᵢ`.
    pub fn linear(coefficients: Vec<Number>, constant: Number) -> Self {
        Expr::Affine {
            matrix: vec![coefficients],
            bias: vec![constant],
        }
    }

    /// Largest argument index this expression reads directly (0 if none).
    /// Affine maps read every argument and report `None`.
    pub fn max_proj(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Vector(_) | Expr::Cons(_) => Some(0),
            Expr::Proj(i) => Some(*i),
            Expr::Affine { .. } => None,
            Expr::Neg(a) | Expr::Tanh(a) => a.max_proj(),
            Expr::Sub(a, b) => Some(a.max_proj()?.max(b.max_proj()?)),
            Expr::Add(es) | Expr::Mul(es) | Expr::Tuple(es) => {
                es.iter().try_fold(0, |m, e| Some(m.max(e.max_proj()?)))
            }
            Expr::Compose(_, inners) => inners.iter().try_fold(0, |m, e| Some(m.max(e.max_proj()?))),
        }
    }

    /// Structural problems detectable without a carrier: ragged matrices,
    /// bias length, zero projections, compositions whose outer expression
    /// reads beyond its inner list, empty operand lists.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Expr::Num(_) | Expr::Vector(_) | Expr::Cons(_) => Ok(()),
            Expr::Proj(0) => Err("proj indices are 1-based".into()),
            Expr::Proj(_) => Ok(()),
            Expr::Affine { matrix, bias } => {
                if matrix.is_empty() {
                    return Err("affine matrix has no rows".into());
                }
                let w = matrix[0].len();
                if matrix.iter().any(|r| r.len() != w) {
                    return Err("affine matrix rows differ in length".into());
                }
                if bias.len() != matrix.len() {
                    return Err(format!(
                        "affine bias has length {}, matrix has {} row(s)",
                        bias.len(),
                        matrix.len()
                    ));
                }
                Ok(())
            }
            Expr::Neg(a) | Expr::Tanh(a) => a.validate(),
            Expr::Sub(a, b) => {
                a.validate()?;
                b.validate()
            }
            Expr::Add(es) | Expr::Mul(es) | Expr::Tuple(es) => {
                if es.is_empty() {
                    return Err("operator needs at least one operand".into());
                }
                es.iter().try_for_each(Expr::validate)
            }
            Expr::Compose(outer, inners) => {
                outer.validate()?;
                if let Some(m) = outer.max_proj() {
                    if m > inners.len() {
                        return Err(format!(
                            "compose: outer expression reads proj({m}) but only {} inner expression(s) given",
                            inners.len()
                        ));
                    }
                }
                inners.iter().try_for_each(Expr::validate)
            }
        }
    }

    /// Whether the expression can only be evaluated on float-like carriers.
    pub fn uses_tanh(&self) -> bool {
        match self {
            Expr::Tanh(_) => true,
            Expr::Neg(a) => a.uses_tanh(),
            Expr::Sub(a, b) => a.uses_tanh() || b.uses_tanh(),
            Expr::Add(es) | Expr::Mul(es) | Expr::Tuple(es) => es.iter().any(Expr::uses_tanh),
            Expr::Compose(o, es) => o.uses_tanh() || es.iter().any(Expr::uses_tanh),
            _ => false,
        }
    }

    /// Evaluates the expression on an argument list.
    pub fn apply(&self, args: &[Value], carrier: CarrierKind) -> Result<Value, EvalError> {
        match self {
            Expr::Num(n) => Value::from_number(n, carrier),
            Expr::Vector(v) => match carrier {
                CarrierKind::Vector(_) => Ok(Value::Vector(v.iter().map(Number::to_f64).collect())),
                _ => Err(EvalError::Unsupported {
                    op: "vector literal",
                    carrier: carrier.to_string(),
                }),
            },
            Expr::Proj(i) => args
                .get(i.wrapping_sub(1))
                .cloned()
                .ok_or(EvalError::ProjectionOutOfRange {
                    index: *i,
                    available: args.len(),
                }),
            Expr::Add(es) => fold_binary(es, args, carrier, "add", |a, b| a + b, |a, b| a + b),
            Expr::Mul(es) => fold_binary(es, args, carrier, "mul", |a, b| a * b, |a, b| a * b),
            Expr::Sub(a, b) => {
                let x = a.apply(args, carrier)?;
                let y = b.apply(args, carrier)?;
                binary(x, y, "sub", |a, b| a - b, |a, b| a - b)
            }
            Expr::Neg(a) => match a.apply(args, carrier)? {
                Value::Rational(r) => Ok(Value::Rational(-r)),
                Value::Float(x) => Ok(Value::Float(-x)),
                Value::Vector(v) => Ok(Value::Vector(v.into_iter().map(|x| -x).collect())),
                Value::Term(_) => Err(EvalError::Unsupported {
                    op: "neg",
                    carrier: carrier.to_string(),
                }),
            },
            Expr::Tanh(a) => match a.apply(args, carrier)? {
                Value::Float(x) => Ok(Value::Float(x.tanh())),
                Value::Vector(v) => Ok(Value::Vector(v.into_iter().map(f64::tanh).collect())),
                other => Err(EvalError::Unsupported {
                    op: "tanh",
                    carrier: other.kind_name().to_string(),
                }),
            },
            Expr::Affine { matrix, bias } => affine(matrix, bias, args, carrier),
            Expr::Compose(outer, inners) => {
                let inner_vals = inners
                    .iter()
                    .map(|e| e.apply(args, carrier))
                    .collect::<Result<Vec<_>, _>>()?;
                outer.apply(&inner_vals, carrier)
            }
            Expr::Tuple(es) => {
                let mut out = Vec::new();
                for e in es {
                    match e.apply(args, carrier)? {
                        Value::Float(x) => out.push(x),
                        Value::Vector(v) => out.extend(v),
                        other => {
                            return Err(EvalError::Unsupported {
                                op: "tuple",
                                carrier: other.kind_name().to_string(),
                            })
                        }
                    }
                }
                Ok(Value::Vector(out))
            }
            Expr::Cons(sym) => {
                let children = args
                    .iter()
                    .map(|a| match a {
                        Value::Term(t) => Ok(t.clone()),
                        other => Err(EvalError::CarrierMismatch(format!(
                            "cons({sym}) applied to a {} value",
                            other.kind_name()
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Term::apply(sym.clone(), children)
                    .map(Value::Term)
                    .map_err(|e| EvalError::CarrierMismatch(e.to_string()))
            }
        }
    }
}

fn fold_binary(
    es: &[Expr],
    args: &[Value],
    carrier: CarrierKind,
    op: &'static str,
    rat: fn(&BigRational, &BigRational) -> BigRational,
    flt: fn(f64, f64) -> f64,
) -> Result<Value, EvalError> {
    let mut iter = es.iter();
    let first = iter.next().ok_or(EvalError::Unsupported {
        op,
        carrier: "empty operand list".into(),
    })?;
    let mut acc = first.apply(args, carrier)?;
    for e in iter {
        let v = e.apply(args, carrier)?;
        acc = binary(acc, v, op, rat, flt)?;
    }
    Ok(acc)
}

fn binary(
    x: Value,
    y: Value,
    op: &'static str,
    rat: fn(&BigRational, &BigRational) -> BigRational,
    flt: fn(f64, f64) -> f64,
) -> Result<Value, EvalError> {
    match (x, y) {
        (Value::Rational(a), Value::Rational(b)) => Ok(Value::Rational(rat(&a, &b))),
        (Value::Float(a), Value::Float(b)) => Ok(Value::Float(flt(a, b))),
        (Value::Vector(a), Value::Vector(b)) => {
            if a.len() != b.len() {
                return Err(EvalError::CarrierMismatch(format!(
                    "{op} on vectors of length {} and {}",
                    a.len(),
                    b.len()
                )));
            }
            Ok(Value::Vector(a.iter().zip(&b).map(|(p, q)| flt(*p, *q)).collect()))
        }
        (Value::Float(a), Value::Vector(b)) => {
            Ok(Value::Vector(b.into_iter().map(|q| flt(a, q)).collect()))
        }
        (Value::Vector(a), Value::Float(b)) => {
            Ok(Value::Vector(a.into_iter().map(|p| flt(p, b)).collect()))
        }
        (a, b) => Err(EvalError::CarrierMismatch(format!(
            "{op} on {} and {}",
            a.kind_name(),
            b.kind_name()
        ))),
    }
}

fn affine(
    matrix: &[Vec<Number>],
    bias: &[Number],
    args: &[Value],
    carrier: CarrierKind,
) -> Result<Value, EvalError> {
    let width = matrix.first().map_or(0, Vec::len);
    match carrier {
        CarrierKind::Rational => {
            if matrix.len() != 1 {
                return Err(EvalError::Unsupported {
                    op: "multi-row affine",
                    carrier: carrier.to_string(),
                });
            }
            if args.len() != width {
                return Err(EvalError::AffineShape {
                    expected: width,
                    found: args.len(),
                });
            }
            let mut acc = bias[0].as_rational().clone();
            for (c, a) in matrix[0].iter().zip(args) {
                match a {
                    Value::Rational(x) => {
                        if !c.is_zero() {
                            acc += c.as_rational() * x;
                        }
                    }
                    other => {
                        return Err(EvalError::CarrierMismatch(format!(
                            "affine on a {} value",
                            other.kind_name()
                        )))
                    }
                }
            }
            Ok(Value::Rational(acc))
        }
        CarrierKind::Float | CarrierKind::Vector(_) => {
            let mut input = Vec::with_capacity(width);
            for a in args {
                match a {
                    Value::Float(x) => input.push(*x),
                    Value::Vector(v) => input.extend_from_slice(v),
                    other => {
                        return Err(EvalError::CarrierMismatch(format!(
                            "affine on a {} value",
                            other.kind_name()
                        )))
                    }
                }
            }
            if input.len() != width {
                return Err(EvalError::AffineShape {
                    expected: width,
                    found: input.len(),
                });
            }
            let out: Vec<f64> = matrix
                .iter()
                .zip(bias)
                .map(|(row, b)| {
                    row.iter()
                        .zip(&input)
                        .fold(b.to_f64(), |acc, (c, x)| acc + c.to_f64() * x)
                })
                .collect();
            if matches!(carrier, CarrierKind::Float) {
                if out.len() != 1 {
                    return Err(EvalError::Unsupported {
                        op: "multi-row affine",
                        carrier: carrier.to_string(),
                    });
                }
                Ok(Value::Float(out[0]))
            } else {
                Ok(Value::Vector(out))
            }
        }
        CarrierKind::Term => Err(EvalError::Unsupported {
            op: "affine",
            carrier: carrier.to_string(),
        }),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, es: &[Expr]) -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str(")")
        }
        fn vector(f: &mut fmt::Formatter<'_>, v: &[Number]) -> fmt::Result {
            f.write_str("[")?;
            for (i, n) in v.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{n}")?;
            }
            f.write_str("]")
        }
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Vector(v) => vector(f, v),
            Expr::Proj(i) => write!(f, "proj({i})"),
            Expr::Add(es) => list(f, "add", es),
            Expr::Mul(es) => list(f, "mul", es),
            Expr::Tuple(es) => list(f, "tuple", es),
            Expr::Sub(a, b) => write!(f, "sub({a},{b})"),
            Expr::Neg(a) => write!(f, "neg({a})"),
            Expr::Tanh(a) => write!(f, "tanh({a})"),
            Expr::Affine { matrix, bias } => {
                f.write_str("affine([")?;
                for (i, row) in matrix.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    vector(f, row)?;
                }
                f.write_str("],")?;
                vector(f, bias)?;
                f.write_str(")")
            }
            Expr::Compose(outer, inners) => {
                write!(f, "compose({outer}")?;
                for e in inners {
                    write!(f, ",{e}")?;
                }
                f.write_str(")")
            }
            Expr::Cons(sym) => write!(f, "cons({sym})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("symbol `{0}` has no interpretation")]
    MissingInterpretation(String),
    #[error("interpretation given for undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("interpretation of `{symbol}` reads proj({index}) but the symbol has arity {arity}")]
    ProjectionBeyondArity {
        symbol: String,
        index: usize,
        arity: usize,
    },
    #[error("interpretation of `{symbol}`: {message}")]
    Malformed { symbol: String, message: String },
    #[error("interpretation of `{symbol}` uses tanh, unavailable on the rational carrier")]
    InexactOperation { symbol: String },
}

/// A carrier together with one interpretation per operator. When the
/// identity is present, `iota` is interpreted as the identity function.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaAlgebra {
    signature: Signature,
    carrier: CarrierKind,
    interps: BTreeMap<Symbol, Expr>,
}

impl SigmaAlgebra {
    /// Checks that every declared symbol (iota aside) has exactly one
    /// interpretation of matching arity.
    pub fn new(
        signature: Signature,
        carrier: CarrierKind,
        interps: BTreeMap<Symbol, Expr>,
    ) -> Result<Self, Vec<AlgebraError>> {
        let mut errors = Vec::new();
        for sym in signature.symbols() {
            match interps.get(sym) {
                None => errors.push(AlgebraError::MissingInterpretation(sym.name().to_string())),
                Some(e) => {
                    if let Err(message) = e.validate() {
                        errors.push(AlgebraError::Malformed {
                            symbol: sym.name().to_string(),
                            message,
                        });
                    }
                    if let Some(m) = e.max_proj() {
                        if m > sym.arity() {
                            errors.push(AlgebraError::ProjectionBeyondArity {
                                symbol: sym.name().to_string(),
                                index: m,
                                arity: sym.arity(),
                            });
                        }
                    }
                    if carrier == CarrierKind::Rational && e.uses_tanh() {
                        errors.push(AlgebraError::InexactOperation {
                            symbol: sym.name().to_string(),
                        });
                    }
                }
            }
        }
        for sym in interps.keys() {
            if sym.is_iota() {
                continue;
            }
            if !signature.contains(sym) {
                errors.push(AlgebraError::UndeclaredSymbol(sym.name().to_string()));
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let mut interps = interps;
        interps.retain(|s, _| !s.is_iota());
        Ok(SigmaAlgebra {
            signature,
            carrier,
            interps,
        })
    }

    /// The term algebra: every symbol is interpreted as its node constructor.
    pub fn free(signature: Signature) -> Self {
        let interps = signature
            .symbols()
            .iter()
            .map(|s| (s.clone(), Expr::Cons(s.clone())))
            .collect();
        SigmaAlgebra {
            signature,
            carrier: CarrierKind::Term,
            interps,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn carrier(&self) -> CarrierKind {
        self.carrier
    }

    /// Declared interpretations, excluding the identity.
    pub fn interpretations(&self) -> &BTreeMap<Symbol, Expr> {
        &self.interps
    }

    pub fn has_identity(&self) -> bool {
        self.signature.has_identity()
    }

    /// The interpretation of a symbol; `iota` maps to `proj(1)`.
    pub fn interpretation(&self, sym: &Symbol) -> Result<Expr, EvalError> {
        if sym.is_iota() {
            if self.has_identity() {
                return Ok(if self.carrier == CarrierKind::Term {
                    Expr::Cons(Symbol::iota())
                } else {
                    Expr::Proj(1)
                });
            }
            return Err(EvalError::UnknownSymbol(sym.name().to_string()));
        }
        self.interps
            .get(sym)
            .cloned()
            .ok_or_else(|| EvalError::UnknownSymbol(sym.name().to_string()))
    }

    /// Same carrier, different interpretation of literals: switches between
    /// the rational and float carriers.
    pub fn with_carrier(&self, carrier: CarrierKind) -> Self {
        SigmaAlgebra {
            carrier,
            ..self.clone()
        }
    }

    fn apply_symbol(&self, sym: &Symbol, args: Vec<Value>) -> Result<Value, EvalError> {
        if sym.is_iota() && self.has_identity() {
            let mut args = args;
            if self.carrier == CarrierKind::Term {
                let t = args.pop().and_then(|v| v.as_term().cloned());
                return t
                    .map(|t| Value::Term(Term::iota(t)))
                    .ok_or_else(|| EvalError::CarrierMismatch("iota on a non-term value".into()));
            }
            return args.pop().ok_or(EvalError::ArityMismatch {
                symbol: sym.name().to_string(),
                expected: 1,
                found: 0,
            });
        }
        let interp = self
            .interps
            .get(sym)
            .ok_or_else(|| EvalError::UnknownSymbol(sym.name().to_string()))?;
        let out = interp.apply(&args, self.carrier)?;
        if let (CarrierKind::Vector(n), Value::Vector(v)) = (self.carrier, &out) {
            if v.len() != n {
                return Err(EvalError::CarrierMismatch(format!(
                    "`{}` produced a vector of length {}, carrier has length {n}",
                    sym.name(),
                    v.len()
                )));
            }
        }
        Ok(out)
    }
}

/// Variable valuation used to evaluate non-ground terms.
pub type Assignment = BTreeMap<Variable, Value>;

/// cata(alg)(t) for ground `t`, bottom-up with an explicit stack.
pub fn catamorphism(alg: &SigmaAlgebra, t: &Term) -> Result<Value, EvalError> {
    eval_with_assignment(alg, t, &Assignment::new())
}

/// Structural evaluation where variables are looked up in `assignment`.
pub fn eval_with_assignment(
    alg: &SigmaAlgebra,
    t: &Term,
    assignment: &Assignment,
) -> Result<Value, EvalError> {
    t.fold(
        |s| match s.kind() {
            TermKind::Var(v) => Some(
                assignment
                    .get(v)
                    .cloned()
                    .ok_or_else(|| EvalError::UnboundVariable(v.name().to_string())),
            ),
            TermKind::App(..) => None,
        },
        |s, children| alg.apply_symbol(s.head().expect("applications only"), children),
    )
}

/// α′ = α extended by ι ↦ id.
pub fn extend_with_identity(alg: &SigmaAlgebra) -> SigmaAlgebra {
    SigmaAlgebra {
        signature: alg.signature.clone().with_identity(),
        ..alg.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::test_support::{t, tv};
    use crate::rewrite::flatten;

    #[test]
    fn carrier_names() {
        for c in [CarrierKind::Rational, CarrierKind::Float, CarrierKind::Term, CarrierKind::Vector(3)] {
            assert_eq!(c.to_string().parse::<CarrierKind>(), Ok(c));
        }
        assert_eq!(" vector( 2 ) ".parse::<CarrierKind>(), Ok(CarrierKind::Vector(2)));
        for bad in ["vector(0)", "vector()", "integer", ""] {
            assert!(bad.parse::<CarrierKind>().is_err(), "{bad}");
        }
    }

    fn plus_algebra() -> SigmaAlgebra {
        let sig = Signature::new([
            Symbol::new("plus", 2).unwrap(),
            Symbol::new("one", 0).unwrap(),
        ])
        .unwrap();
        let interps = [
            (Symbol::new("plus", 2).unwrap(), Expr::add(Expr::proj(1), Expr::proj(2))),
            (Symbol::new("one", 0).unwrap(), Expr::num(1)),
        ]
        .into_iter()
        .collect();
        SigmaAlgebra::new(sig, CarrierKind::Rational, interps).unwrap()
    }

    #[test]
    fn sums_by_structural_recursion() {
        let alg = plus_algebra();
        assert_eq!(
            catamorphism(&alg, &t("plus(one,plus(one,one))")).unwrap(),
            Value::rational(3)
        );
    }

    #[test]
    fn iota_requires_extension() {
        let alg = plus_algebra();
        let term = t("iota(plus(one,one))");
        assert!(matches!(
            catamorphism(&alg, &term),
            Err(EvalError::UnknownSymbol(_))
        ));
        let ext = extend_with_identity(&alg);
        assert_eq!(catamorphism(&ext, &term).unwrap(), Value::rational(2));
        assert_eq!(extend_with_identity(&ext), ext);
    }

    #[test]
    fn flatten_preserves_value() {
        let alg = extend_with_identity(&plus_algebra());
        let term = t("plus(plus(plus(one,one),one),one)");
        assert_eq!(
            catamorphism(&alg, &flatten(&term)).unwrap(),
            catamorphism(&alg, &term).unwrap()
        );
    }

    #[test]
    fn free_algebra_is_the_identity() {
        let term = t("f(g(a,b),iota(c))");
        let sig = Signature::new(term.symbols()).unwrap();
        let alg = SigmaAlgebra::free(sig);
        assert_eq!(catamorphism(&alg, &term).unwrap(), Value::Term(term));
    }

    #[test]
    fn assignment_lookup() {
        let alg = plus_algebra();
        let mut a = Assignment::new();
        a.insert(tv("x"), Value::rational(2));
        a.insert(tv("y"), Value::rational(5));
        assert_eq!(
            eval_with_assignment(&alg, &t("plus(x,plus(x,y))"), &a).unwrap(),
            Value::rational(9)
        );
        assert_eq!(eval_with_assignment(&alg, &t("x"), &a).unwrap(), Value::rational(2));
        assert!(matches!(
            eval_with_assignment(&alg, &t("plus(x,z)"), &a),
            Err(EvalError::UnboundVariable(_))
        ));
    }

    #[test]
    fn coverage_is_checked() {
        let sig = Signature::new([Symbol::new("f", 2).unwrap(), Symbol::new("a", 0).unwrap()]).unwrap();
        let interps: BTreeMap<_, _> = [(Symbol::new("f", 2).unwrap(), Expr::proj(3))].into_iter().collect();
        let errs = SigmaAlgebra::new(sig, CarrierKind::Rational, interps).unwrap_err();
        assert!(errs.contains(&AlgebraError::MissingInterpretation("a".into())));
        assert!(errs.iter().any(|e| matches!(e, AlgebraError::ProjectionBeyondArity { .. })));
    }

    #[test]
    fn vocabulary_on_floats_and_vectors() {
        let args = [Value::Float(0.5), Value::Float(2.0)];
        let e = Expr::Tanh(Box::new(Expr::linear(
            vec![Number::from_int(2), Number::from_int(-1)],
            Number::ratio(1, 2),
        )));
        let Value::Float(y) = e.apply(&args, CarrierKind::Float).unwrap() else {
            panic!()
        };
        assert!((y - (2.0f64 * 0.5 - 2.0 + 0.5).tanh()).abs() < 1e-15);

        let vargs = [Value::Vector(vec![1.0, 2.0]), Value::Vector(vec![3.0, 4.0])];
        let m = Expr::Affine {
            matrix: vec![
                vec![1.into(), 0.into(), 0.into(), 1.into()],
                vec![0.into(), 1.into(), 1.into(), 0.into()],
            ],
            bias: vec![0.into(), 1.into()],
        };
        assert_eq!(
            m.apply(&vargs, CarrierKind::Vector(2)).unwrap(),
            Value::Vector(vec![5.0, 6.0])
        );
        let tup = Expr::Tuple(vec![Expr::proj(2), Expr::num(7)]);
        assert_eq!(
            tup.apply(&vargs, CarrierKind::Vector(3)).unwrap(),
            Value::Vector(vec![3.0, 4.0, 7.0])
        );
        assert!(Expr::Tanh(Box::new(Expr::proj(1)))
            .apply(&[Value::rational(1)], CarrierKind::Rational)
            .is_err());
    }

    #[test]
    fn compose_validates_inner_count() {
        let bad = Expr::compose(Expr::proj(3), vec![Expr::proj(1)]);
        assert!(bad.validate().is_err());
        let ok = Expr::compose(Expr::sub(Expr::proj(2), Expr::proj(1)), vec![Expr::proj(1), Expr::num(4)]);
        assert!(ok.validate().is_ok());
        assert_eq!(
            ok.apply(&[Value::rational(1)], CarrierKind::Rational).unwrap(),
            Value::rational(3)
        );
    }
}
