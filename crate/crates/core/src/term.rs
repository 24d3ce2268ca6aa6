//! Signatures, terms, positions and substitutions.
//!
//! Terms are immutable and reference counted, so cloning is cheap and
//! rewriting shares every subterm it does not touch. Operations that may walk
//! arbitrarily deep terms (evaluation, equality, printing, dropping) use
//! explicit stacks instead of call recursion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Reserved name of the unary identity operator.
pub const IOTA: &str = "iota";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("position {position} does not address a subterm")]
    InvalidPosition { position: Position },
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{name}` declared with arities {first} and {second}")]
    ConflictingArity {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("`{0}` is used both as an operator and as a variable")]
    NameClash(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("`iota` is reserved for the unary identity operator")]
    ReservedName,
}

/// True for ASCII identifiers `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An operator symbol. Identity is name plus arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    arity: usize,
}

impl Symbol {
    pub fn new(name: &str, arity: usize) -> Result<Self, TermError> {
        if !is_identifier(name) {
            return Err(TermError::InvalidName(name.to_string()));
        }
        if name == IOTA && arity != 1 {
            return Err(TermError::ReservedName);
        }
        Ok(Symbol {
            name: Arc::from(name),
            arity,
        })
    }

    /// The distinguished unary identity operator.
    pub fn iota() -> Self {
        Symbol {
            name: Arc::from(IOTA),
            arity: 1,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_constant(&self) -> bool {
        self.arity == 0
    }

    pub fn is_iota(&self) -> bool {
        &*self.name == IOTA && self.arity == 1
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: &str) -> Result<Self, TermError> {
        if !is_identifier(name) {
            return Err(TermError::InvalidName(name.to_string()));
        }
        if name == IOTA {
            return Err(TermError::ReservedName);
        }
        Ok(Variable(Arc::from(name)))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite set of operators. Declaration order is kept for printing; the
/// identity operator `iota` is present iff the signature has been extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<Symbol>,
    index: BTreeMap<Arc<str>, usize>,
    identity: bool,
}

impl Default for Signature {
    fn default() -> Self {
        Signature {
            symbols: Vec::new(),
            index: BTreeMap::new(),
            identity: false,
        }
    }
}

impl Signature {
    /// Builds a signature. Repeating an identical symbol is harmless; reusing
    /// a name with a different arity is an error. Declaring `iota/1` extends
    /// the signature.
    pub fn new(symbols: impl IntoIterator<Item = Symbol>) -> Result<Self, TermError> {
        let mut sig = Signature::default();
        for sym in symbols {
            sig.insert(sym)?;
        }
        Ok(sig)
    }

    pub fn insert(&mut self, sym: Symbol) -> Result<(), TermError> {
        if sym.is_iota() {
            self.identity = true;
            return Ok(());
        }
        if let Some(&i) = self.index.get(sym.name()) {
            let existing = &self.symbols[i];
            if existing.arity != sym.arity {
                return Err(TermError::ConflictingArity {
                    name: sym.name().to_string(),
                    first: existing.arity,
                    second: sym.arity,
                });
            }
            return Ok(());
        }
        self.index.insert(sym.name.clone(), self.symbols.len());
        self.symbols.push(sym);
        Ok(())
    }

    /// The extension Σ′ = Σ ∪ {ι}.
    pub fn with_identity(mut self) -> Self {
        self.identity = true;
        self
    }

    pub fn has_identity(&self) -> bool {
        self.identity
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        if name == IOTA {
            return self.identity.then(Symbol::iota);
        }
        self.index.get(name).map(|&i| self.symbols[i].clone())
    }

    pub fn contains(&self, sym: &Symbol) -> bool {
        self.lookup(sym.name()).as_ref() == Some(sym)
    }

    /// Declared symbols in declaration order, excluding `iota`.
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// All symbols including `iota` when present.
    pub fn all_symbols(&self) -> Vec<Symbol> {
        let mut all = self.symbols.clone();
        if self.identity {
            all.push(Symbol::iota());
        }
        all
    }

    pub fn symbols_of_arity(&self, arity: usize) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter(move |s| s.arity == arity)
    }

    /// Σ ∩ V = ∅.
    pub fn check_disjoint<'a>(
        &self,
        vars: impl IntoIterator<Item = &'a Variable>,
    ) -> Result<(), TermError> {
        for v in vars {
            if self.index.contains_key(v.name()) {
                return Err(TermError::NameClash(v.name().to_string()));
            }
        }
        Ok(())
    }
}

/// A path of 1-based child indices; the empty path is the root ε.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<usize>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PositionParseError {
    #[error("empty position (use `e` for the root)")]
    Empty,
    #[error("position indices are 1-based, found `{0}`")]
    NonPositive(String),
    #[error("malformed position component `{0}`")]
    Malformed(String),
}

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    /// Panics if any index is zero.
    pub fn new(indices: Vec<usize>) -> Self {
        assert!(indices.iter().all(|&i| i > 0), "positions are 1-based");
        Position(indices)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn child(&self, i: usize) -> Self {
        assert!(i > 0, "positions are 1-based");
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    /// Splits `kq` into `(k, q)`.
    pub fn split_first(&self) -> Option<(usize, Position)> {
        self.0
            .split_first()
            .map(|(&k, rest)| (k, Position(rest.to_vec())))
    }

    pub fn concat(&self, other: &Position) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Parses `e` or dot-separated positive decimals such as `2.1`.
    pub fn parse(src: &str) -> Result<Self, PositionParseError> {
        let src = src.trim();
        if src.is_empty() {
            return Err(PositionParseError::Empty);
        }
        if src == "e" {
            return Ok(Position::root());
        }
        let mut out = Vec::new();
        for part in src.split('.') {
            if part.is_empty() || !part.chars().all(|c| c.is_ascii_digit() || c == '-') {
                return Err(PositionParseError::Malformed(part.to_string()));
            }
            if part.starts_with('-') {
                return Err(PositionParseError::NonPositive(part.to_string()));
            }
            let k: usize = part
                .parse()
                .map_err(|_| PositionParseError::Malformed(part.to_string()))?;
            if k == 0 {
                return Err(PositionParseError::NonPositive(part.to_string()));
            }
            out.push(k);
        }
        Ok(Position(out))
    }
}

impl FromStr for Position {
    type Err = PositionParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Position::parse(s)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

enum Node {
    Var(Variable),
    App {
        head: Symbol,
        args: Box<[Term]>,
        size: u64,
        leaves: u64,
        depth: usize,
        ground: bool,
    },
}

/// A first-order term over a signature and a set of variables.
#[derive(Clone)]
pub struct Term(Arc<Node>);

/// Borrowed view of the outermost constructor of a term.
#[derive(Debug, Clone, Copy)]
pub enum TermKind<'a> {
    Var(&'a Variable),
    App(&'a Symbol, &'a [Term]),
}

impl Term {
    pub fn var(v: Variable) -> Self {
        Term(Arc::new(Node::Var(v)))
    }

    pub fn constant(sym: Symbol) -> Result<Self, TermError> {
        Term::apply(sym, Vec::new())
    }

    /// Builds `head(args...)`, checking the arity.
    pub fn apply(head: Symbol, args: Vec<Term>) -> Result<Self, TermError> {
        if head.arity != args.len() {
            return Err(TermError::ArityMismatch {
                name: head.name().to_string(),
                expected: head.arity,
                found: args.len(),
            });
        }
        let mut size: u64 = 1;
        let mut leaves: u64 = if args.is_empty() { 1 } else { 0 };
        let mut depth = 0;
        let mut ground = true;
        for a in &args {
            size = size.saturating_add(a.node_count());
            leaves = leaves.saturating_add(a.leaf_number());
            depth = depth.max(a.depth() + 1);
            ground &= a.is_ground();
        }
        Ok(Term(Arc::new(Node::App {
            head,
            args: args.into_boxed_slice(),
            size,
            leaves,
            depth,
            ground,
        })))
    }

    /// `ι(t)`.
    pub fn iota(t: Term) -> Self {
        Term::apply(Symbol::iota(), vec![t]).expect("iota is unary")
    }

    /// `ιⁿ(t)`.
    pub fn iota_pow(mut t: Term, n: usize) -> Self {
        for _ in 0..n {
            t = Term::iota(t);
        }
        t
    }

    pub fn kind(&self) -> TermKind<'_> {
        match &*self.0 {
            Node::Var(v) => TermKind::Var(v),
            Node::App { head, args, .. } => TermKind::App(head, args),
        }
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match &*self.0 {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn head(&self) -> Option<&Symbol> {
        match &*self.0 {
            Node::App { head, .. } => Some(head),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match &*self.0 {
            Node::App { args, .. } => args,
            _ => &[],
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(&*self.0, Node::Var(_))
    }

    /// A variable or a constant.
    pub fn is_leaf(&self) -> bool {
        match &*self.0 {
            Node::Var(_) => true,
            Node::App { args, .. } => args.is_empty(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match &*self.0 {
            Node::Var(_) => false,
            Node::App { ground, .. } => *ground,
        }
    }

    /// Number of positions, i.e. tree nodes (saturating).
    pub fn node_count(&self) -> u64 {
        match &*self.0 {
            Node::Var(_) => 1,
            Node::App { size, .. } => *size,
        }
    }

    /// L(t): positions holding a variable or a constant, with repetition.
    pub fn leaf_number(&self) -> u64 {
        match &*self.0 {
            Node::Var(_) => 1,
            Node::App { leaves, .. } => *leaves,
        }
    }

    /// d(t) = max length of a position.
    pub fn depth(&self) -> usize {
        match &*self.0 {
            Node::Var(_) => 0,
            Node::App { depth, .. } => *depth,
        }
    }

    /// Number of distinct allocated nodes, counting shared subterms once.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if !seen.insert(Arc::as_ptr(&t.0)) {
                continue;
            }
            stack.extend(t.args().iter());
        }
        seen.len()
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Pos(t) in pre-order (root first, children left to right).
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut stack = vec![(self, Vec::new())];
        while let Some((t, path)) = stack.pop() {
            for (i, a) in t.args().iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i + 1);
                stack.push((a, p));
            }
            out.push(Position(path));
        }
        out
    }

    /// Pre-order traversal of subterms together with their positions.
    pub fn subterms(&self) -> Vec<(Position, &Term)> {
        let mut out = Vec::new();
        let mut stack = vec![(self, Vec::new())];
        while let Some((t, path)) = stack.pop() {
            for (i, a) in t.args().iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i + 1);
                stack.push((a, p));
            }
            out.push((Position(path), t));
        }
        out
    }

    pub fn has_position(&self, p: &Position) -> bool {
        self.subterm_at(p).is_ok()
    }

    /// t|_p.
    pub fn subterm_at(&self, p: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for &k in &p.0 {
            cur = cur
                .args()
                .get(k.wrapping_sub(1))
                .ok_or_else(|| TermError::InvalidPosition { position: p.clone() })?;
        }
        Ok(cur)
    }

    /// s[t]_p.
    pub fn replace_at(&self, p: &Position, t: Term) -> Result<Term, TermError> {
        let mut spine = Vec::with_capacity(p.len());
        let mut cur = self;
        for &k in &p.0 {
            let next = cur
                .args()
                .get(k.wrapping_sub(1))
                .ok_or_else(|| TermError::InvalidPosition { position: p.clone() })?;
            spine.push((cur, k - 1));
            cur = next;
        }
        let mut acc = t;
        while let Some((node, i)) = spine.pop() {
            let mut args = node.args().to_vec();
            args[i] = acc;
            acc = Term::apply(node.head().expect("spine nodes are applications").clone(), args)
                .expect("arity preserved");
        }
        Ok(acc)
    }

    /// Var(t).
    pub fn vars(&self) -> BTreeSet<Variable> {
        self.var_occurrences().into_iter().collect()
    }

    /// Variable occurrences, left to right, with repetition.
    pub fn var_occurrences(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t.kind() {
                TermKind::Var(v) => out.push(v.clone()),
                TermKind::App(_, args) => {
                    if !t.is_ground() {
                        stack.extend(args.iter().rev());
                    }
                }
            }
        }
        out
    }

    /// Leaf subterms (variables and constants) with their positions, left to right.
    pub fn leaves(&self) -> Vec<(Position, Term)> {
        self.subterms()
            .into_iter()
            .filter(|(_, t)| t.is_leaf())
            .map(|(p, t)| (p, t.clone()))
            .collect()
    }

    /// Operator symbols occurring in the term.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if !seen.insert(Arc::as_ptr(&t.0)) {
                continue;
            }
            if let TermKind::App(h, args) = t.kind() {
                out.insert(h.clone());
                stack.extend(args.iter());
            }
        }
        out
    }

    /// Bottom-up fold with an explicit stack. `shortcut` may answer a subterm
    /// directly (variables must be answered there or by `combine` with no
    /// children). Results for shared subterms are memoized by address.
    pub fn fold<V: Clone, E>(
        &self,
        mut shortcut: impl FnMut(&Term) -> Option<Result<V, E>>,
        mut combine: impl FnMut(&Term, Vec<V>) -> Result<V, E>,
    ) -> Result<V, E> {
        enum Frame<'a> {
            Enter(&'a Term),
            Exit(&'a Term),
        }
        let mut memo: HashMap<*const Node, V> = HashMap::new();
        let mut values: Vec<V> = Vec::new();
        let mut stack = vec![Frame::Enter(self)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(t) => {
                    let shared = Arc::strong_count(&t.0) > 1;
                    if shared {
                        if let Some(v) = memo.get(&Arc::as_ptr(&t.0)) {
                            values.push(v.clone());
                            continue;
                        }
                    }
                    if let Some(v) = shortcut(t) {
                        let v = v?;
                        if shared {
                            memo.insert(Arc::as_ptr(&t.0), v.clone());
                        }
                        values.push(v);
                        continue;
                    }
                    stack.push(Frame::Exit(t));
                    for a in t.args().iter().rev() {
                        stack.push(Frame::Enter(a));
                    }
                }
                Frame::Exit(t) => {
                    let n = t.args().len();
                    let children = values.split_off(values.len() - n);
                    let v = combine(t, children)?;
                    if Arc::strong_count(&t.0) > 1 {
                        memo.insert(Arc::as_ptr(&t.0), v.clone());
                    }
                    values.push(v);
                }
            }
        }
        Ok(values.pop().expect("fold produces one value"))
    }
}

impl Drop for Term {
    fn drop(&mut self) {
        // Unlink uniquely owned children onto a heap stack so that dropping a
        // very deep term never recurses.
        let mut stack = Vec::new();
        if let Some(Node::App { args, .. }) = Arc::get_mut(&mut self.0) {
            stack.extend(std::mem::take(args).into_vec());
        }
        while let Some(mut t) = stack.pop() {
            if let Some(Node::App { args, .. }) = Arc::get_mut(&mut t.0) {
                stack.extend(std::mem::take(args).into_vec());
            }
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            if Arc::ptr_eq(&a.0, &b.0) {
                continue;
            }
            match (&*a.0, &*b.0) {
                (Node::Var(x), Node::Var(y)) => {
                    if x != y {
                        return false;
                    }
                }
                (
                    Node::App {
                        head: h1,
                        args: a1,
                        size: s1,
                        ..
                    },
                    Node::App {
                        head: h2,
                        args: a2,
                        size: s2,
                        ..
                    },
                ) => {
                    if h1 != h2 || s1 != s2 {
                        return false;
                    }
                    stack.extend(a1.iter().zip(a2.iter()));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Term {}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Tok<'a> {
            T(&'a Term),
            S(&'static str),
        }
        let mut stack = vec![Tok::T(self)];
        while let Some(tok) = stack.pop() {
            match tok {
                Tok::S(s) => f.write_str(s)?,
                Tok::T(t) => match t.kind() {
                    TermKind::Var(v) => f.write_str(v.name())?,
                    TermKind::App(h, args) => {
                        f.write_str(h.name())?;
                        if !args.is_empty() {
                            f.write_str("(")?;
                            stack.push(Tok::S(")"));
                            for (i, a) in args.iter().enumerate().rev() {
                                stack.push(Tok::T(a));
                                if i > 0 {
                                    stack.push(Tok::S(","));
                                }
                            }
                        }
                    }
                },
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({self})")
    }
}

/// A finite map from variables to terms; unmapped variables are fixed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<Variable, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn insert(&mut self, v: Variable, t: Term) -> Option<Term> {
        self.0.insert(v, t)
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Variable> {
        self.0.keys()
    }

    /// The homomorphic extension σ̂ applied to `t`.
    pub fn apply(&self, t: &Term) -> Term {
        if self.0.is_empty() {
            return t.clone();
        }
        let out: Result<Term, std::convert::Infallible> = t.fold(
            |s| {
                if s.is_ground() {
                    return Some(Ok(s.clone()));
                }
                s.as_var()
                    .map(|v| Ok(self.0.get(v).cloned().unwrap_or_else(|| s.clone())))
            },
            |s, args| {
                let head = s.head().expect("variables handled by shortcut").clone();
                Ok(Term::apply(head, args).expect("arity preserved"))
            },
        );
        match out {
            Ok(t) => t,
            Err(e) => match e {},
        }
    }

    /// Restriction to a set of variables.
    pub fn restrict(&self, vars: &BTreeSet<Variable>) -> Substitution {
        Substitution(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        )
    }
}

impl FromIterator<(Variable, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

/// σ̂(t).
pub fn apply_substitution(sigma: &Substitution, t: &Term) -> Term {
    sigma.apply(t)
}

/// Syntactic one-sided matching: the minimal σ with σ(pattern) = subject.
pub fn matching(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut sigma = BTreeMap::new();
    let mut stack = vec![(pattern, subject)];
    while let Some((p, s)) = stack.pop() {
        match p.kind() {
            TermKind::Var(v) => match sigma.get(v) {
                Some(bound) => {
                    if bound != s {
                        return None;
                    }
                }
                None => {
                    sigma.insert(v.clone(), s.clone());
                }
            },
            TermKind::App(h, pargs) => {
                if p.is_ground() {
                    if p != s {
                        return None;
                    }
                    continue;
                }
                match s.kind() {
                    TermKind::App(h2, sargs) if h == h2 => {
                        stack.extend(pargs.iter().zip(sargs.iter()));
                    }
                    _ => return None,
                }
            }
        }
    }
    Some(Substitution(sigma))
}
