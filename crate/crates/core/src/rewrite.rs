//! Σ-identities, positional rewriting functions, flattening with `iota`, and
//! the split/assemble pair between flat terms and their leaf tuples.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::term::{matching, Position, Substitution, Symbol, Term, TermError, TermKind, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("left-hand side must not be a bare variable")]
    VariableLhs,
    #[error("right-hand side uses variables absent from the left-hand side: {0:?}")]
    UnboundRhsVariables(Vec<String>),
    #[error("term is not an instance of the left-hand side at position {position}")]
    NoMatch { position: Position },
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("leaves are not at a uniform depth: expected {expected}, found a leaf at depth {found}")]
    NonUniformDepth { expected: usize, found: usize },
    #[error("skeleton has {expected} hole(s) but {found} leaves were given")]
    LeafCountMismatch { expected: usize, found: usize },
    #[error("leaf {leaf} at index {index} is not a variable or constant")]
    NotALeaf { index: usize, leaf: String },
    #[error("leaf {index} (`{leaf}`) of the right-hand side has no counterpart on the left")]
    UnmappableLeaf { index: usize, leaf: String },
}

/// A Σ-identity `(l, r)` with Var(r) ⊆ Var(l) and `l` not a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    lhs: Term,
    rhs: Term,
}

impl Identity {
    pub fn new(lhs: Term, rhs: Term) -> Result<Self, RewriteError> {
        if lhs.is_var() {
            return Err(RewriteError::VariableLhs);
        }
        let lv = lhs.vars();
        let missing: Vec<String> = rhs
            .vars()
            .into_iter()
            .filter(|v| !lv.contains(v))
            .map(|v| v.name().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(RewriteError::UnboundRhsVariables(missing));
        }
        Ok(Identity { lhs, rhs })
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &Term {
        &self.rhs
    }
}

/// An identity applied at a fixed position; generates R_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub identity: Identity,
    pub position: Position,
}

impl RewriteRule {
    pub fn new(identity: Identity, position: Position) -> Self {
        RewriteRule { identity, position }
    }

    pub fn lhs(&self) -> &Term {
        self.identity.lhs()
    }

    pub fn rhs(&self) -> &Term {
        self.identity.rhs()
    }
}

/// t ∈ T_p^s.
pub fn instance_at(t: &Term, s: &Term, p: &Position) -> bool {
    t.subterm_at(p)
        .map(|sub| matching(s, sub).is_some())
        .unwrap_or(false)
}

/// R_p(t) = t[σ(r)]_p where t|_p = σ(l).
pub fn rewrite_at(rule: &RewriteRule, t: &Term) -> Result<Term, RewriteError> {
    let no_match = || RewriteError::NoMatch {
        position: rule.position.clone(),
    };
    let sub = t.subterm_at(&rule.position).map_err(|_| no_match())?;
    let sigma = matching(rule.lhs(), sub).ok_or_else(no_match)?;
    Ok(t.replace_at(&rule.position, sigma.apply(rule.rhs()))?)
}

/// τ with τ(l) = r, if one exists; a rule can be iterated at a fixed
/// position exactly when it does.
pub fn iterability_witness(id: &Identity) -> Option<Substitution> {
    matching(id.lhs(), id.rhs())
}

/// `[t0, R_p(t0), ..., R_p^n(t0)]`.
pub fn iterate(rule: &RewriteRule, t0: &Term, n: usize) -> Result<Vec<Term>, RewriteError> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(t0.clone());
    out.extend(Iterates::new(rule.clone(), t0.clone()).take(n).collect::<Result<Vec<_>, _>>()?);
    Ok(out)
}

/// Streaming R_p^k(t0) for k = 1, 2, ...; stops after the first error.
#[derive(Debug, Clone)]
pub struct Iterates {
    rule: RewriteRule,
    current: Option<Term>,
}

impl Iterates {
    pub fn new(rule: RewriteRule, t0: Term) -> Self {
        Iterates {
            rule,
            current: Some(t0),
        }
    }
}

impl Iterator for Iterates {
    type Item = Result<Term, RewriteError>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.current.take()?;
        match rewrite_at(&self.rule, &cur) {
            Ok(next) => {
                self.current = Some(next.clone());
                Some(Ok(next))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

/// Every variable sits at depth d(t). Constants are unconstrained.
pub fn is_flat(t: &Term) -> bool {
    let d = t.depth();
    t.leaves()
        .iter()
        .all(|(p, leaf)| !leaf.is_var() || p.len() == d)
}

/// Every leaf, variable or constant, sits at depth d(t).
pub fn is_uniformly_deep(t: &Term) -> bool {
    let d = t.depth();
    t.leaves().iter().all(|(p, _)| p.len() == d)
}

/// Pads each child with `iota` so that all leaves reach depth d(t):
/// t′ = f(ι^{d(t)−d(t₁)−1}(t₁′), ...). Evaluation is unchanged in any
/// algebra interpreting `iota` as the identity.
pub fn flatten(t: &Term) -> Term {
    let out: Result<Term, std::convert::Infallible> = t.fold(
        |s| s.is_leaf().then(|| Ok(s.clone())),
        |s, children| {
            let d = s.depth();
            let padded = s
                .args()
                .iter()
                .zip(children)
                .map(|(orig, flat)| Term::iota_pow(flat, d - orig.depth() - 1))
                .collect();
            Ok(Term::apply(s.head().expect("applications only").clone(), padded)
                .expect("arity preserved"))
        },
    );
    match out {
        Ok(t) => t,
        Err(e) => match e {},
    }
}

/// The operator scaffold of a uniformly deep term, with holes at the leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Hole,
    Node(Symbol, Vec<Shape>),
}

impl Shape {
    pub fn hole_count(&self) -> usize {
        match self {
            Shape::Hole => 1,
            Shape::Node(_, kids) => kids.iter().map(Shape::hole_count).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Shape::Hole => 0,
            Shape::Node(_, kids) => 1 + kids.iter().map(Shape::depth).max().unwrap_or(0),
        }
    }
}

/// A flat term split into its scaffold and leaf tuple (Ψ); `assemble` is Φ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafTuple {
    pub skeleton: Shape,
    pub leaves: Vec<Term>,
}

impl LeafTuple {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }
}

/// Splits a uniformly deep term into scaffold and leaves (left to right).
pub fn lift(t: &Term) -> Result<LeafTuple, RewriteError> {
    let d = t.depth();
    let mut leaves = Vec::new();
    let skeleton = lift_rec(t, 0, d, &mut leaves)?;
    Ok(LeafTuple { skeleton, leaves })
}

fn lift_rec(t: &Term, level: usize, d: usize, leaves: &mut Vec<Term>) -> Result<Shape, RewriteError> {
    if t.is_leaf() {
        if level != d {
            return Err(RewriteError::NonUniformDepth {
                expected: d,
                found: level,
            });
        }
        leaves.push(t.clone());
        return Ok(Shape::Hole);
    }
    let kids = t
        .args()
        .iter()
        .map(|a| lift_rec(a, level + 1, d, leaves))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Shape::Node(t.head().expect("non-leaf").clone(), kids))
}

/// Rebuilds a term from a scaffold and a leaf tuple.
pub fn assemble(lt: &LeafTuple) -> Result<Term, RewriteError> {
    let expected = lt.skeleton.hole_count();
    if expected != lt.leaves.len() {
        return Err(RewriteError::LeafCountMismatch {
            expected,
            found: lt.leaves.len(),
        });
    }
    for (i, leaf) in lt.leaves.iter().enumerate() {
        if !leaf.is_leaf() {
            return Err(RewriteError::NotALeaf {
                index: i + 1,
                leaf: leaf.to_string(),
            });
        }
    }
    let mut next = lt.leaves.iter();
    Ok(assemble_rec(&lt.skeleton, &mut next))
}

fn assemble_rec<'a>(shape: &Shape, leaves: &mut impl Iterator<Item = &'a Term>) -> Term {
    match shape {
        Shape::Hole => leaves.next().expect("hole count checked").clone(),
        Shape::Node(sym, kids) => {
            let args = kids.iter().map(|k| assemble_rec(k, leaves)).collect();
            Term::apply(sym.clone(), args).expect("scaffold arities are consistent")
        }
    }
}

/// The finite data of the leaf rearrangement performed by a rewrite between
/// flat terms: leaf `i` of r′ equals leaf `map[i]` of `l` (1-based), and
/// `images[j]` is τ applied to leaf `j` of `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reindexing {
    pub map: Vec<usize>,
    pub images: Vec<Term>,
}

/// Computes the reindexing `u: {1..L(r′)} → {1..L(l)}`. Repeated leaves
/// resolve to their first (leftmost) occurrence in `l`.
pub fn variable_reindexing(
    l: &Term,
    r_flat: &Term,
    tau: &Substitution,
) -> Result<Reindexing, RewriteError> {
    let lt = lift(l)?;
    let rt = lift(r_flat)?;
    let mut first: BTreeMap<String, usize> = BTreeMap::new();
    for (j, leaf) in lt.leaves.iter().enumerate() {
        first.entry(leaf_key(leaf)).or_insert(j + 1);
    }
    let map = rt
        .leaves
        .iter()
        .enumerate()
        .map(|(i, leaf)| {
            first
                .get(&leaf_key(leaf))
                .copied()
                .ok_or_else(|| RewriteError::UnmappableLeaf {
                    index: i + 1,
                    leaf: leaf.to_string(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let images = lt.leaves.iter().map(|leaf| tau.apply(leaf)).collect();
    Ok(Reindexing { map, images })
}

// Variables and constants live in disjoint namespaces.
fn leaf_key(t: &Term) -> String {
    match t.kind() {
        TermKind::Var(v) => format!("v:{v}"),
        TermKind::App(h, _) => format!("c:{}", h.name()),
    }
}

/// The closed form R_p^n(t0) = t0[σ τⁿ(l)]_p with t0|_p = σ(l).
pub fn closed_form_iterate(
    rule: &RewriteRule,
    tau: &Substitution,
    t0: &Term,
    n: usize,
) -> Result<Term, RewriteError> {
    let no_match = || RewriteError::NoMatch {
        position: rule.position.clone(),
    };
    let sub = t0.subterm_at(&rule.position).map_err(|_| no_match())?;
    let sigma = matching(rule.lhs(), sub).ok_or_else(no_match)?;
    let mut pattern = rule.lhs().clone();
    for _ in 0..n {
        pattern = tau.apply(&pattern);
    }
    Ok(t0.replace_at(&rule.position, sigma.apply(&pattern))?)
}

/// Variables of `l` in order of first occurrence.
pub fn first_occurrence_order(l: &Term) -> Vec<Variable> {
    let mut seen = std::collections::BTreeSet::new();
    l.var_occurrences()
        .into_iter()
        .filter(|v| seen.insert(v.clone()))
        .collect()
}
