//! Rewriting models and their correspondence with cartesian dynamical
//! systems: projection to a hidden-state system (with the context map for
//! rules applied below the root) and embedding of a system as a model.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dsl::value_literal;
use crate::dynamics::{CartesianDynamicalSystem, DynamicsError, StateVector};
use crate::eval::{
    catamorphism, eval_with_assignment, extend_with_identity, AlgebraError, Assignment, CarrierKind,
    EvalError, Expr, SigmaAlgebra, Value,
};
use crate::rewrite::{iterability_witness, Identity, Iterates, RewriteError, RewriteRule};
use crate::term::{matching, Position, Signature, Substitution, Symbol, Term, TermKind, Variable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrespondenceError {
    #[error("rule is not iterable: the right-hand side is not an instance of the left-hand side")]
    NotIterable,
    #[error("initial term must be ground")]
    NotGround,
    #[error("initial term has no instance of the left-hand side at position {position}")]
    NoInstance { position: Position },
    #[error("position {position} does not exist in the term")]
    InvalidPosition { position: Position },
    #[error("state has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state disagrees between occurrences of variable `{variable}`")]
    InconsistentState { variable: String },
    #[error("cannot express in the interpretation vocabulary: {0}")]
    Inexpressible(String),
    #[error("invalid algebra: {0}")]
    Algebra(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// n ↦ cata(c)(R_pⁿ(t₀)) for an iterable rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RewritingModel {
    rule: RewriteRule,
    tau: Substitution,
    algebra: SigmaAlgebra,
    initial: Term,
}

impl RewritingModel {
    pub fn new(rule: RewriteRule, algebra: SigmaAlgebra, initial: Term) -> Result<Self, CorrespondenceError> {
        let tau = iterability_witness(&rule.identity).ok_or(CorrespondenceError::NotIterable)?;
        if !initial.is_ground() {
            return Err(CorrespondenceError::NotGround);
        }
        let matches = initial
            .subterm_at(&rule.position)
            .ok()
            .and_then(|s| matching(rule.lhs(), s))
            .is_some();
        if !matches {
            return Err(CorrespondenceError::NoInstance {
                position: rule.position.clone(),
            });
        }
        let algebra = if algebra.has_identity() {
            algebra
        } else {
            extend_with_identity(&algebra)
        };
        Ok(RewritingModel {
            rule,
            tau,
            algebra,
            initial,
        })
    }

    pub fn rule(&self) -> &RewriteRule {
        &self.rule
    }

    /// τ with r = τ(l).
    pub fn tau(&self) -> &Substitution {
        &self.tau
    }

    pub fn algebra(&self) -> &SigmaAlgebra {
        &self.algebra
    }

    pub fn initial(&self) -> &Term {
        &self.initial
    }

    pub fn with_carrier(&self, carrier: CarrierKind) -> Self {
        RewritingModel {
            algebra: self.algebra.with_carrier(carrier),
            ..self.clone()
        }
    }

    /// R_pⁿ(t₀) for n = 0, 1, ...
    pub fn iterates(&self) -> impl Iterator<Item = Result<Term, RewriteError>> {
        std::iter::once(Ok(self.initial.clone()))
            .chain(Iterates::new(self.rule.clone(), self.initial.clone()))
    }

    /// `[model_output(0), ..., model_output(n)]`.
    pub fn outputs(&self, n: usize) -> Result<Vec<Value>, CorrespondenceError> {
        self.iterates()
            .take(n + 1)
            .map(|t| Ok(catamorphism(&self.algebra, &t?)?))
            .collect()
    }

    /// Leaves of `l`, left to right; also the leaves of flatten(l).
    pub fn leaves(&self) -> Vec<Term> {
        self.rule.lhs().leaves().into_iter().map(|(_, t)| t).collect()
    }

    /// L(flatten(l)), the hidden state dimension.
    pub fn state_dim(&self) -> usize {
        self.rule.lhs().leaf_number() as usize
    }

    fn first_occurrences(&self) -> BTreeMap<Variable, usize> {
        let mut first = BTreeMap::new();
        for (i, leaf) in self.leaves().iter().enumerate() {
            if let Some(v) = leaf.as_var() {
                first.entry(v.clone()).or_insert(i);
            }
        }
        first
    }
}

/// cata(c)(R_pⁿ(t₀)).
pub fn model_output(m: &RewritingModel, n: usize) -> Result<Value, CorrespondenceError> {
    let t = m.iterates().nth(n).expect("iterates are unbounded")?;
    Ok(catamorphism(&m.algebra, &t)?)
}

fn assignment(m: &RewritingModel, state: &[Value], strict: bool) -> Result<Assignment, CorrespondenceError> {
    let dim = m.state_dim();
    if state.len() != dim {
        return Err(CorrespondenceError::DimensionMismatch {
            expected: dim,
            found: state.len(),
        });
    }
    let mut asg = Assignment::new();
    for (leaf, value) in m.leaves().iter().zip(state) {
        if let Some(v) = leaf.as_var() {
            match asg.get(v) {
                None => {
                    asg.insert(v.clone(), value.clone());
                }
                Some(prev) if strict && prev != value => {
                    return Err(CorrespondenceError::InconsistentState {
                        variable: v.name().to_string(),
                    })
                }
                Some(_) => {}
            }
        }
    }
    Ok(asg)
}

fn step_with(m: &RewritingModel, asg: &Assignment) -> Result<StateVector, CorrespondenceError> {
    m.leaves()
        .iter()
        .map(|leaf| Ok(eval_with_assignment(&m.algebra, &m.tau.apply(leaf), asg)?))
        .collect()
}

/// One step of the hidden dynamics: entry `i` is τ(leafᵢ(l)) evaluated with
/// each variable read from its first occurrence in the state.
pub fn hidden_step(m: &RewritingModel, state: &[Value]) -> Result<StateVector, CorrespondenceError> {
    step_with(m, &assignment(m, state, false)?)
}

/// [`hidden_step`] that also checks that repeated variables agree. Intended
/// for exact carriers.
pub fn hidden_step_checked(m: &RewritingModel, state: &[Value]) -> Result<StateVector, CorrespondenceError> {
    step_with(m, &assignment(m, state, true)?)
}

/// Compiles a term into an expression over the state: variables read their
/// slot, operators compose their interpretations.
fn compile_term(
    alg: &SigmaAlgebra,
    t: &Term,
    slot: &BTreeMap<Variable, usize>,
) -> Result<Expr, CorrespondenceError> {
    let numeric_identity = alg.carrier() != CarrierKind::Term;
    t.fold(
        |s| match s.kind() {
            TermKind::Var(v) => Some(
                slot.get(v)
                    .map(|&i| Expr::Proj(i + 1))
                    .ok_or_else(|| CorrespondenceError::Eval(EvalError::UnboundVariable(v.name().into()))),
            ),
            TermKind::App(..) => None,
        },
        |s, mut children| {
            let head = s.head().expect("applications only");
            if head.is_iota() && numeric_identity {
                return Ok(children.pop().expect("iota is unary"));
            }
            let interp = alg.interpretation(head)?;
            Ok(if children.is_empty() {
                interp
            } else {
                compose(interp, children)
            })
        },
    )
}

/// `outer ∘ (children)`, dropping compositions that are projections or
/// identities.
fn compose(outer: Expr, mut children: Vec<Expr>) -> Expr {
    if matches!(outer, Expr::Cons(_)) {
        return Expr::compose(outer, children);
    }
    if let Expr::Proj(i) = outer {
        if (1..=children.len()).contains(&i) {
            return children.swap_remove(i - 1);
        }
    }
    let identity = children.iter().enumerate().all(|(j, c)| *c == Expr::Proj(j + 1));
    match outer.max_proj() {
        Some(0) => outer,
        Some(m) if identity && m <= children.len() => outer,
        _ => Expr::compose(outer, children),
    }
}

/// A closed expression for cata(t): a literal on numeric carriers, the
/// term's own structure otherwise.
fn ground_expr(alg: &SigmaAlgebra, t: &Term) -> Result<Expr, CorrespondenceError> {
    if alg.carrier() == CarrierKind::Term {
        return compile_term(alg, t, &BTreeMap::new());
    }
    value_literal(&catamorphism(alg, t)?).map_err(|e| CorrespondenceError::Inexpressible(e.to_string()))
}

fn context_expr(alg: &SigmaAlgebra, t: &Term, p: &Position) -> Result<Expr, CorrespondenceError> {
    let Some((k, rest)) = p.split_first() else {
        return Ok(Expr::Proj(1));
    };
    let invalid = || CorrespondenceError::InvalidPosition { position: p.clone() };
    let head = t.head().ok_or_else(invalid)?;
    let args = t.args();
    if k == 0 || k > args.len() {
        return Err(invalid());
    }
    let inner = context_expr(alg, &args[k - 1], &rest).map_err(|e| match e {
        CorrespondenceError::InvalidPosition { .. } => invalid(),
        e => e,
    })?;
    if head.is_iota() && alg.carrier() != CarrierKind::Term {
        return Ok(inner);
    }
    let mut children = Vec::with_capacity(args.len());
    for (j, a) in args.iter().enumerate() {
        children.push(if j == k - 1 { inner.clone() } else { ground_expr(alg, a)? });
    }
    Ok(compose(alg.interpretation(head)?, children))
}

/// α_pᵗ as a function on the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFunction {
    pub carrier: CarrierKind,
    pub expr: Expr,
}

impl ContextFunction {
    pub fn apply(&self, x: &Value) -> Result<Value, EvalError> {
        self.expr.apply(std::slice::from_ref(x), self.carrier)
    }
}

/// The map α_pᵗ with α_pᵗ(cata(s)) = cata(Sub_pᵗ(s)).
pub fn context_function(alg: &SigmaAlgebra, t: &Term, p: &Position) -> Result<ContextFunction, CorrespondenceError> {
    if !t.has_position(p) {
        return Err(CorrespondenceError::InvalidPosition { position: p.clone() });
    }
    Ok(ContextFunction {
        carrier: alg.carrier(),
        expr: context_expr(alg, t, p)?,
    })
}

/// Sub_pˢ(t) = s[t]_p if p ∈ Pos(s), else t.
pub fn substitute_into_context(s: &Term, t: &Term, p: &Position) -> Term {
    if s.has_position(p) {
        s.replace_at(p, t.clone()).expect("position checked")
    } else {
        t.clone()
    }
}

/// A projected model: the hidden system, its start state, and the context
/// map applied after the system output.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSystem {
    pub system: CartesianDynamicalSystem,
    pub x0: StateVector,
    pub context: ContextFunction,
}

impl ProjectedSystem {
    pub fn is_root(&self) -> bool {
        self.context.expr == Expr::Proj(1)
    }

    /// context(f(Gᵏ(x₀))) for k = 0..n.
    pub fn outputs(&self, n: usize) -> Result<Vec<Value>, CorrespondenceError> {
        let tr = self.system.trajectory(&self.x0, n)?;
        if self.is_root() {
            return Ok(tr.outputs);
        }
        tr.outputs
            .iter()
            .map(|v| Ok(self.context.apply(v)?))
            .collect()
    }

    /// The system with the context folded into its output map.
    pub fn composed(&self) -> CartesianDynamicalSystem {
        if self.is_root() {
            self.system.clone()
        } else {
            self.system.clone().map_output(self.context.expr.clone())
        }
    }
}

/// The cartesian system of dimension L(flatten(l)) whose output, after the
/// context map, reproduces the model.
pub fn project(m: &RewritingModel) -> Result<ProjectedSystem, CorrespondenceError> {
    let alg = &m.algebra;
    let leaves = m.leaves();
    let first = m.first_occurrences();

    let transition = leaves
        .iter()
        .map(|leaf| compile_term(alg, &m.tau.apply(leaf), &first))
        .collect::<Result<Vec<_>, _>>()?;

    // Output: l itself with leaf i read from slot i.
    let mut slot = 0usize;
    let output = skeleton_expr(alg, m.rule.lhs(), &mut slot)?;

    let sub = m
        .initial
        .subterm_at(&m.rule.position)
        .map_err(|_| CorrespondenceError::NoInstance {
            position: m.rule.position.clone(),
        })?;
    let sigma = matching(m.rule.lhs(), sub).ok_or_else(|| CorrespondenceError::NoInstance {
        position: m.rule.position.clone(),
    })?;
    let x0 = leaves
        .iter()
        .map(|leaf| Ok(catamorphism(alg, &sigma.apply(leaf))?))
        .collect::<Result<Vec<_>, CorrespondenceError>>()?;

    let system = CartesianDynamicalSystem::new(alg.carrier(), transition, output)?;
    let context = context_function(alg, &m.initial, &m.rule.position)?;
    Ok(ProjectedSystem { system, x0, context })
}

fn skeleton_expr(alg: &SigmaAlgebra, t: &Term, slot: &mut usize) -> Result<Expr, CorrespondenceError> {
    if t.is_leaf() {
        *slot += 1;
        return Ok(Expr::Proj(*slot));
    }
    let head = t.head().expect("non-leaf");
    let children = t
        .args()
        .iter()
        .map(|a| skeleton_expr(alg, a, slot))
        .collect::<Result<Vec<_>, _>>()?;
    if head.is_iota() && alg.carrier() != CarrierKind::Term {
        return Ok(children.into_iter().next().expect("iota is unary"));
    }
    Ok(compose(alg.interpretation(head)?, children))
}

/// Realizes `(G, f, x₀)` as the model with constants a₁..a_d, operators
/// σ₀..σ_d of arity d, rule σ₀(v₁..v_d) ⇒ σ₀(σ₁(v₁..v_d), ..., σ_d(v₁..v_d))
/// at the root, and interpretation σ₀ ↦ f, σᵢ ↦ πᵢ∘G, aᵢ ↦ x₀ᵢ.
pub fn embed(sys: &CartesianDynamicalSystem, x0: &[Value]) -> Result<RewritingModel, CorrespondenceError> {
    let d = sys.dim();
    if x0.len() != d {
        return Err(CorrespondenceError::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    let sym = |name: String, arity| Symbol::new(&name, arity).expect("generated names are valid");
    let consts: Vec<Symbol> = (1..=d).map(|i| sym(format!("a{i}"), 0)).collect();
    let ops: Vec<Symbol> = (0..=d).map(|i| sym(format!("s{i}"), d)).collect();
    let sig = Signature::new(consts.iter().chain(&ops).cloned())
        .expect("generated names are distinct")
        .with_identity();

    let mut interps = BTreeMap::new();
    for (a, v) in consts.iter().zip(x0) {
        let lit = value_literal(v).map_err(|e| CorrespondenceError::Inexpressible(e.to_string()))?;
        interps.insert(a.clone(), lit);
    }
    interps.insert(ops[0].clone(), sys.output().clone());
    for (s, g) in ops[1..].iter().zip(sys.transition()) {
        interps.insert(s.clone(), g.clone());
    }
    let algebra = SigmaAlgebra::new(sig, sys.carrier(), interps).map_err(|errs| {
        CorrespondenceError::Algebra(
            errs.iter().map(AlgebraError::to_string).collect::<Vec<_>>().join("; "),
        )
    })?;

    let vars: Vec<Term> = (1..=d)
        .map(|i| Term::var(Variable::new(&format!("v{i}")).expect("valid name")))
        .collect();
    let app = |s: &Symbol, args: Vec<Term>| Term::apply(s.clone(), args).expect("arity d");
    let lhs = app(&ops[0], vars.clone());
    let rhs = app(&ops[0], ops[1..].iter().map(|s| app(s, vars.clone())).collect());
    let t0 = app(
        &ops[0],
        consts.iter().map(|a| Term::constant(a.clone()).expect("constant")).collect(),
    );
    let rule = RewriteRule::new(Identity::new(lhs, rhs)?, Position::root());
    RewritingModel::new(rule, algebra, t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::test_support::t;
    use crate::dynamics::{from_recurrence, linear_system};
    use crate::number::Number;

    fn ints(v: &[i64]) -> Vec<Value> {
        v.iter().map(|&i| Value::rational(i)).collect()
    }

    fn alg(sig_of: &Term, interps: &[(&str, Expr)]) -> SigmaAlgebra {
        let sig = Signature::new(sig_of.symbols().into_iter().filter(|s| !s.is_iota())).unwrap();
        let map = interps
            .iter()
            .map(|(n, e)| (sig.lookup(n).unwrap(), e.clone()))
            .collect();
        SigmaAlgebra::new(sig, CarrierKind::Rational, map).unwrap()
    }

    fn fib_model() -> RewritingModel {
        let (sys, y0) = from_recurrence(
            CarrierKind::Rational,
            Expr::add(Expr::proj(1), Expr::proj(2)),
            ints(&[0, 1]),
        )
        .unwrap();
        embed(&sys, &y0).unwrap()
    }

    #[test]
    fn embedded_fibonacci() {
        let m = fib_model();
        assert_eq!(m.outputs(9).unwrap(), ints(&[1, 1, 2, 3, 5, 8, 13, 21, 34, 55]));
        assert_eq!(model_output(&m, 0).unwrap(), Value::rational(1));
        assert_eq!(hidden_step(&m, &ints(&[1, 1])).unwrap(), ints(&[2, 1]));
        let p = project(&m).unwrap();
        assert_eq!(p.system.dim(), 2);
        assert!(p.is_root());
        assert_eq!(p.outputs(9).unwrap(), m.outputs(9).unwrap());
    }

    #[test]
    fn identity_system_embeds_to_constant() {
        let sys = CartesianDynamicalSystem::new(CarrierKind::Rational, vec![Expr::proj(1)], Expr::proj(1)).unwrap();
        let m = embed(&sys, &ints(&[7])).unwrap();
        assert_eq!(m.outputs(5).unwrap(), ints(&[7; 6]));
        assert_eq!(hidden_step(&m, &ints(&[3])).unwrap(), ints(&[3]));
    }

    #[test]
    fn non_root_projection() {
        let lhs = t("s0(x,y)");
        let rhs = t("s0(s1(x,y),s2(x,y))");
        let t0 = t("h(a,s0(b,c))");
        let algebra = alg(
            &t("h(s0(s1(a,b),s2(b,c)),c)"),
            &[
                ("h", Expr::mul(Expr::proj(1), Expr::proj(2))),
                ("s0", Expr::sub(Expr::proj(1), Expr::proj(2))),
                ("s1", Expr::add(Expr::proj(1), Expr::proj(2))),
                ("s2", Expr::mul(Expr::proj(2), Expr::num(2))),
                ("a", Expr::num(3)),
                ("b", Expr::num(1)),
                ("c", Expr::num(-2)),
            ],
        );
        let rule = RewriteRule::new(Identity::new(lhs, rhs).unwrap(), Position::new(vec![2]));
        let m = RewritingModel::new(rule, algebra, t0).unwrap();
        let p = project(&m).unwrap();
        assert!(!p.is_root());
        assert_eq!(p.outputs(10).unwrap(), m.outputs(10).unwrap());
        assert_eq!(p.composed().trajectory(&p.x0, 10).unwrap().outputs, m.outputs(10).unwrap());
    }

    #[test]
    fn repeated_variables_and_constants() {
        let lhs = t("f(x,g(x,c))");
        let rhs = t("f(f(x,x),g(f(x,x),c))");
        let t0 = t("f(d,g(d,c))");
        let algebra = alg(
            &t("f(g(c,d),d)"),
            &[
                ("f", Expr::add(Expr::proj(1), Expr::mul(Expr::proj(2), Expr::num(2)))),
                ("g", Expr::sub(Expr::proj(1), Expr::proj(2))),
                ("c", Expr::num(5)),
                ("d", Expr::Num(Number::ratio(1, 3))),
            ],
        );
        let rule = RewriteRule::new(Identity::new(lhs, rhs).unwrap(), Position::root());
        let m = RewritingModel::new(rule, algebra, t0).unwrap();
        let p = project(&m).unwrap();
        assert_eq!(p.system.dim(), 3);
        assert_eq!(p.outputs(8).unwrap(), m.outputs(8).unwrap());
        let mut y = p.x0.clone();
        for _ in 0..4 {
            let next = hidden_step_checked(&m, &y).unwrap();
            assert_eq!(next, p.system.step(&y).unwrap());
            y = next;
        }
        assert!(matches!(
            hidden_step_checked(&m, &ints(&[1, 2, 5])),
            Err(CorrespondenceError::InconsistentState { .. })
        ));
    }

    #[test]
    fn term_carrier_outputs_are_iterates() {
        let lhs = t("f(x,y)");
        let rhs = t("f(g(x),y)");
        let t0 = t("k(f(a,b))");
        let sig = Signature::new(t("k(f(g(a),b))").symbols()).unwrap();
        let m = RewritingModel::new(
            RewriteRule::new(Identity::new(lhs, rhs).unwrap(), Position::new(vec![1])),
            SigmaAlgebra::free(sig),
            t0,
        )
        .unwrap();
        let outs = m.outputs(3).unwrap();
        assert_eq!(outs[2], Value::Term(t("k(f(g(g(a)),b))")));
        let p = project(&m).unwrap();
        assert_eq!(p.outputs(3).unwrap(), outs);
    }

    #[test]
    fn contexts() {
        let algebra = alg(
            &t("plus(one,ten)"),
            &[("plus", Expr::add(Expr::proj(1), Expr::proj(2))), ("one", Expr::num(1)), ("ten", Expr::num(10))],
        );
        let f = context_function(&algebra, &t("plus(one,ten)"), &Position::root()).unwrap();
        assert_eq!(f.apply(&Value::rational(4)).unwrap(), Value::rational(4));
        let f = context_function(&algebra, &t("plus(one,ten)"), &Position::new(vec![2])).unwrap();
        assert_eq!(f.apply(&Value::rational(4)).unwrap(), Value::rational(5));
        let f = context_function(&algebra, &t("plus(plus(one,one),ten)"), &Position::new(vec![1, 2])).unwrap();
        assert_eq!(f.apply(&Value::rational(4)).unwrap(), Value::rational(15));
        assert!(context_function(&algebra, &t("plus(one,ten)"), &Position::new(vec![3])).is_err());
    }

    #[test]
    fn substitution_cases() {
        assert_eq!(substitute_into_context(&t("f(a,b)"), &t("c"), &Position::root()), t("c"));
        assert_eq!(substitute_into_context(&t("f(a,b)"), &t("c"), &Position::new(vec![3])), t("c"));
        assert_eq!(substitute_into_context(&t("f(a,b)"), &t("c"), &Position::new(vec![2])), t("f(a,c)"));
    }

    #[test]
    fn linear_round_trip() {
        let q = Number::from_int;
        let sys = linear_system(
            CarrierKind::Rational,
            vec![vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)], vec![Number::ratio(1, 2), q(-1), q(1)]],
            vec![q(1), q(2), q(-1)],
        )
        .unwrap();
        let x0 = ints(&[1, 0, 2]);
        let m = embed(&sys, &x0).unwrap();
        let p = project(&m).unwrap();
        assert_eq!(p.system.dim(), 3);
        let direct = sys.trajectory(&x0, 20).unwrap().outputs;
        assert_eq!(m.outputs(20).unwrap(), direct);
        assert_eq!(p.outputs(20).unwrap(), direct);
    }

    #[test]
    fn rejects_bad_models() {
        let algebra = alg(&t("f(a,a)"), &[("f", Expr::proj(1)), ("a", Expr::num(1))]);
        let rule = |l: &str, r: &str| RewriteRule::new(Identity::new(t(l), t(r)).unwrap(), Position::root());
        assert_eq!(
            RewritingModel::new(rule("f(x,y)", "x"), algebra.clone(), t("f(a,a)")),
            Err(CorrespondenceError::NotIterable)
        );
        assert!(matches!(
            RewritingModel::new(rule("f(x,a)", "f(f(x,a),a)"), algebra.clone(), t("a")),
            Err(CorrespondenceError::NoInstance { .. })
        ));
    }
}
