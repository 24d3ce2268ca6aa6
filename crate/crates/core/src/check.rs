//! Seeded property suites shared by the `check` command and the tests.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;

use crate::correspondence::{embed, project, RewritingModel};
use crate::dsl::{self, ModelFile, RewritingFile};
use crate::dynamics::{mpnn_system, MpnnSpec};
use crate::eval::{catamorphism, extend_with_identity, Value};
use crate::gen::{self, CaseRng, ModelParams};
use crate::linalg;
use crate::number::Number;
use crate::recurrence::{polynomial_recurrence, reduce_linear, vandermonde_check, vandermonde_determinant, Reduction};
use crate::rewrite::{
    assemble, closed_form_iterate, flatten, is_uniformly_deep, iterate, lift, rewrite_at, Identity, RewriteRule,
};
use crate::term::{matching, Position, Signature, Substitution, Symbol, Term, Variable};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Steps compared per model in the projection suite.
pub const PROJECTION_STEPS: usize = 15;
/// Steps compared per system in the round-trip suite.
pub const ROUNDTRIP_STEPS: usize = 30;
/// Models whose hidden values outgrow this many bits are redrawn.
pub const MAX_BITS: u64 = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub case: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub passed: usize,
    /// The smallest counterexample found, if any.
    pub failure: Option<Failure>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none() && self.passed == self.cases
    }
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seed: u64,
    /// Overrides every suite's default case count.
    pub cases: Option<usize>,
    pub parallel: bool,
    /// Swaps two transition components of every projected system.
    pub mutant: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: DEFAULT_SEED,
            cases: None,
            parallel: false,
            mutant: false,
        }
    }
}

struct Counterexample {
    size: usize,
    text: String,
}

type CaseFn = fn(&mut CaseRng, u64, bool) -> Result<(), Counterexample>;

struct Suite {
    name: &'static str,
    cases: usize,
    run: CaseFn,
}

const SUITES: &[Suite] = &[
    Suite { name: "term", cases: 10_000, run: term_case },
    Suite { name: "rewrite", cases: 10_000, run: rewrite_case },
    Suite { name: "flatten", cases: 1_000, run: flatten_case },
    Suite { name: "projection", cases: 200, run: projection_case },
    Suite { name: "roundtrip", cases: 200, run: roundtrip_case },
    Suite { name: "vandermonde", cases: 1_000, run: vandermonde_case },
    Suite { name: "reduce", cases: 200, run: reduce_case },
    Suite { name: "recurrence", cases: 200, run: recurrence_case },
    Suite { name: "dsl", cases: 10_000, run: dsl_case },
    Suite { name: "mpnn", cases: 50, run: mpnn_case },
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

pub fn default_cases(name: &str) -> Option<usize> {
    SUITES.iter().find(|s| s.name == name).map(|s| s.cases)
}

/// Runs one suite; `None` for an unknown name.
pub fn run_suite(name: &str, cfg: &CheckConfig) -> Option<SuiteReport> {
    let (tag, suite) = SUITES.iter().enumerate().find(|(_, s)| s.name == name)?;
    let cases = cfg.cases.unwrap_or(suite.cases);
    let one = |i: u64| -> Result<(), (usize, Failure)> {
        let mut rng = gen::case_rng(cfg.seed, tag as u64, i);
        let outcome = catch_unwind(AssertUnwindSafe(|| (suite.run)(&mut rng, i, cfg.mutant)));
        let cx = match outcome {
            Ok(Ok(())) => return Ok(()),
            Ok(Err(cx)) => cx,
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Counterexample {
                    size: usize::MAX,
                    text: format!("panicked: {msg}"),
                }
            }
        };
        Err((cx.size, Failure { case: i, detail: cx.text }))
    };
    let results: Vec<Result<(), (usize, Failure)>> = if cfg.parallel {
        (0..cases as u64).into_par_iter().map(one).collect()
    } else {
        (0..cases as u64).map(one).collect()
    };
    let passed = results.iter().filter(|r| r.is_ok()).count();
    let failure = results
        .into_iter()
        .filter_map(Result::err)
        .min_by_key(|(size, f)| (*size, f.case))
        .map(|(_, f)| f);
    Some(SuiteReport {
        name: suite.name,
        cases,
        passed,
        failure,
    })
}

pub fn run_all(cfg: &CheckConfig) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .map(|s| run_suite(s.name, cfg).expect("known suite"))
        .collect()
}

fn fail(size: usize, text: impl Into<String>) -> Result<(), Counterexample> {
    Err(Counterexample {
        size,
        text: text.into(),
    })
}

fn ensure(cond: bool, size: usize, text: impl FnOnce() -> String) -> Result<(), Counterexample> {
    if cond {
        Ok(())
    } else {
        fail(size, text())
    }
}

fn size_of(t: &Term) -> usize {
    t.node_count() as usize
}

fn term_case(rng: &mut CaseRng, _: u64, _: bool) -> Result<(), Counterexample> {
    let sig = gen::random_signature(rng, 3).with_identity();
    let vars = gen::variables(rng.random_range(0..=3));
    let depth = rng.random_range(0..=5);
    let t = gen::random_term_with_iota(rng, &sig, &vars, depth);
    let n = size_of(&t);
    let declared: BTreeSet<Variable> = vars.iter().cloned().collect();
    let printed = dsl::print_term(&t);
    match dsl::parse_term(&printed, &sig, &declared) {
        Ok(back) => ensure(back == t, n, || format!("{printed} reparsed as {back}"))?,
        Err(e) => return fail(n, format!("{printed} does not parse: {e}")),
    }
    let positions = t.positions();
    for p in &positions {
        let sub = t.subterm_at(p).expect("own position").clone();
        ensure(t.replace_at(p, sub).ok().as_ref() == Some(&t), n, || {
            format!("replacing {t} at {p} by its own subterm changed it")
        })?;
    }
    let leaves = positions
        .iter()
        .filter(|p| t.subterm_at(p).is_ok_and(Term::is_leaf))
        .count() as u64;
    ensure(leaves == t.leaf_number(), n, || format!("leaf number of {t}"))?;
    let deepest = positions.iter().map(Position::len).max().unwrap_or(0);
    ensure(deepest == t.depth(), n, || format!("depth of {t}"))?;
    let plain = Signature::new(sig.symbols().iter().cloned()).expect("valid");
    let sigma: Substitution = t
        .vars()
        .into_iter()
        .map(|v| (v, gen::random_ground_term(rng, &plain, 2)))
        .collect();
    let image = sigma.apply(&t);
    ensure(image.is_ground(), n, || format!("{image} is not ground"))?;
    let found = matching(&t, &image);
    ensure(found.as_ref().map(|s| s.apply(&t)).as_ref() == Some(&image), n, || {
        format!("matching {t} against {image}")
    })
}

/// A ground context with a hole position, or the root.
fn random_context(rng: &mut CaseRng, sig: &Signature) -> (Term, Position) {
    if rng.random_bool(0.5) {
        let c = gen::random_ground_term(rng, sig, 2);
        let candidates: Vec<Position> = c.positions().into_iter().filter(|p| !p.is_root()).collect();
        if !candidates.is_empty() {
            let p = candidates[rng.random_range(0..candidates.len())].clone();
            return (c, p);
        }
    }
    let c = gen::random_ground_term(rng, sig, 0);
    (c, Position::root())
}

fn ground_substitution(rng: &mut CaseRng, sig: &Signature, vars: impl IntoIterator<Item = Variable>) -> Substitution {
    vars.into_iter()
        .map(|v| (v, gen::random_ground_term(rng, sig, 2)))
        .collect()
}

fn random_lhs(rng: &mut CaseRng, sig: &Signature, vars: &[Variable]) -> Term {
    loop {
        let l = gen::random_term(rng, sig, vars, 3, 0.7);
        if !l.is_var() {
            return l;
        }
    }
}

fn rewrite_case(rng: &mut CaseRng, i: u64, _: bool) -> Result<(), Counterexample> {
    if i == 0 {
        collision()?;
    }
    let sig = gen::random_signature(rng, 3);
    let vars = gen::variables(rng.random_range(1..=3));
    let l = random_lhs(rng, &sig, &vars);
    let lvars: Vec<Variable> = l.vars().into_iter().collect();
    let (ctx, p) = random_context(rng, &sig);
    let describe = |r: &Term, t: &Term| format!("rule {l} => {r} @ {p} on {t}");

    // Surjectivity: every t' in T_p^r has the preimage t'[σ(l)]_p.
    let r = if lvars.is_empty() {
        l.clone()
    } else {
        gen::random_term(rng, &sig, &lvars, 2, 0.7)
    };
    let rule = RewriteRule::new(Identity::new(l.clone(), r.clone()).expect("vars(r) ⊆ vars(l)"), p.clone());
    let sigma_r = ground_substitution(rng, &sig, r.vars());
    let target = ctx.replace_at(&p, sigma_r.apply(&r)).expect("valid position");
    let mut sigma = sigma_r.clone();
    for v in l.vars() {
        if sigma.get(&v).is_none() {
            sigma.insert(v, gen::random_ground_term(rng, &sig, 2));
        }
    }
    let pre = ctx.replace_at(&p, sigma.apply(&l)).expect("valid position");
    let size = size_of(&pre) + size_of(&r);
    match rewrite_at(&rule, &pre) {
        Ok(img) => ensure(img == target, size, || format!("{}: image {img}, expected {target}", describe(&r, &pre)))?,
        Err(e) => return fail(size, format!("{}: {e}", describe(&r, &pre))),
    }

    // Injectivity when vars(r) = vars(l).
    let r = same_vars_rhs(rng, &sig, &l);
    let rule = RewriteRule::new(Identity::new(l.clone(), r.clone()).expect("vars(r) = vars(l)"), p.clone());
    let s1 = ground_substitution(rng, &sig, l.vars());
    let s2 = if rng.random_bool(0.5) || lvars.is_empty() {
        let mut s = s1.clone();
        if let Some(v) = lvars.get(rng.random_range(0..lvars.len().max(1))) {
            s.insert(v.clone(), gen::random_ground_term(rng, &sig, 2));
        }
        s
    } else {
        ground_substitution(rng, &sig, l.vars())
    };
    let t1 = ctx.replace_at(&p, s1.apply(&l)).expect("valid position");
    let t2 = ctx.replace_at(&p, s2.apply(&l)).expect("valid position");
    let size = size_of(&t1) + size_of(&t2) + size_of(&r);
    let (i1, i2) = match (rewrite_at(&rule, &t1), rewrite_at(&rule, &t2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(size, format!("{}: {e}", describe(&r, &t1))),
    };
    ensure((t1 == t2) == (i1 == i2), size, || {
        format!("{}: {t1} and {t2} rewrite to {i1} and {i2}", describe(&r, &t1))
    })?;
    // The image does not depend on how σ was obtained.
    let direct = ctx.replace_at(&p, s1.apply(&r)).expect("valid position");
    ensure(direct == i1, size, || format!("{}: {i1} differs from {direct}", describe(&r, &t1)))?;

    // Closed form of iteration for an iterable rule.
    let (id, tau) = gen::random_iterable_rule(rng, &sig, &ModelParams::default());
    let sigma = ground_substitution(rng, &sig, id.lhs().vars());
    let t0 = ctx.replace_at(&p, sigma.apply(id.lhs())).expect("valid position");
    let rule = RewriteRule::new(id, p.clone());
    let size = size_of(&t0) + size_of(rule.rhs());
    let steps = rng.random_range(0..=8);
    let its = iterate(&rule, &t0, steps).map_err(|e| Counterexample {
        size,
        text: format!("{}: {e}", describe(rule.rhs(), &t0)),
    })?;
    for (n, t) in its.iter().enumerate() {
        let closed = closed_form_iterate(&rule, &tau, &t0, n).expect("instance");
        ensure(&closed == t, size, || format!("{}: step {n} differs from the closed form", describe(rule.rhs(), &t0)))?;
        ensure(t.subterm_at(&p).is_ok_and(|s| matching(rule.lhs(), s).is_some()), size, || {
            format!("{}: step {n} left the instance set", describe(rule.rhs(), &t0))
        })?;
    }
    Ok(())
}

/// A right-hand side using exactly the variables of `l`.
fn same_vars_rhs(rng: &mut CaseRng, sig: &Signature, l: &Term) -> Term {
    let lvars: Vec<Variable> = l.vars().into_iter().collect();
    if lvars.is_empty() {
        return l.clone();
    }
    for _ in 0..20 {
        let r = gen::random_term(rng, sig, &lvars, 3, 0.8);
        if r.vars().len() == lvars.len() {
            return r;
        }
    }
    // A permutation of the variables of l.
    let mut shuffled = lvars.clone();
    shuffled.rotate_left(1);
    lvars
        .into_iter()
        .zip(shuffled)
        .map(|(v, w)| (v, Term::var(w)))
        .collect::<Substitution>()
        .apply(l)
}

fn collision() -> Result<(), Counterexample> {
    let sym = |n: &str, a| Symbol::new(n, a).expect("valid");
    let (f, g) = (sym("f", 2), sym("g", 1));
    let c = |n: &str| Term::constant(sym(n, 0)).expect("constant");
    let x = Term::var(Variable::new("x").expect("valid"));
    let y = Term::var(Variable::new("y").expect("valid"));
    let l = Term::apply(f.clone(), vec![x.clone(), y]).expect("arity");
    let r = Term::apply(g, vec![x]).expect("arity");
    let rule = RewriteRule::new(Identity::new(l, r).expect("identity"), Position::root());
    let t1 = Term::apply(f.clone(), vec![c("a"), c("b")]).expect("arity");
    let t2 = Term::apply(f, vec![c("a"), c("a")]).expect("arity");
    let (i1, i2) = (rewrite_at(&rule, &t1), rewrite_at(&rule, &t2));
    ensure(t1 != t2 && i1.is_ok() && i1 == i2, 0, || {
        format!("f(x,y) => g(x) should send {t1} and {t2} to the same term")
    })
}

fn flatten_case(rng: &mut CaseRng, _: u64, _: bool) -> Result<(), Counterexample> {
    let sig = gen::random_signature(rng, 3).with_identity();
    let depth = rng.random_range(0..=5);
    let t = gen::random_term_with_iota(rng, &sig, &[], depth);
    let plain = Signature::new(sig.symbols().iter().cloned()).expect("valid");
    let alg = extend_with_identity(&gen::random_rational_algebra(rng, &plain, 0.3));
    let flat = flatten(&t);
    let n = size_of(&t);
    ensure(is_uniformly_deep(&flat) && flat.depth() == t.depth(), n, || {
        format!("flatten({t}) = {flat} is not uniformly deep at depth {}", t.depth())
    })?;
    let (a, b) = (catamorphism(&alg, &t), catamorphism(&alg, &flat));
    ensure(a.is_ok() && a == b, n, || format!("cata({t}) = {a:?} but cata({flat}) = {b:?}"))?;
    let lt = lift(&flat).map_err(|e| Counterexample {
        size: n,
        text: format!("lift({flat}): {e}"),
    })?;
    ensure(assemble(&lt).ok().as_ref() == Some(&flat), n, || format!("assemble(lift({flat}))"))?;
    // Same shape, fresh leaves.
    let vars = gen::variables(3);
    let fresh: Vec<Term> = lt
        .leaves
        .iter()
        .map(|_| Term::var(vars[rng.random_range(0..vars.len())].clone()))
        .collect();
    let relabelled = crate::rewrite::LeafTuple {
        skeleton: lt.skeleton.clone(),
        leaves: fresh,
    };
    let rebuilt = assemble(&relabelled).expect("matching hole count");
    ensure(lift(&rebuilt).ok().as_ref() == Some(&relabelled), n, || {
        format!("lift(assemble(..)) on the skeleton of {flat}")
    })
}

fn model_text(m: &RewritingModel) -> String {
    dsl::print(&ModelFile::Rewriting(RewritingFile::from_model(m)))
}

fn compare_streams(lhs: &[Value], rhs: &[Value]) -> Option<usize> {
    if lhs.len() != rhs.len() {
        return Some(lhs.len().min(rhs.len()));
    }
    lhs.iter().zip(rhs).position(|(a, b)| a != b)
}

fn projection_case(rng: &mut CaseRng, _: u64, mutant: bool) -> Result<(), Counterexample> {
    let params = ModelParams::default();
    let m = gen::random_bounded_model(rng, &params, PROJECTION_STEPS, MAX_BITS);
    let text = model_text(&m);
    let size = text.len();
    let mut ps = project(&m).map_err(|e| Counterexample {
        size,
        text: format!("projection failed: {e}\n{text}"),
    })?;
    if mutant {
        ps.system.swap_transition(0, 1);
    }
    let expected = m.outputs(PROJECTION_STEPS).map_err(|e| Counterexample {
        size,
        text: format!("model evaluation failed: {e}\n{text}"),
    })?;
    let got = ps.outputs(PROJECTION_STEPS).map_err(|e| Counterexample {
        size,
        text: format!("projected system failed: {e}\n{text}"),
    })?;
    match compare_streams(&expected, &got) {
        None => Ok(()),
        Some(n) => fail(
            size,
            format!(
                "step {n}: model gives {}, projected system gives {}\n{text}",
                expected.get(n).map_or("nothing".into(), Value::to_string),
                got.get(n).map_or("nothing".into(), Value::to_string),
            ),
        ),
    }
}

fn roundtrip_case(rng: &mut CaseRng, _: u64, mutant: bool) -> Result<(), Counterexample> {
    let (sys, x0) = gen::random_linear_system(rng, 4);
    let file = dsl::SystemFile::general(&sys, &x0, None).expect("rational literals");
    let text = dsl::print(&ModelFile::System(file));
    let size = text.len();
    let err = |what: &str, e: &dyn std::fmt::Display| Counterexample {
        size,
        text: format!("{what}: {e}\n{text}"),
    };
    let expected = sys.trajectory(&x0, ROUNDTRIP_STEPS).map_err(|e| err("trajectory", &e))?.outputs;
    let m = embed(&sys, &x0).map_err(|e| err("embed", &e))?;
    let mut ps = project(&m).map_err(|e| err("project", &e))?;
    if mutant {
        ps.system.swap_transition(0, 1);
    }
    let got = ps.outputs(ROUNDTRIP_STEPS).map_err(|e| err("projected trajectory", &e))?;
    if let Some(n) = compare_streams(&expected, &got) {
        return fail(size, format!("step {n}: system gives {}, round trip gives {}\n{text}", expected[n], got.get(n).map_or("nothing".into(), Value::to_string)));
    }
    let direct = m.outputs(8).map_err(|e| err("embedded model", &e))?;
    match compare_streams(&expected[..9], &direct) {
        None => Ok(()),
        Some(n) => fail(size, format!("step {n}: embedded model gives {}\n{text}", direct[n])),
    }
}

fn vandermonde_case(rng: &mut CaseRng, _: u64, _: bool) -> Result<(), Counterexample> {
    let (b, l) = gen::vandermonde_case(rng, 6);
    let product = vandermonde_check(&b, &l);
    let det = vandermonde_determinant(&b, &l).unwrap_or(f64::NAN);
    let rel = (product - det).abs() / det.abs().max(f64::MIN_POSITIVE);
    ensure(rel <= 1e-9 || product == det, b.len(), || {
        format!("b = {b:?}, eigenvalues = {l:?}: product {product:e}, determinant {det:e}")
    })
}

/// `b Aᵏ x₀` for k = 0..=n.
fn linear_outputs(a: &[Vec<f64>], b: &[f64], x0: &[f64], n: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        out.push(linalg::dot(b, &x));
        x = linalg::mat_vec(a, &x);
    }
    out
}

fn reduce_case(rng: &mut CaseRng, i: u64, _: bool) -> Result<(), Counterexample> {
    if i == 0 {
        let fib = reduce_linear(&[vec![1.0, 1.0], vec![1.0, 0.0]], &[1.0, 0.0]);
        let c = fib.recurrence().map(|r| r.coefficients.clone()).unwrap_or_default();
        ensure(c.len() == 2 && (c[0] - 1.0).abs() <= 1e-9 && (c[1] - 1.0).abs() <= 1e-9, 0, || {
            format!("Fibonacci companion system reduced to {fib:?}")
        })?;
    }
    let s = gen::well_conditioned_system(rng, 4);
    let d = s.eigenvalues.len();
    let describe = |s: &gen::SpectralSystem| format!("A = {:?}, b = {:?}, x0 = {:?}", s.matrix, s.functional, s.x0);
    let rec = match reduce_linear(&s.matrix, &s.functional) {
        Reduction::Reducible { recurrence, .. } => recurrence,
        Reduction::NotReducible { reason, .. } => return fail(d, format!("{}: {reason}", describe(&s))),
    };
    let truth = linear_outputs(&s.matrix, &s.functional, &s.x0, 50);
    let unrolled = rec.unroll(&truth[..d], 50);
    let scale = truth.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let err = truth
        .iter()
        .zip(&unrolled)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    ensure(unrolled.len() == truth.len() && err <= 1e-6, d, || {
        format!("{}: relative error {err:e}", describe(&s))
    })?;
    for degenerate in [gen::repeated_eigenvalue_system(rng, 4), gen::blind_functional_system(rng, 4)] {
        let r = reduce_linear(&degenerate.matrix, &degenerate.functional);
        ensure(matches!(r, Reduction::NotReducible { .. }), degenerate.eigenvalues.len(), || {
            format!("{}: degenerate system reported reducible", describe(&degenerate))
        })?;
    }
    Ok(())
}

fn recurrence_case(rng: &mut CaseRng, _: u64, _: bool) -> Result<(), Counterexample> {
    let degree = rng.random_range(1..=3);
    let mut coeffs: Vec<Number> = (0..=degree).map(|_| Number::from_int(rng.random_range(-4..=4))).collect();
    if coeffs[degree].is_zero() {
        coeffs[degree] = Number::one();
    }
    let text = coeffs.iter().map(Number::to_string).collect::<Vec<_>>().join(", ");
    let rel = polynomial_recurrence(&coeffs).map_err(|e| Counterexample {
        size: degree,
        text: format!("p = [{text}]: {e}"),
    })?;
    let unrolled = rel.unroll(20).map_err(|e| Counterexample {
        size: degree,
        text: format!("p = [{text}]: {e}"),
    })?;
    for (n, v) in unrolled.iter().enumerate() {
        let x = BigRational::from_integer((n as i64).into());
        let want = coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * &x + c.as_rational());
        ensure(*v == Value::Rational(want.clone()), degree, || {
            format!("p = [{text}]: s_{n} = {v}, p({n}) = {want}")
        })?;
    }
    let (sys, y0) = rel.to_system().map_err(|e| Counterexample {
        size: degree,
        text: format!("p = [{text}]: {e}"),
    })?;
    let tr = sys.trajectory(&y0, 20 - (degree - 1)).map_err(|e| Counterexample {
        size: degree,
        text: format!("p = [{text}]: {e}"),
    })?;
    ensure(tr.outputs[..] == unrolled[degree - 1..], degree, || {
        format!("p = [{text}]: system trajectory differs from the unrolled recurrence")
    })
}

pub const CORPUS: &[&str] = &[
    include_str!("../../../models/fibonacci.rwm"),
    include_str!("../../../models/fibonacci_system.rwm"),
    include_str!("../../../models/assoc.rwm"),
    include_str!("../../../models/nonroot.rwm"),
    include_str!("../../../models/mpnn3.rwm"),
    include_str!("../../../models/sinusoid.rwm"),
];

fn dsl_case(rng: &mut CaseRng, i: u64, _: bool) -> Result<(), Counterexample> {
    term_round_trip(rng)?;
    if !i.is_multiple_of(10) {
        return Ok(());
    }
    let base = CORPUS[rng.random_range(0..CORPUS.len())];
    let src = gen::mutate_source(rng, base);
    let size = src.len();
    match dsl::parse_model(&src) {
        Ok(m) => {
            let printed = dsl::print(&m);
            let back = dsl::parse_model(&printed);
            ensure(back.as_ref().ok() == Some(&m), size, || {
                format!("accepted file does not survive print/parse:\n{src}")
            })
        }
        Err(e) => ensure(
            !e.diagnostics.is_empty() && e.diagnostics.iter().all(|d| d.span.line >= 1 && d.span.col >= 1),
            size,
            || format!("rejected without a positioned diagnostic:\n{src}"),
        ),
    }
}

fn term_round_trip(rng: &mut CaseRng) -> Result<(), Counterexample> {
    let sig = gen::random_signature(rng, 4).with_identity();
    let vars = gen::variables(rng.random_range(0..=3));
    let depth = rng.random_range(0..=6);
    let t = gen::random_term_with_iota(rng, &sig, &vars, depth);
    let declared: BTreeSet<Variable> = vars.into_iter().collect();
    let printed = dsl::print_term(&t);
    let back = dsl::parse_term(&printed, &sig, &declared);
    ensure(back.as_ref().ok() == Some(&t), size_of(&t), || format!("{printed} reparsed as {back:?}"))
}

/// Per-vertex reference evaluation of a message-passing network.
pub fn simulate_mpnn(spec: &MpnnSpec, x0: &[Value], steps: usize) -> Result<Vec<Value>, String> {
    let k = spec.hidden_dim;
    let n = spec.vertices();
    let c = spec.carrier;
    let mut h: Vec<Vec<Value>> = x0.chunks(k).map(<[Value]>::to_vec).collect();
    let mut outputs = Vec::with_capacity(steps + 1);
    let readout = |h: &[Vec<Value>]| {
        let flat: Vec<Value> = h.iter().flatten().cloned().collect();
        spec.readout.apply(&flat, c).map_err(|e| e.to_string())
    };
    outputs.push(readout(&h)?);
    for _ in 0..steps {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let mut m = vec![Value::Float(0.0); k];
            for &w in &spec.neighbors[v] {
                let mut args = h[v].clone();
                args.extend(h[w].iter().cloned());
                args.extend(spec.label(v, w).iter().map(|x| Value::Float(x.to_f64())));
                for (i, mi) in spec.message.iter().enumerate() {
                    let msg = mi.apply(&args, c).map_err(|e| e.to_string())?;
                    let (Value::Float(a), Value::Float(b)) = (&m[i], &msg) else {
                        return Err("non-scalar message".into());
                    };
                    m[i] = Value::Float(a + b);
                }
            }
            let mut args = h[v].clone();
            args.extend(m);
            let hv = spec
                .update
                .iter()
                .map(|u| u.apply(&args, c).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            next.push(hv);
        }
        h = next;
        outputs.push(readout(&h)?);
    }
    Ok(outputs)
}

fn mpnn_case(rng: &mut CaseRng, _: u64, _: bool) -> Result<(), Counterexample> {
    let (spec, x0) = gen::random_mpnn(rng, 6, 3);
    let size = spec.vertices() * spec.hidden_dim;
    let describe = || format!("{} vertices, hidden {}, neighbors {:?}", spec.vertices(), spec.hidden_dim, spec.neighbors);
    let sys = mpnn_system(&spec).map_err(|e| Counterexample {
        size,
        text: format!("{}: {e}", describe()),
    })?;
    let got = sys.trajectory(&x0, 10).map_err(|e| Counterexample {
        size,
        text: format!("{}: {e}", describe()),
    })?;
    let want = simulate_mpnn(&spec, &x0, 10).map_err(|e| Counterexample {
        size,
        text: format!("{}: {e}", describe()),
    })?;
    let worst = got.outputs.iter().zip(&want).map(|(a, b)| a.distance(b)).fold(0.0, f64::max);
    ensure(worst <= 1e-9, size, || format!("{}: outputs differ by {worst:e}", describe()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(mutant: bool) -> CheckConfig {
        CheckConfig {
            cases: Some(20),
            mutant,
            ..CheckConfig::default()
        }
    }

    #[test]
    fn every_suite_passes_a_few_cases() {
        for report in run_all(&quick(false)) {
            assert!(report.ok(), "{}: {:?}", report.name, report.failure);
        }
    }

    #[test]
    fn mutant_is_caught() {
        let r = run_suite("projection", &quick(true)).unwrap();
        assert!(!r.ok());
        let f = r.failure.unwrap();
        assert!(f.detail.contains("step"), "{}", f.detail);
        let r = run_suite("roundtrip", &quick(true)).unwrap();
        assert!(!r.ok());
    }

    #[test]
    fn parallel_matches_sequential() {
        let seq = run_suite("flatten", &quick(false)).unwrap();
        let par = run_suite("flatten", &CheckConfig { parallel: true, ..quick(false) }).unwrap();
        assert_eq!(seq, par);
        assert!(run_suite("nope", &quick(false)).is_none());
    }

    #[test]
    fn corpus_parses() {
        for src in CORPUS {
            let m = dsl::parse_model(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
            assert_eq!(dsl::parse_model(&dsl::print(&m)).unwrap(), m);
        }
    }
}
