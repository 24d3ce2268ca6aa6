//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use rwd_core::check::{self, CheckConfig};
use rwd_core::correspondence::{embed, project};
use rwd_core::dsl::{self, ModelFile};
use rwd_core::dynamics::{mpnn_system, MpnnSpec};
use rwd_core::eval::{catamorphism, extend_with_identity, SigmaAlgebra, Value};
use rwd_core::gen::{self, ModelParams};
use rwd_core::recurrence::{fit_linear_recurrence, reduce_linear, vandermonde_check, vandermonde_determinant, Reduction};
use rwd_core::rewrite::{flatten, rewrite_at, Identity, RewriteRule};
use rwd_core::term::{Position, Signature, Substitution, Symbol, Term, Variable};

const SEED: u64 = check::DEFAULT_SEED;

type Outcome = Result<String, String>;

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    require(elapsed <= limit, || {
        format!("{what} took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs())
    })
}

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

/// Structural evaluation written out directly: `iota` passes its argument
/// through, every other symbol applies its interpretation. Shared nodes are
/// evaluated once.
fn eval_ground(alg: &SigmaAlgebra, t: &Term) -> Value {
    fn go(alg: &SigmaAlgebra, t: &Term, seen: &mut Vec<(Term, Value)>) -> Value {
        if let Some((_, v)) = seen.iter().find(|(u, _)| u.ptr_eq(t)) {
            return v.clone();
        }
        let args: Vec<Value> = t.args().iter().map(|a| go(alg, a, seen)).collect();
        let head = t.head().expect("ground term");
        let v = if head.is_iota() {
            args.into_iter().next().expect("unary")
        } else {
            alg.interpretation(head)
                .expect("interpreted")
                .apply(&args, alg.carrier())
                .expect("evaluates")
        };
        seen.push((t.clone(), v.clone()));
        v
    }
    go(alg, t, &mut Vec::new())
}

fn c1_equivalence() -> Outcome {
    let start = Instant::now();
    let params = ModelParams::default();
    let (mut non_root, mut max_depth, mut max_leaves) = (0, 0, 0);
    for i in 0..200u64 {
        let mut rng = gen::case_rng(SEED, 101, i);
        let m = gen::random_bounded_model(&mut rng, &params, 15, check::MAX_BITS);
        let l = m.rule().lhs();
        max_depth = max_depth.max(l.depth());
        max_leaves = max_leaves.max(l.leaf_number());
        if !m.rule().position.is_root() {
            non_root += 1;
        }
        let ps = project(&m).map_err(|e| format!("model {i}: {e}"))?;
        let got = ps.outputs(15).map_err(|e| format!("model {i}: {e}"))?;
        let mut t = m.initial().clone();
        for (n, g) in got.iter().enumerate() {
            if n > 0 {
                t = rewrite_at(m.rule(), &t).map_err(|e| format!("model {i}: {e}"))?;
            }
            let want = eval_ground(m.algebra(), &t);
            require(*g == want, || format!("model {i}, n = {n}: projected {g}, model {want}"))?;
        }
    }
    require(max_depth <= 3 && max_leaves <= 5, || "generator exceeded bounds".into())?;
    require(non_root > 0, || "no non-root positions generated".into())?;
    within(start.elapsed(), Duration::from_secs(60), "200 models")?;
    Ok(format!("200 models ({non_root} non-root), n <= 15, exact"))
}

fn rational(n: &rwd_core::number::Number) -> BigRational {
    n.as_rational().clone()
}

fn c2_roundtrip() -> Outcome {
    let start = Instant::now();
    for i in 0..200u64 {
        let mut rng = gen::case_rng(SEED, 102, i);
        let (sys, x0) = gen::random_linear_system(&mut rng, 4);
        let parts = sys.linear().expect("linear system");
        let a: Vec<Vec<BigRational>> = parts.matrix.iter().map(|r| r.iter().map(rational).collect()).collect();
        let b: Vec<BigRational> = parts.functional.iter().map(rational).collect();
        let mut x: Vec<BigRational> = x0
            .iter()
            .map(|v| match v {
                Value::Rational(r) => r.clone(),
                other => panic!("unexpected {other}"),
            })
            .collect();
        let mut want = Vec::new();
        for _ in 0..=30 {
            want.push(Value::Rational(b.iter().zip(&x).map(|(p, q)| p * q).sum()));
            x = a.iter().map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        }
        let m = embed(&sys, &x0).map_err(|e| format!("system {i}: {e}"))?;
        let got = project(&m)
            .and_then(|ps| ps.outputs(30))
            .map_err(|e| format!("system {i}: {e}"))?;
        require(got == want, || format!("system {i} (d = {}): trajectories differ", sys.dim()))?;
    }
    within(start.elapsed(), Duration::from_secs(60), "200 systems")?;
    Ok("200 systems, d <= 4, n <= 30, exact".into())
}

fn c3_fibonacci() -> Outcome {
    let mut want = vec![BigInt::from(1), BigInt::from(1)];
    while want.len() < 10 {
        let next = &want[want.len() - 1] + &want[want.len() - 2];
        want.push(next);
    }
    let want: Vec<Value> = want.into_iter().map(|n| Value::Rational(BigRational::from_integer(n))).collect();

    let src = std::fs::read_to_string(models_dir().join("fibonacci_system.rwm")).map_err(|e| e.to_string())?;
    let ModelFile::System(f) = dsl::parse_model(&src).map_err(|e| e.to_string())? else {
        return Err("expected a system file".into());
    };
    let sys = f.system().map_err(|e| e.to_string())?;
    let m = embed(&sys, &f.initial_state().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut t = m.initial().clone();
    let mut got = Vec::new();
    for n in 0..10 {
        if n > 0 {
            t = rewrite_at(m.rule(), &t).map_err(|e| e.to_string())?;
        }
        got.push(catamorphism(m.algebra(), &t).map_err(|e| e.to_string())?);
    }
    require(got == want, || format!("embedded trace {got:?}"))?;

    let src = std::fs::read_to_string(models_dir().join("fibonacci.rwm")).map_err(|e| e.to_string())?;
    let ModelFile::Rewriting(r) = dsl::parse_model(&src).map_err(|e| e.to_string())? else {
        return Err("expected a rewriting model".into());
    };
    let written = r.model().and_then(|m| m.outputs(9)).map_err(|e| e.to_string())?;
    require(written == want, || format!("fibonacci.rwm trace {written:?}"))?;
    Ok("steps 0-9 = 1,1,2,3,5,8,13,21,34,55".into())
}

fn c4_flatten() -> Outcome {
    for i in 0..1000u64 {
        let mut rng = gen::case_rng(SEED, 104, i);
        let sig = gen::random_signature(&mut rng, 3);
        let alg = extend_with_identity(&gen::random_rational_algebra(&mut rng, &sig, 0.3));
        let depth = rng.random_range(0..=5);
        let t = gen::random_term_with_iota(&mut rng, &sig.clone().with_identity(), &[], depth);
        let flat = flatten(&t);
        let want = eval_ground(&alg, &t);
        let got = catamorphism(&alg, &flat).map_err(|e| format!("pair {i}: {e}"))?;
        require(got == want, || format!("pair {i}: cata({t}) = {want}, cata({flat}) = {got}"))?;
    }
    Ok("1000 term/algebra pairs, exact".into())
}

fn sym(name: &str, arity: usize) -> Symbol {
    Symbol::new(name, arity).expect("valid")
}

fn var(name: &str) -> Term {
    Term::var(Variable::new(name).expect("valid"))
}

fn ground_sub(rng: &mut impl Rng, sig: &Signature, vars: BTreeSet<Variable>) -> Substitution {
    vars.into_iter()
        .map(|v| (v, gen::random_ground_term(rng, sig, 2)))
        .collect()
}

/// A ground context and a position inside it (possibly the root).
fn context(rng: &mut impl Rng, sig: &Signature) -> (Term, Position) {
    let c = gen::random_ground_term(rng, sig, 2);
    let ps: Vec<Position> = c.positions();
    let p = ps[rng.random_range(0..ps.len())].clone();
    (c, p)
}

/// A non-variable left-hand side containing at least one variable.
fn lhs(rng: &mut impl Rng, sig: &Signature, vars: &[Variable]) -> Term {
    loop {
        let l = gen::random_term(rng, sig, vars, 3, 0.7);
        if !l.is_var() && !l.is_ground() {
            return l;
        }
    }
}

fn c5_rewriting_laws() -> Outcome {
    // Surjectivity: t' = C[σ'(r)]_p has the preimage C[σ(l)]_p.
    for i in 0..10_000u64 {
        let mut rng = gen::case_rng(SEED, 105, i);
        let sig = gen::random_signature(&mut rng, 3);
        let vars = gen::variables(rng.random_range(1..=3));
        let l = lhs(&mut rng, &sig, &vars);
        let lv: Vec<Variable> = l.vars().into_iter().collect();
        let r = if lv.is_empty() { l.clone() } else { gen::random_term(&mut rng, &sig, &lv, 2, 0.7) };
        let (c, p) = context(&mut rng, &sig);
        let rule = RewriteRule::new(Identity::new(l.clone(), r.clone()).map_err(|e| e.to_string())?, p.clone());
        let s_r = ground_sub(&mut rng, &sig, r.vars());
        let target = c.replace_at(&p, s_r.apply(&r)).map_err(|e| e.to_string())?;
        let mut s = s_r.clone();
        for v in l.vars() {
            if s.get(&v).is_none() {
                s.insert(v, gen::random_ground_term(&mut rng, &sig, 2));
            }
        }
        let pre = c.replace_at(&p, s.apply(&l)).map_err(|e| e.to_string())?;
        let img = rewrite_at(&rule, &pre).map_err(|e| format!("instance {i}: {e}"))?;
        require(img == target, || format!("instance {i}: {l} => {r} @ {p} sends {pre} to {img}, not {target}"))?;
    }
    // Injectivity when vars(r) = vars(l).
    let mut distinct = 0;
    for i in 0..10_000u64 {
        let mut rng = gen::case_rng(SEED, 205, i);
        let sig = gen::random_signature(&mut rng, 3);
        let vars = gen::variables(rng.random_range(1..=3));
        let l = lhs(&mut rng, &sig, &vars);
        let lv: Vec<Variable> = l.vars().into_iter().collect();
        let r = (0..50)
            .map(|_| gen::random_term(&mut rng, &sig, &lv, 3, 0.8))
            .find(|r| r.vars() == l.vars())
            .unwrap_or_else(|| l.clone());
        let (c, p) = context(&mut rng, &sig);
        let rule = RewriteRule::new(Identity::new(l.clone(), r.clone()).map_err(|e| e.to_string())?, p.clone());
        let s1 = ground_sub(&mut rng, &sig, l.vars());
        let mut s2 = s1.clone();
        if !lv.is_empty() {
            let v = lv[rng.random_range(0..lv.len())].clone();
            let old = s1.get(&v).cloned();
            if let Some(u) = (0..20).map(|_| gen::random_ground_term(&mut rng, &sig, 3)).find(|u| Some(u) != old.as_ref()) {
                s2.insert(v, u);
            }
        }
        let t1 = c.replace_at(&p, s1.apply(&l)).map_err(|e| e.to_string())?;
        let t2 = c.replace_at(&p, s2.apply(&l)).map_err(|e| e.to_string())?;
        if t1 == t2 {
            continue;
        }
        distinct += 1;
        let (i1, i2) = (rewrite_at(&rule, &t1), rewrite_at(&rule, &t2));
        require(i1.is_ok() && i1 != i2, || format!("pair {i}: {l} => {r} @ {p} merges {t1} and {t2}"))?;
    }
    require(distinct >= 9_000, || format!("only {distinct} distinct pairs"))?;
    // l = f(x,y), r = g(x) is not injective.
    let rule = RewriteRule::new(
        Identity::new(
            Term::apply(sym("f", 2), vec![var("x"), var("y")]).unwrap(),
            Term::apply(sym("g", 1), vec![var("x")]).unwrap(),
        )
        .map_err(|e| e.to_string())?,
        Position::root(),
    );
    let (fxy, fxx) = (
        Term::apply(sym("f", 2), vec![var("x"), var("y")]).unwrap(),
        Term::apply(sym("f", 2), vec![var("x"), var("x")]).unwrap(),
    );
    let (a, b) = (rewrite_at(&rule, &fxy).map_err(|e| e.to_string())?, rewrite_at(&rule, &fxx).map_err(|e| e.to_string())?);
    require(a == b && a.to_string() == "g(x)", || format!("collision: {a} vs {b}"))?;
    Ok(format!("10000 preimages, {distinct} injective pairs, R(f(x,y)) = R(f(x,x)) = g(x)"))
}

fn outputs(a: &[Vec<f64>], b: &[f64], x0: &[f64], n: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    (0..=n)
        .map(|_| {
            let s = b.iter().zip(&x).map(|(p, q)| p * q).sum();
            x = a.iter().map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
            s
        })
        .collect()
}

fn c6_reduction() -> Outcome {
    let fib = reduce_linear(&[vec![1.0, 1.0], vec![1.0, 0.0]], &[1.0, 0.0]);
    let c = fib.recurrence().ok_or("Fibonacci not reducible")?.coefficients.clone();
    require(c.len() == 2 && c.iter().all(|x| (x - 1.0).abs() <= 1e-9), || format!("Fibonacci coefficients {c:?}"))?;

    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let mut rng = gen::case_rng(SEED, 106, i);
        let s = gen::well_conditioned_system(&mut rng, 4);
        let d = s.eigenvalues.len();
        let rec = reduce_linear(&s.matrix, &s.functional)
            .recurrence()
            .cloned()
            .ok_or_else(|| format!("system {i} reported non-reducible"))?;
        let truth = outputs(&s.matrix, &s.functional, &s.x0, 50);
        // s_k = Σ c_j s_{k−j}, unrolled by hand.
        let mut seq = truth[..d].to_vec();
        while seq.len() < truth.len() {
            let k = seq.len();
            seq.push((1..=d).map(|j| rec.coefficients[j - 1] * seq[k - j]).sum());
        }
        let scale = truth.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = truth.iter().zip(&seq).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        worst = worst.max(err);
        require(err <= 1e-6, || format!("system {i}: relative error {err:e}"))?;
    }
    for i in 0..50u64 {
        let mut rng = gen::case_rng(SEED, 206, i);
        for (kind, s) in [
            ("repeated eigenvalue", gen::repeated_eigenvalue_system(&mut rng, 4)),
            ("blind functional", gen::blind_functional_system(&mut rng, 4)),
        ] {
            require(matches!(reduce_linear(&s.matrix, &s.functional), Reduction::NotReducible { .. }), || {
                format!("{kind} case {i} reported reducible")
            })?;
        }
    }
    Ok(format!("Fibonacci -> (1,1); 200 systems, worst relative error {worst:.1e}; 100 degenerate cases rejected"))
}

/// Determinant by cofactor expansion over ℚ.
fn det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    if n == 0 {
        return BigRational::one();
    }
    let mut total = BigRational::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigRational>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * det(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn c7_vandermonde() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..1000u64 {
        let mut rng = gen::case_rng(SEED, 107, i);
        let (b, l) = gen::vandermonde_case(&mut rng, 6);
        let q = |x: f64| BigRational::from_float(x).expect("finite");
        let rows: Vec<Vec<BigRational>> = (0..l.len() as u32)
            .map(|k| b.iter().zip(&l).map(|(&bj, &lj)| q(bj) * num_traits::pow(q(lj), k as usize)).collect())
            .collect();
        let direct = det(&rows);
        let product = vandermonde_check(&b, &l);
        let library = vandermonde_determinant(&b, &l).ok_or("no determinant")?;
        let rel = |x: f64| {
            if direct.is_zero() {
                return if x == 0.0 { 0.0 } else { f64::INFINITY };
            }
            let diff = (q(x) - &direct).abs();
            (diff / direct.abs()).to_f64().unwrap_or(f64::INFINITY)
        };
        let (e1, e2) = (rel(product), rel(library));
        worst = worst.max(e1).max(e2);
        require(e1 <= 1e-9 && e2 <= 1e-9, || format!("case {i}: b = {b:?}, eigenvalues = {l:?}: errors {e1:e}, {e2:e}"))?;
    }
    Ok(format!("1000 cases, d <= 6, worst relative error {worst:.1e}"))
}

struct Mixture {
    components: Vec<(f64, f64, f64)>,
    samples: usize,
    fit_max: f64,
    predict_max: f64,
    underfit_min: f64,
}

fn mixtures() -> Result<Vec<Mixture>, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sinusoids.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s}: {e}"));
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(format!("bad fixture line `{line}`"));
        }
        let components = cols[0]
            .split(';')
            .map(|c| {
                let v: Vec<f64> = c.split_whitespace().map(num).collect::<Result<_, _>>()?;
                match v[..] {
                    [w, a, p] => Ok((w, a, p)),
                    _ => Err(format!("bad component `{c}`")),
                }
            })
            .collect::<Result<Vec<_>, String>>()?;
        out.push(Mixture {
            components,
            samples: num(cols[1])? as usize,
            fit_max: num(cols[2])?,
            predict_max: num(cols[3])?,
            underfit_min: num(cols[4])?,
        });
    }
    Ok(out)
}

fn c8_sinusoids() -> Outcome {
    let ms = mixtures()?;
    let mut seen = BTreeSet::new();
    for (i, m) in ms.iter().enumerate() {
        let closed = |n: usize| -> f64 { m.components.iter().map(|&(w, a, p)| a * (w * n as f64 + p).cos()).sum() };
        let seq: Vec<f64> = (0..m.samples).map(closed).collect();
        let depth = 2 * m.components.len();
        seen.insert(m.components.len());
        let fit = fit_linear_recurrence(&seq, depth, false).map_err(|e| e.to_string())?;
        require(fit.residual <= m.fit_max, || format!("mixture {i}: depth {depth} residual {:e}", fit.residual))?;
        let ahead = fit.recurrence.extend(&seq, 20);
        let err = (m.samples..m.samples + 20)
            .map(|n| (ahead[n] - closed(n)).abs())
            .fold(0.0, f64::max);
        require(err <= m.predict_max, || format!("mixture {i}: prediction error {err:e}"))?;
        let under = fit_linear_recurrence(&seq, depth - 1, false).map_err(|e| e.to_string())?;
        require(under.residual > m.underfit_min, || {
            format!("mixture {i}: depth {} residual only {:e}", depth - 1, under.residual)
        })?;
    }
    require(seen.contains(&1) && seen.contains(&2), || "fixtures must cover m = 1 and m = 2".into())?;
    Ok(format!("{} mixtures (m = 1, 2): fits, 20-step predictions and underfit controls", ms.len()))
}

/// Per-vertex message passing computed directly from the network description.
fn simulate(spec: &MpnnSpec, x0: &[Value], steps: usize) -> Vec<f64> {
    let k = spec.hidden_dim;
    let f = |v: &Value| v.as_f64().expect("float");
    let mut h: Vec<Vec<f64>> = x0.chunks(k).map(|c| c.iter().map(f).collect()).collect();
    let eval = |e: &rwd_core::eval::Expr, args: Vec<f64>| {
        let args: Vec<Value> = args.into_iter().map(Value::Float).collect();
        f(&e.apply(&args, spec.carrier).expect("evaluates"))
    };
    let read = |h: &[Vec<f64>]| eval(&spec.readout, h.concat());
    let mut out = vec![read(&h)];
    for _ in 0..steps {
        let next: Vec<Vec<f64>> = (0..h.len())
            .map(|v| {
                let mut m = vec![0.0; k];
                for &w in &spec.neighbors[v] {
                    let label: Vec<f64> = spec.label(v, w).iter().map(|x| x.to_f64()).collect();
                    let args = [h[v].clone(), h[w].clone(), label].concat();
                    for (i, mi) in spec.message.iter().enumerate() {
                        m[i] += eval(mi, args.clone());
                    }
                }
                let args = [h[v].clone(), m].concat();
                spec.update.iter().map(|u| eval(u, args.clone())).collect()
            })
            .collect();
        h = next;
        out.push(read(&h));
    }
    out
}

fn c9_mpnn() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let mut rng = gen::case_rng(SEED, 109, i);
        let (spec, x0) = gen::random_mpnn(&mut rng, 6, 3);
        let sys = mpnn_system(&spec).map_err(|e| format!("graph {i}: {e}"))?;
        let got = sys.trajectory(&x0, 10).map_err(|e| format!("graph {i}: {e}"))?.outputs;
        let want = simulate(&spec, &x0, 10);
        for (n, (g, w)) in got.iter().zip(&want).enumerate() {
            let err = (g.as_f64().unwrap_or(f64::NAN) - w).abs();
            worst = worst.max(err);
            require(err <= 1e-9, || format!("graph {i}, step {n}: {g} vs {w}"))?;
        }
    }
    Ok(format!("50 graphs, 10 steps, worst difference {worst:.1e}"))
}

fn c10_dsl() -> Outcome {
    for i in 0..10_000u64 {
        let mut rng = gen::case_rng(SEED, 110, i);
        let sig = gen::random_signature(&mut rng, 4).with_identity();
        let vars = gen::variables(rng.random_range(0..=3));
        let depth = rng.random_range(0..=6);
        let t = gen::random_term_with_iota(&mut rng, &sig, &vars, depth);
        let printed = dsl::print_term(&t);
        let back = dsl::parse_term(&printed, &sig, &vars.iter().cloned().collect());
        require(back.as_ref() == Ok(&t), || format!("term {i}: {printed} -> {back:?}"))?;
    }
    let mut corpus = Vec::new();
    for entry in std::fs::read_dir(models_dir()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "rwm") {
            corpus.push(std::fs::read_to_string(&path).map_err(|e| e.to_string())?);
        }
    }
    corpus.sort();
    require(corpus.len() >= 4, || "model corpus is missing".into())?;
    let mut rejected = 0;
    for i in 0..1000u64 {
        let mut rng = gen::case_rng(SEED, 210, i);
        let base = &corpus[rng.random_range(0..corpus.len())];
        let src = gen::mutate_source(&mut rng, base);
        let parsed = catch_unwind(AssertUnwindSafe(|| dsl::parse_model(&src)))
            .map_err(|_| format!("parser panicked on mutant {i}:\n{src}"))?;
        if let Err(e) = parsed {
            rejected += 1;
            require(!e.diagnostics.is_empty() && e.diagnostics.iter().all(|d| d.span.line >= 1), || {
                format!("mutant {i} rejected without a positioned diagnostic")
            })?;
        }
    }
    Ok(format!("10000 terms round-trip; 1000 mutated files, {rejected} rejected with diagnostics, no crashes"))
}

fn c11_check_suite() -> Outcome {
    let start = Instant::now();
    let reports = check::run_all(&CheckConfig::default());
    let elapsed = start.elapsed();
    for r in &reports {
        require(r.ok(), || format!("suite {} failed: {:?}", r.name, r.failure))?;
    }
    within(elapsed, Duration::from_secs(300), "check suite")?;
    let total: usize = reports.iter().map(|r| r.cases).sum();
    Ok(format!("{} suites, {total} cases, seed {SEED}", reports.len()))
}

fn main() -> ExitCode {
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("projection equivalence", c1_equivalence),
        ("embed/project round trip", c2_roundtrip),
        ("Fibonacci end to end", c3_fibonacci),
        ("flatten preserves evaluation", c4_flatten),
        ("rewriting function laws", c5_rewriting_laws),
        ("linear reduction", c6_reduction),
        ("Vandermonde identity", c7_vandermonde),
        ("sinusoid fitting", c8_sinusoids),
        ("MPNN consistency", c9_mpnn),
        ("DSL round trip and fuzzing", c10_dsl),
        ("full check suite", c11_check_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
