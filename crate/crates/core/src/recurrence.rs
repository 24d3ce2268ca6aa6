//! Recurrence relations, delay embeddings, reduction of linear systems to
//! linear recurrences, and least-squares recurrence fitting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::dynamics::{from_recurrence, trajectory, CartesianDynamicalSystem, DynamicsError, StateVector};
use crate::eval::{CarrierKind, EvalError, Expr, Value};
use crate::linalg;
use crate::number::Number;

/// φ is treated as singular when σ_min < SINGULAR_CUTOFF · σ_max.
pub const SINGULAR_CUTOFF: f64 = 1e-10;

/// Relative cutoff below which singular values of a design matrix are
/// treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecurrenceError {
    #[error("a recurrence needs at least one initial value")]
    EmptyInits,
    #[error("sequence has {found} value(s), at least {needed} are needed")]
    TooShort { needed: usize, found: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("polynomial must have degree at least 1")]
    ConstantPolynomial,
    #[error("no recurrence of this form exists for the polynomial")]
    Unsolvable,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `s_n = step(s_{n−1}, ..., s_{n−d})` with initial values `s₀..s_{d−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceRelation {
    pub carrier: CarrierKind,
    pub step: Expr,
    pub inits: Vec<Value>,
}

impl RecurrenceRelation {
    pub fn new(carrier: CarrierKind, step: Expr, inits: Vec<Value>) -> Result<Self, RecurrenceError> {
        if inits.is_empty() {
            return Err(RecurrenceError::EmptyInits);
        }
        Ok(RecurrenceRelation { carrier, step, inits })
    }

    pub fn depth(&self) -> usize {
        self.inits.len()
    }

    /// `s₀, ..., s_n`.
    pub fn unroll(&self, n: usize) -> Result<Vec<Value>, RecurrenceError> {
        let d = self.depth();
        let mut seq: Vec<Value> = self.inits.iter().take(n + 1).cloned().collect();
        let mut window: Vec<Value> = Vec::with_capacity(d);
        while seq.len() <= n {
            window.clear();
            window.extend(seq.iter().rev().take(d).cloned());
            let next = self.step.apply(&window, self.carrier)?;
            seq.push(next);
        }
        Ok(seq)
    }

    /// The shift system; its trajectory starts at `s_{d−1}`.
    pub fn to_system(&self) -> Result<(CartesianDynamicalSystem, StateVector), RecurrenceError> {
        Ok(from_recurrence(self.carrier, self.step.clone(), self.inits.clone())?)
    }
}

/// `s_k = c₀ + c₁ s_{k−1} + ... + c_d s_{k−d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRecurrence {
    pub coefficients: Vec<f64>,
    pub constant: Option<f64>,
}

impl LinearRecurrence {
    pub fn depth(&self) -> usize {
        self.coefficients.len()
    }

    /// Next value from the history `s_{k−1}, s_{k−2}, ...` (most recent first).
    pub fn next(&self, recent_first: &[f64]) -> f64 {
        self.constant.unwrap_or(0.0) + linalg::dot(&self.coefficients, recent_first)
    }

    /// Extends `seq` by `steps` values.
    pub fn extend(&self, seq: &[f64], steps: usize) -> Vec<f64> {
        let d = self.depth();
        let mut out = seq.to_vec();
        let mut window = Vec::with_capacity(d);
        for _ in 0..steps {
            window.clear();
            window.extend(out.iter().rev().take(d));
            out.push(self.next(&window));
        }
        out
    }

    /// `s₀..s_n` from the initial values `s₀..s_{d−1}`.
    pub fn unroll(&self, inits: &[f64], n: usize) -> Vec<f64> {
        let mut out = self.extend(inits, (n + 1).saturating_sub(inits.len()));
        out.truncate(n + 1);
        out
    }

    pub fn to_expr(&self) -> Option<Expr> {
        let num = |x: f64| Number::from_f64(x);
        Some(Expr::linear(
            self.coefficients.iter().map(|&c| num(c)).collect::<Option<_>>()?,
            num(self.constant.unwrap_or(0.0))?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayEmbedding<T> {
    pub depth: usize,
    /// `(s_n, s_{n−1}, ..., s_{n−d})` for `n = d, d+1, ...`.
    pub windows: Vec<Vec<T>>,
}

pub fn delay_embedding<T: Clone>(seq: &[T], d: usize) -> Result<DelayEmbedding<T>, RecurrenceError> {
    if seq.len() <= d {
        return Err(RecurrenceError::TooShort {
            needed: d + 1,
            found: seq.len(),
        });
    }
    let windows = (d..seq.len())
        .map(|n| (0..=d).map(|k| seq[n - k].clone()).collect())
        .collect();
    Ok(DelayEmbedding { depth: d, windows })
}

/// φ(x) = (f(x), f(G x), ..., f(G^{d−1} x)).
pub fn phi_map(sys: &CartesianDynamicalSystem, x: &[Value]) -> Result<Vec<Value>, DynamicsError> {
    Ok(trajectory(sys, x, sys.dim().saturating_sub(1))?.outputs)
}

/// Rows `b·Aᵏ` for `k = 0..d−1`.
pub fn phi_matrix(a: &[Vec<f64>], b: &[f64]) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(a.len());
    let mut row = b.to_vec();
    for _ in 0..a.len() {
        let next = linalg::vec_mat(&row, a);
        rows.push(std::mem::replace(&mut row, next));
    }
    rows
}

fn vec_mat_exact(x: &[BigRational], a: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = a.first().map_or(0, Vec::len);
    (0..n)
        .map(|j| {
            x.iter()
                .zip(a)
                .fold(BigRational::zero(), |acc, (xi, row)| acc + xi * &row[j])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    Reducible {
        recurrence: LinearRecurrence,
        /// ‖φᵀw − (bA^d)ᵀ‖∞ of the solve.
        residual: f64,
        condition: f64,
    },
    NotReducible {
        reason: String,
        condition: f64,
    },
}

impl Reduction {
    pub fn recurrence(&self) -> Option<&LinearRecurrence> {
        match self {
            Reduction::Reducible { recurrence, .. } => Some(recurrence),
            Reduction::NotReducible { .. } => None,
        }
    }
}

/// Reduces `x ↦ Ax` observed by `b` to `s_k = c₁ s_{k−1} + ... + c_d s_{k−d}`
/// when φ is invertible.
pub fn reduce_linear(a: &[Vec<f64>], b: &[f64]) -> Reduction {
    let d = a.len();
    if d == 0 || b.len() != d || a.iter().any(|r| r.len() != d) {
        return Reduction::NotReducible {
            reason: "matrix must be square and match the functional".into(),
            condition: f64::INFINITY,
        };
    }
    let phi = phi_matrix(a, b);
    let condition = linalg::condition_number(&phi);
    if linalg::is_numerically_singular(&phi, SINGULAR_CUTOFF) {
        return Reduction::NotReducible {
            reason: format!(
                "observation matrix is singular (smallest singular value below {SINGULAR_CUTOFF:e} of the largest)"
            ),
            condition,
        };
    }
    let target = linalg::vec_mat(&phi[d - 1], a);
    let phi_t: Vec<Vec<f64>> = (0..d).map(|j| phi.iter().map(|r| r[j]).collect()).collect();
    let Some(w) = linalg::solve(&phi_t, &target) else {
        return Reduction::NotReducible {
            reason: "observation matrix could not be inverted".into(),
            condition,
        };
    };
    let residual = linalg::mat_vec(&phi_t, &w)
        .iter()
        .zip(&target)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Reduction::Reducible {
        recurrence: LinearRecurrence {
            coefficients: w.iter().rev().copied().collect(),
            constant: None,
        },
        residual,
        condition,
    }
}

/// Exact reduction over ℚ; `None` iff φ is singular.
pub fn reduce_linear_exact(a: &[Vec<Number>], b: &[Number]) -> Option<Vec<Number>> {
    let d = a.len();
    if d == 0 || b.len() != d || a.iter().any(|r| r.len() != d) {
        return None;
    }
    let a: Vec<Vec<BigRational>> = a
        .iter()
        .map(|r| r.iter().map(|x| x.as_rational().clone()).collect())
        .collect();
    let mut phi = Vec::with_capacity(d);
    let mut row: Vec<BigRational> = b.iter().map(|x| x.as_rational().clone()).collect();
    for _ in 0..d {
        let next = vec_mat_exact(&row, &a);
        phi.push(std::mem::replace(&mut row, next));
    }
    let phi_t: Vec<Vec<BigRational>> = (0..d).map(|j| phi.iter().map(|r| r[j].clone()).collect()).collect();
    let w = linalg::solve_exact(&phi_t, &row)?;
    Some(w.into_iter().rev().map(Number::new).collect())
}

/// (∏ b_j)(∏_{i<j} (λ_j − λ_i)), the determinant of the matrix with rows
/// `(b_j λ_jᵏ)_j`.
pub fn vandermonde_check(b_eigen: &[f64], eigenvalues: &[f64]) -> f64 {
    let mut p: f64 = b_eigen.iter().product();
    for j in 0..eigenvalues.len() {
        for i in 0..j {
            p *= eigenvalues[j] - eigenvalues[i];
        }
    }
    p
}

/// The matrix with rows `(b_j λ_jᵏ)_j`, `k = 0..d−1`, computed exactly from
/// the float inputs.
pub fn vandermonde_matrix_exact(b_eigen: &[f64], eigenvalues: &[f64]) -> Option<Vec<Vec<BigRational>>> {
    let b: Vec<BigRational> = b_eigen.iter().map(|&x| BigRational::from_float(x)).collect::<Option<_>>()?;
    let l: Vec<BigRational> = eigenvalues.iter().map(|&x| BigRational::from_float(x)).collect::<Option<_>>()?;
    let d = l.len();
    let mut rows = Vec::with_capacity(d);
    let mut row = b;
    for _ in 0..d {
        let next = row.iter().zip(&l).map(|(x, lam)| x * lam).collect();
        rows.push(std::mem::replace(&mut row, next));
    }
    Some(rows)
}

/// Direct determinant of [`vandermonde_matrix_exact`], rounded once.
pub fn vandermonde_determinant(b_eigen: &[f64], eigenvalues: &[f64]) -> Option<f64> {
    let m = vandermonde_matrix_exact(b_eigen, eigenvalues)?;
    linalg::det_exact(&m).to_f64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub recurrence: LinearRecurrence,
    /// Largest absolute residual over the fitting windows.
    pub residual: f64,
    pub rank_deficient: bool,
    pub condition: f64,
}

/// Least-squares fit of a depth-`d` linear recurrence over the delay
/// embedding, optionally with a constant term.
pub fn fit_linear_recurrence(seq: &[f64], d: usize, constant: bool) -> Result<Fit, RecurrenceError> {
    if d == 0 {
        return Err(RecurrenceError::ZeroDepth);
    }
    let needed = 2 * d + 1;
    if seq.len() < needed {
        return Err(RecurrenceError::TooShort {
            needed,
            found: seq.len(),
        });
    }
    let emb = delay_embedding(seq, d)?;
    let (rows, targets): (Vec<Vec<f64>>, Vec<f64>) = emb
        .windows
        .iter()
        .map(|w| {
            let mut row = w[1..].to_vec();
            if constant {
                row.push(1.0);
            }
            (row, w[0])
        })
        .unzip();
    let ls = linalg::least_squares(&rows, &targets, RANK_CUTOFF).ok_or(RecurrenceError::Unsolvable)?;
    let cols = d + usize::from(constant);
    let mut coefficients = ls.solution;
    let c0 = if constant { coefficients.pop() } else { None };
    let recurrence = LinearRecurrence {
        coefficients,
        constant: c0,
    };
    let residual = rows
        .iter()
        .zip(&targets)
        .map(|(row, y)| (linalg::dot(row, &recurrence.coefficients) + c0.unwrap_or(0.0) - y).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        recurrence,
        residual,
        rank_deficient: ls.rank < cols,
        condition: ls.condition,
    })
}

fn eval_poly(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// For `p(n) = Σ aⱼ nʲ` of degree `k ≥ 1`, the depth-`k` recurrence
/// `s_n = p(b₀ + b₁ s_{n−1} + ... + b_k s_{n−k})` with `s_n = p(n)`,
/// over the rational carrier, seeded with `p(0), ..., p(k−1)`.
pub fn polynomial_recurrence(coeffs: &[Number]) -> Result<RecurrenceRelation, RecurrenceError> {
    let mut a: Vec<BigRational> = coeffs.iter().map(|c| c.as_rational().clone()).collect();
    while a.last().is_some_and(Zero::is_zero) {
        a.pop();
    }
    if a.len() < 2 {
        return Err(RecurrenceError::ConstantPolynomial);
    }
    let k = a.len() - 1;
    let q = |n: i64| BigRational::from_integer(BigInt::from(n));
    // b₀ + Σ bᵢ p(n − i) = n for n = k..2k.
    let (rows, rhs): (Vec<Vec<BigRational>>, Vec<BigRational>) = (k..=2 * k)
        .map(|n| {
            let mut row = vec![q(1)];
            row.extend((1..=k).map(|i| eval_poly(&a, &q((n - i) as i64))));
            (row, q(n as i64))
        })
        .unzip();
    let b = linalg::solve_exact(&rows, &rhs).ok_or(RecurrenceError::Unsolvable)?;
    let inner = Expr::linear(b[1..].iter().cloned().map(Number::new).collect(), Number::new(b[0].clone()));
    let p = Expr::Add(
        a.iter()
            .enumerate()
            .map(|(j, c)| {
                let mut factors = vec![Expr::Num(Number::new(c.clone()))];
                factors.extend(std::iter::repeat_n(Expr::Proj(1), j));
                Expr::Mul(factors)
            })
            .collect(),
    );
    let inits = (0..k as i64).map(|n| Value::Rational(eval_poly(&a, &q(n)))).collect();
    RecurrenceRelation::new(CarrierKind::Rational, Expr::compose(p, vec![inner]), inits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<Value> {
        v.iter().map(|&i| Value::rational(i)).collect()
    }

    fn fib() -> RecurrenceRelation {
        RecurrenceRelation::new(
            CarrierKind::Rational,
            Expr::add(Expr::proj(1), Expr::proj(2)),
            ints(&[1, 1]),
        )
        .unwrap()
    }

    #[test]
    fn unroll_fibonacci() {
        assert_eq!(fib().unroll(6).unwrap(), ints(&[1, 1, 2, 3, 5, 8, 13]));
        assert_eq!(fib().unroll(0).unwrap(), ints(&[1]));
        let id = RecurrenceRelation::new(CarrierKind::Rational, Expr::proj(1), ints(&[4])).unwrap();
        assert_eq!(id.unroll(3).unwrap(), ints(&[4; 4]));
        assert_eq!(
            RecurrenceRelation::new(CarrierKind::Rational, Expr::proj(1), vec![]),
            Err(RecurrenceError::EmptyInits)
        );
    }

    #[test]
    fn shift_system_is_offset_by_depth() {
        let rr = fib();
        let (sys, y0) = rr.to_system().unwrap();
        let tr = trajectory(&sys, &y0, 5).unwrap().outputs;
        assert_eq!(&rr.unroll(6).unwrap()[1..], &tr[..]);
    }

    #[test]
    fn polynomial_example() {
        let rr = polynomial_recurrence(&[Number::zero(), Number::zero(), Number::one()]).unwrap();
        assert_eq!(rr.depth(), 2);
        assert_eq!(rr.unroll(6).unwrap(), ints(&[0, 1, 4, 9, 16, 25, 36]));
        let cubic = [2, -1, 0, 3].map(Number::from_int);
        let rr = polynomial_recurrence(&cubic).unwrap();
        let seq = rr.unroll(10).unwrap();
        for (n, v) in seq.iter().enumerate() {
            let n = n as i64;
            assert_eq!(*v, Value::rational(2 - n + 3 * n * n * n));
        }
        assert!(polynomial_recurrence(&[Number::one()]).is_err());
    }

    #[test]
    fn delay_windows() {
        let e = delay_embedding(&[1, 1, 2, 3, 5], 2).unwrap();
        assert_eq!(e.windows, vec![vec![2, 1, 1], vec![3, 2, 1], vec![5, 3, 2]]);
        assert_eq!(delay_embedding(&[7, 8], 0).unwrap().windows, vec![vec![7], vec![8]]);
        assert_eq!(delay_embedding(&[1, 2, 3], 2).unwrap().windows.len(), 1);
        assert!(delay_embedding(&[1, 2], 2).is_err());
    }

    #[test]
    fn phi_of_fibonacci_companion() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(phi_matrix(&a, &[1.0, 0.0]), vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(phi_matrix(&[vec![3.0]], &[2.0]), vec![vec![2.0]]);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(phi_matrix(&id, &[1.0, 2.0]), vec![vec![1.0, 2.0]; 2]);
    }

    #[test]
    fn reduce_fibonacci_and_identity() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        let r = reduce_linear(&a, &[1.0, 0.0]);
        let c = &r.recurrence().unwrap().coefficients;
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(reduce_linear(&id, &[1.0, 0.0]), Reduction::NotReducible { .. }));

        let exact = reduce_linear_exact(
            &[vec![Number::one(), Number::one()], vec![Number::one(), Number::zero()]],
            &[Number::one(), Number::zero()],
        )
        .unwrap();
        assert_eq!(exact, vec![Number::one(), Number::one()]);
    }

    #[test]
    fn vandermonde_small() {
        assert_eq!(vandermonde_check(&[1.0, 2.0], &[3.0, 5.0]), 4.0);
        assert_eq!(vandermonde_determinant(&[1.0, 2.0], &[3.0, 5.0]), Some(4.0));
        assert_eq!(vandermonde_check(&[1.0, 0.0, 2.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(vandermonde_check(&[1.0, 1.0], &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn fits() {
        let fib: Vec<f64> = LinearRecurrence {
            coefficients: vec![1.0, 1.0],
            constant: None,
        }
        .unroll(&[1.0, 1.0], 20);
        let f = fit_linear_recurrence(&fib, 2, false).unwrap();
        assert!(f.residual <= 1e-9);
        assert!((f.recurrence.coefficients[0] - 1.0).abs() < 1e-9);

        let constant = vec![3.5; 10];
        let f = fit_linear_recurrence(&constant, 1, false).unwrap();
        assert!((f.recurrence.coefficients[0] - 1.0).abs() < 1e-12 && f.residual < 1e-12);

        assert!(matches!(
            fit_linear_recurrence(&[1.0, 2.0, 3.0, 4.0], 2, false),
            Err(RecurrenceError::TooShort { needed: 5, found: 4 })
        ));

        let squares: Vec<f64> = (0..12).map(|n| (n * n) as f64).collect();
        let f = fit_linear_recurrence(&squares, 2, true).unwrap();
        assert!(f.residual < 1e-9, "{f:?}");
    }
}
