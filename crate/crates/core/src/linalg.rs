//! Small dense linear algebra: float kernels on top of nalgebra and exact
//! rational elimination.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let x = to_dmatrix(a).lu().solve(&DVector::from_column_slice(b))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Singular values in decreasing order.
pub fn singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let m = to_dmatrix(a);
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// σ_max / σ_min, infinite for singular or empty input.
pub fn condition_number(a: &[Vec<f64>]) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Whether σ_min < `rel` · σ_max.
pub fn is_numerically_singular(a: &[Vec<f64>], rel: f64) -> bool {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => !(hi > 0.0) || lo < rel * hi,
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    pub rank: usize,
    pub condition: f64,
}

/// Minimum-norm least-squares solution of `A x ≈ y` through the SVD, with
/// singular values below `rel · σ_max` treated as zero.
pub fn least_squares(a: &[Vec<f64>], y: &[f64], rel: f64) -> Option<LeastSquares> {
    let m = to_dmatrix(a);
    if m.is_empty() || m.nrows() != y.len() {
        return None;
    }
    let svd = m.svd(true, true);
    let hi = svd.singular_values.max();
    let lo = svd.singular_values.min();
    let eps = rel * hi;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = svd.solve(&DVector::from_column_slice(y), eps).ok()?;
    Some(LeastSquares {
        solution: x.iter().copied().collect(),
        rank,
        condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
    })
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row vector times matrix.
pub fn vec_mat(x: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.first().map_or(0, Vec::len);
    (0..n).map(|j| x.iter().zip(a).map(|(xi, row)| xi * row[j]).sum()).collect()
}

/// Determinant by Gaussian elimination over ℚ.
pub fn det_exact(a: &[Vec<BigRational>]) -> BigRational {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Solves a square system exactly; `None` when singular.
pub fn solve_exact(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(p, col);
        let pivot = m[col][col].clone();
        for c in col..=n {
            m[col][c] = &m[col][c] / &pivot;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in col..=n {
                let delta = &f * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().expect("augmented")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn float_kernels() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]).is_none());
        assert!(is_numerically_singular(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1e-10));
        assert!(!is_numerically_singular(&a, 1e-10));
        assert!((condition_number(&[vec![4.0, 0.0], vec![0.0, 0.5]]) - 8.0).abs() < 1e-12);
        assert_eq!(vec_mat(&[1.0, 0.0], &[vec![1.0, 1.0], vec![1.0, 0.0]]), vec![1.0, 1.0]);
    }

    #[test]
    fn overdetermined_least_squares() {
        // y = 2x + 1 sampled exactly.
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64 + 1.0).collect();
        let ls = least_squares(&rows, &y, 1e-12).unwrap();
        assert_eq!(ls.rank, 2);
        assert!((ls.solution[0] - 2.0).abs() < 1e-12 && (ls.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_elimination() {
        let a = vec![vec![q(1), q(2)], vec![q(3), q(10)]];
        assert_eq!(det_exact(&a), q(4));
        assert_eq!(det_exact(&[vec![q(0), q(1)], vec![q(1), q(0)]]), q(-1));
        assert_eq!(det_exact(&[vec![q(1), q(2)], vec![q(2), q(4)]]), q(0));
        let x = solve_exact(&a, &[q(5), q(19)]).unwrap();
        assert_eq!(x, vec![q(3), q(1)]);
        assert!(solve_exact(&[vec![q(1), q(2)], vec![q(2), q(4)]], &[q(1), q(1)]).is_none());
    }
}
