//! Brute-force references for the sparse solvers, independent of the crate's
//! own factorizations: Gaussian elimination with partial pivoting on tiny
//! systems, exhaustive support enumeration for NNLS and vertex enumeration
//! for LP.

#![allow(dead_code)]

use catch_core::Matrix;
use rand::Rng;

/// Solves the square system `a x = b`, or `None` when it is numerically singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn residual_norm(a: &Matrix, cols: &[usize], x: &[f64], b: &[f64]) -> f64 {
    (0..a.rows())
        .map(|i| {
            let ax: f64 = cols.iter().zip(x).map(|(&j, xj)| a[(i, j)] * xj).sum();
            (ax - b[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn columns_of(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|j| mask >> j & 1 == 1).collect()
}

/// Smallest `||a u - b||` over `u >= 0`: the optimum is the unconstrained
/// least-squares solution on some support of independent columns whose
/// coefficients are all nonnegative, so trying every support finds it.
pub fn nnls_optimal_residual(a: &Matrix, b: &[f64]) -> f64 {
    let (n, m) = (a.rows(), a.cols());
    let mut best = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    for mask in 1usize..1 << m {
        let cols = columns_of(mask, m);
        if cols.len() > n {
            continue;
        }
        let gram: Vec<Vec<f64>> = cols
            .iter()
            .map(|&p| {
                cols.iter()
                    .map(|&q| (0..n).map(|i| a[(i, p)] * a[(i, q)]).sum())
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = cols
            .iter()
            .map(|&p| (0..n).map(|i| a[(i, p)] * b[i]).sum())
            .collect();
        let Some(x) = solve_square(gram, rhs) else {
            continue;
        };
        if x.iter().all(|&v| v >= -1e-13) {
            best = best.min(residual_norm(a, &cols, &x, b));
        }
    }
    best
}

/// Minimum of `c^t u` over the basic feasible solutions of `a u = b, u >= 0`
/// (`a` with full row rank), or `None` when there are none.
pub fn lp_vertex_optimum(a: &Matrix, b: &[f64], c: &[f64]) -> Option<f64> {
    let (n, m) = (a.rows(), a.cols());
    let mut best: Option<f64> = None;
    for mask in 1usize..1 << m {
        let cols = columns_of(mask, m);
        if cols.len() != n {
            continue;
        }
        let square: Vec<Vec<f64>> = (0..n)
            .map(|i| cols.iter().map(|&j| a[(i, j)]).collect())
            .collect();
        let Some(x) = solve_square(square, b.to_vec()) else {
            continue;
        };
        if x.iter().all(|&v| v >= -1e-12) {
            let obj: f64 = cols.iter().zip(&x).map(|(&j, xj)| c[j] * xj).sum();
            best = Some(best.map_or(obj, |o: f64| o.min(obj)));
        }
    }
    best
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_col_major(rows, cols, data).unwrap()
}

/// A feasible, bounded LP: `b = a u0` for a sparse nonnegative `u0` and a positive cost.
pub fn random_lp(rng: &mut impl Rng, rows: usize, cols: usize) -> (Matrix, Vec<f64>, Vec<f64>) {
    let a = random_matrix(rng, rows, cols);
    let u0: Vec<f64> = (0..cols)
        .map(|_| {
            if rng.gen_bool(0.5) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let b = a.matvec(&u0);
    let c: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.1..1.0)).collect();
    (a, b, c)
}
