//! Lawson-Hanson active-set method for `min ||a u - b||_2` subject to `u >= 0`.
//!
//! The passive-set columns are kept upper triangular in a working copy of `a`
//! by applying each new Householder reflector to the whole matrix and to `b`.
//! Dropping a column from the passive set restores triangularity with Givens
//! rotations. Each least-squares subproblem is then a back substitution.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};

/// Fraction of the column norm above the diagonal that a new diagonal entry
/// must exceed before its column can enter the passive set.
const DIAG_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, Default)]
pub struct NnlsOptions {
    /// Dual tolerance. Defaults to `10 * eps * ||a||_1 * ||b||_2`.
    pub ktol: Option<f64>,
    /// Cap on least-squares subproblem solves. Defaults to `10 * cols`.
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NnlsResult {
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Indices with `u_i > 0`, ascending.
    pub support: Vec<usize>,
}

pub fn default_ktol(a: &Matrix, b: &[f64]) -> f64 {
    10.0 * f64::EPSILON * a.norm_1() * norm2(b)
}

pub fn nnls(a: &Matrix, b: &[f64]) -> Result<NnlsResult> {
    nnls_with(a, b, &NnlsOptions::default())
}

pub fn nnls_with(a: &Matrix, b: &[f64], opts: &NnlsOptions) -> Result<NnlsResult> {
    a.check_finite()?;
    if b.len() != a.rows() {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite right-hand side".into()));
    }
    let ktol = opts.ktol.unwrap_or_else(|| default_ktol(a, b));
    let max_iter = opts.max_iter.unwrap_or(10 * a.cols());

    let mut state = ActiveSet::new(a, b);
    let outcome = state.run(ktol, max_iter);
    let u = state.x;
    let residual: Vec<f64> = a.matvec(&u).iter().zip(b).map(|(p, q)| q - p).collect();
    let residual_norm = norm2(&residual);
    match outcome {
        Ok(iterations) => {
            let support = (0..u.len()).filter(|&i| u[i] > 0.0).collect();
            Ok(NnlsResult {
                u,
                residual_norm,
                iterations,
                support,
            })
        }
        Err(iterations) => Err(Error::NoConvergence {
            solver: "nnls",
            iterations,
            residual: residual_norm,
            best: u,
        }),
    }
}

/// Largest entry of the dual vector `aᵗ(b - a u)` over the zero set and the
/// largest magnitude over the support. Both are `<= ktol` at a KKT point.
pub fn kkt_violation(a: &Matrix, b: &[f64], u: &[f64]) -> (f64, f64) {
    let r: Vec<f64> = a.matvec(u).iter().zip(b).map(|(p, q)| q - p).collect();
    let dual = a.tr_matvec(&r);
    let mut zero_set = f64::NEG_INFINITY;
    let mut support = 0.0f64;
    for (d, x) in dual.iter().zip(u) {
        if *x > 0.0 {
            support = support.max(d.abs());
        } else {
            zero_set = zero_set.max(*d);
        }
    }
    (zero_set, support)
}

struct ActiveSet {
    m: usize,
    n: usize,
    a: Matrix,
    b: Vec<f64>,
    x: Vec<f64>,
    /// `index[..nsetp]` is the passive set in triangular order, the rest is the zero set.
    index: Vec<usize>,
    nsetp: usize,
}

impl ActiveSet {
    fn new(a: &Matrix, b: &[f64]) -> Self {
        Self {
            m: a.rows(),
            n: a.cols(),
            a: a.clone(),
            b: b.to_vec(),
            x: vec![0.0; a.cols()],
            index: (0..a.cols()).collect(),
            nsetp: 0,
        }
    }

    /// Returns the iteration count, or `Err(iterations)` when the cap is hit.
    fn run(&mut self, ktol: f64, max_iter: usize) -> std::result::Result<usize, usize> {
        let mut iterations = 0;
        let mut dual = vec![0.0; self.n];
        loop {
            if self.nsetp >= self.n || self.nsetp >= self.m {
                return Ok(iterations);
            }
            let p = self.nsetp;
            for &j in &self.index[p..] {
                dual[j] = dot(&self.a.col(j)[p..], &self.b[p..]);
            }

            let Some((iz, reflector)) = self.choose_entering(&mut dual, ktol) else {
                return Ok(iterations);
            };
            let j = self.index[iz];
            self.index.swap(iz, p);
            self.nsetp += 1;
            reflector.apply(&mut self.b);
            self.apply_to_columns(&reflector, j);
            let col = self.a.col_mut(j);
            col[p] = reflector.beta;
            col[p + 1..].iter_mut().for_each(|v| *v = 0.0);
            dual[j] = 0.0;

            // Inner loop: back off along the segment toward the unconstrained
            // solution until all passive coefficients are positive.
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(iterations);
                }
                let z = self.solve_passive();
                if z.iter().all(|&v| v > 0.0) {
                    for (k, &zk) in z.iter().enumerate() {
                        self.x[self.index[k]] = zk;
                    }
                    break;
                }
                let mut alpha = f64::INFINITY;
                let mut blocking = 0;
                for (k, &zk) in z.iter().enumerate() {
                    if zk <= 0.0 {
                        let xk = self.x[self.index[k]];
                        let t = xk / (xk - zk);
                        if t < alpha {
                            alpha = t;
                            blocking = self.index[k];
                        }
                    }
                }
                for (k, &zk) in z.iter().enumerate() {
                    let jk = self.index[k];
                    self.x[jk] += alpha * (zk - self.x[jk]);
                }
                self.x[blocking] = 0.0;
                self.drop_nonpositive();
            }
        }
    }

    /// Picks the zero-set column with the largest positive dual entry whose
    /// reflector produces a usable pivot and a positive tentative coefficient.
    fn choose_entering(&self, dual: &mut [f64], ktol: f64) -> Option<(usize, Reflector)> {
        let p = self.nsetp;
        loop {
            let (iz, wmax) = self.index[p..]
                .iter()
                .enumerate()
                .map(|(k, &j)| (p + k, dual[j]))
                .fold((p, f64::NEG_INFINITY), |best, cand| {
                    if cand.1 > best.1 {
                        cand
                    } else {
                        best
                    }
                });
            if wmax <= ktol {
                return None;
            }
            let j = self.index[iz];
            let col = self.a.col(j);
            if let Some(reflector) = Reflector::new(&col[p..], p) {
                let unorm = norm2(&col[..p]);
                if (reflector.beta.abs() * DIAG_FACTOR + unorm) - unorm > 0.0 {
                    let mut zz = self.b.clone();
                    reflector.apply(&mut zz);
                    if zz[p] / reflector.beta > 0.0 {
                        return Some((iz, reflector));
                    }
                }
            }
            dual[j] = 0.0;
        }
    }

    fn apply_to_columns(&mut self, reflector: &Reflector, skip: usize) {
        let m = self.m;
        let work = reflector.len() * self.n;
        let apply = |(j, col): (usize, &mut [f64])| {
            if j != skip {
                reflector.apply(col);
            }
        };
        let data = self.a.as_mut_slice();
        if work > 1 << 16 {
            data.par_chunks_mut(m).enumerate().for_each(apply);
        } else {
            data.chunks_mut(m).enumerate().for_each(apply);
        }
    }

    fn solve_passive(&self) -> Vec<f64> {
        let k = self.nsetp;
        let mut z = self.b[..k].to_vec();
        for i in (0..k).rev() {
            let col = self.a.col(self.index[i]);
            z[i] /= col[i];
            let zi = z[i];
            for (zr, &c) in z[..i].iter_mut().zip(&col[..i]) {
                *zr -= zi * c;
            }
        }
        z
    }

    /// Moves every passive index with `x <= 0` to the zero set, re-triangularizing with Givens rotations.
    fn drop_nonpositive(&mut self) {
        loop {
            let Some(pos) = (0..self.nsetp).find(|&k| self.x[self.index[k]] <= 0.0) else {
                return;
            };
            let removed = self.index[pos];
            self.x[removed] = 0.0;
            for i in pos + 1..self.nsetp {
                let jc = self.index[i];
                self.index[i - 1] = jc;
                let (c, s, r) = givens(self.a[(i - 1, jc)], self.a[(i, jc)]);
                self.a[(i - 1, jc)] = r;
                self.a[(i, jc)] = 0.0;
                for l in 0..self.n {
                    if l != jc {
                        let (top, bot) = (self.a[(i - 1, l)], self.a[(i, l)]);
                        self.a[(i - 1, l)] = c * top + s * bot;
                        self.a[(i, l)] = -s * top + c * bot;
                    }
                }
                let (top, bot) = (self.b[i - 1], self.b[i]);
                self.b[i - 1] = c * top + s * bot;
                self.b[i] = -s * top + c * bot;
            }
            self.nsetp -= 1;
            self.index[self.nsetp] = removed;
        }
    }
}

/// Householder reflector `I - 2 v vᵗ / (vᵗ v)` acting on rows `offset..`,
/// mapping the pivot subcolumn onto `beta * e_1`.
struct Reflector {
    offset: usize,
    v: Vec<f64>,
    vtv: f64,
    beta: f64,
}

impl Reflector {
    fn new(x: &[f64], offset: usize) -> Option<Self> {
        let norm = norm2(x);
        if norm == 0.0 {
            return None;
        }
        let beta = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= beta;
        let vtv = dot(&v, &v);
        if vtv == 0.0 {
            return None;
        }
        Some(Self {
            offset,
            v,
            vtv,
            beta,
        })
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    fn apply(&self, c: &mut [f64]) {
        let tail = &mut c[self.offset..];
        let s = 2.0 * dot(&self.v, tail) / self.vtv;
        if s != 0.0 {
            for (t, v) in tail.iter_mut().zip(&self.v) {
                *t -= s * v;
            }
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / r, b / r, r)
    }
}
