//! Caratheodory-Tchakaloff compression of a discrete measure.
//!
//! Given points `X` with masses `λ` and an exactness degree `ν`, the pipeline
//!
//! 1. builds the Chebyshev Vandermonde matrix `U` of degree `ν` on `X`,
//! 2. takes its numerical rank `N`,
//! 3. factors `sqrt(Λ) U(:, π) = Q R` with column pivoting; the first `N`
//!    columns of `Q`, rescaled row-wise by `1/sqrt(λ_i)`, hold the values of a
//!    basis `ψ` of the polynomials restricted to `X` that is orthonormal in
//!    `ℓ²_λ(X)`,
//! 4. solves `Vᵗ u = b = Vᵗ λ`, `u >= 0` for a sparse `u` by NNLS or by the
//!    simplex method,
//! 5. keeps the nonzero entries of `u` as nodes and weights, and recomputes the
//!    moment residual `ε = ||Vᵗ u - b||_2`.
//!
//! Every polynomial `p` of degree `<= ν` then satisfies
//! `|Σ w_j p(t_j) - Σ λ_i p(x_i)| <= ε ||p||_{ℓ²_λ(X)}`.

use std::fmt;
use std::str::FromStr;

use log::debug;

use crate::error::{Error, Result};
use crate::linalg::{self, invert_upper_triangular, norm2, numerical_rank, pivoted_qr, Matrix};
use crate::points::PointSet;
use crate::polyspace::{BoundingBox, PolynomialSpace};
use crate::solvers::{self, LpOptions, LpStatus, NnlsOptions};

/// Finitely supported positive measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: PointSet,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: PointSet, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "a measure needs at least one point".into(),
            ));
        }
        if masses.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} masses",
                points.len(),
                masses.len()
            )));
        }
        if let Some(i) = masses.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "mass {i} must be positive and finite, got {}",
                masses[i]
            )));
        }
        Ok(Self { points, masses })
    }

    /// All masses equal to one.
    pub fn unit(points: PointSet) -> Result<Self> {
        let m = points.len();
        Self::new(points, vec![1.0; m])
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn bounding_box(&self) -> Result<BoundingBox> {
        BoundingBox::enclosing(&self.points)
    }

    /// `Σ λ_i f(x_i)`.
    pub fn integrate(&self, f_values: &[f64]) -> f64 {
        assert_eq!(f_values.len(), self.len(), "one value per support point");
        self.masses.iter().zip(f_values).map(|(l, f)| l * f).sum()
    }

    /// `sqrt(Σ λ_i f(x_i)²)`.
    pub fn l2_norm(&self, f_values: &[f64]) -> f64 {
        assert_eq!(f_values.len(), self.len(), "one value per support point");
        let scaled: Vec<f64> = self
            .masses
            .iter()
            .zip(f_values)
            .map(|(l, f)| l.sqrt() * f)
            .collect();
        norm2(&scaled)
    }
}

/// A basis of the polynomial space restricted to the support of a measure,
/// orthonormal in `ℓ²_λ`.
#[derive(Debug, Clone)]
pub struct OrthoFactorization {
    space: PolynomialSpace,
    /// `M x N`, entry `(i, j) = ψ_j(x_i)`.
    v: Matrix,
    r_n: Matrix,
    r_inv: Matrix,
    perm: Vec<usize>,
    rank_n: usize,
    masses: Vec<f64>,
}

impl OrthoFactorization {
    pub fn space(&self) -> &PolynomialSpace {
        &self.space
    }

    /// Values of the orthonormal basis on the support.
    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn r_n(&self) -> &Matrix {
        &self.r_n
    }

    /// Pivot order of the generators.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn rank(&self) -> usize {
        self.rank_n
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Values `ψ_j(y)` at arbitrary points as a `card(points) x N` matrix:
    /// the selected generators times `R_N⁻¹`.
    pub fn evaluate(&self, points: &PointSet) -> Result<Matrix> {
        let u = self.space.vandermonde(points)?;
        u.select_columns(&self.perm[..self.rank_n])
            .matmul(&self.r_inv)
    }

    /// `ψ(y)` at a single point.
    pub fn evaluate_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        let phi = self.space.evaluate_basis(p)?;
        let selected: Vec<f64> = self.perm[..self.rank_n].iter().map(|&k| phi[k]).collect();
        Ok(self.r_inv.tr_matvec(&selected))
    }
}

/// Builds the `ℓ²_λ`-orthonormal basis of `space` restricted to the support.
pub fn orthonormal_basis(
    measure: &DiscreteMeasure,
    space: &PolynomialSpace,
    rtol: Option<f64>,
) -> Result<OrthoFactorization> {
    let mut u = space.vandermonde(measure.points())?;
    let rank_n = numerical_rank(&u, rtol)?;
    if rank_n == 0 {
        return Err(Error::InvalidInput(
            "Vandermonde matrix has rank zero".into(),
        ));
    }
    let sqrt_masses: Vec<f64> = measure.masses().iter().map(|l| l.sqrt()).collect();
    u.scale_rows(&sqrt_masses);
    let qr = pivoted_qr(&u)?;
    let mut v = qr.q.truncate_columns(rank_n);
    let inv_sqrt: Vec<f64> = sqrt_masses.iter().map(|s| 1.0 / s).collect();
    v.scale_rows(&inv_sqrt);
    let mut r_n = Matrix::zeros(rank_n, rank_n);
    for j in 0..rank_n {
        for i in 0..=j {
            r_n[(i, j)] = qr.r[(i, j)];
        }
    }
    let r_inv = invert_upper_triangular(&r_n)?;
    Ok(OrthoFactorization {
        space: space.clone(),
        v,
        r_n,
        r_inv,
        perm: qr.perm,
        rank_n,
        masses: measure.masses().to_vec(),
    })
}

/// `b_j = Σ_i λ_i ψ_j(x_i)`.
pub fn moments(fact: &OrthoFactorization, measure: &DiscreteMeasure) -> Vec<f64> {
    fact.v.tr_matvec(measure.masses())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Nnls,
    Lp,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Nnls => "nnls",
            SolverKind::Lp => "lp",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nnls" => Ok(SolverKind::Nnls),
            "lp" => Ok(SolverKind::Lp),
            other => Err(Error::InvalidInput(format!(
                "unknown solver '{other}' (expected nnls or lp)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompressOptions {
    /// Relative rank tolerance; `None` uses `max(M, L) * eps`.
    pub rtol: Option<f64>,
    /// NNLS dual tolerance; `None` uses the solver default.
    pub ktol: Option<f64>,
    /// Weights at or below `zero_threshold * max(u)` are dropped.
    pub zero_threshold: f64,
    /// Reference box for the polynomial basis; `None` uses the support's bounding box.
    pub bbox: Option<BoundingBox>,
    pub lp: LpOptions,
}

impl Default for CompressOptions {
    fn default() -> Self {
        Self {
            rtol: None,
            ktol: None,
            zero_threshold: 1e-13,
            bbox: None,
            lp: LpOptions::default(),
        }
    }
}

/// Positive quadrature rule supported on a subset of the original points.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedRule {
    /// Indices into the original support, ascending.
    pub node_indices: Vec<usize>,
    pub nodes: PointSet,
    pub weights: Vec<f64>,
    /// Moment residual `||Vᵗ u - b||_2` after support extraction.
    pub residual: f64,
    pub exactness_degree: usize,
    pub rank_n: usize,
    pub solver_used: SolverKind,
}

impl CompressedRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The rule as a measure on its nodes.
    pub fn as_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.nodes.clone(), self.weights.clone())
    }
}

/// Compresses `measure` into a rule exact (up to the residual) for total degree `exactness_degree`.
pub fn compress(
    measure: &DiscreteMeasure,
    exactness_degree: usize,
    solver: SolverKind,
    opts: &CompressOptions,
) -> Result<CompressedRule> {
    let bbox = match &opts.bbox {
        Some(b) => b.clone(),
        None => measure.bounding_box()?,
    };
    let space = PolynomialSpace::new(exactness_degree, bbox);
    let fact = orthonormal_basis(measure, &space, opts.rtol)?;
    compress_with_basis(measure, &fact, solver, opts)
}

/// Compression step on a precomputed orthonormal basis of the measure.
pub fn compress_with_basis(
    measure: &DiscreteMeasure,
    fact: &OrthoFactorization,
    solver: SolverKind,
    opts: &CompressOptions,
) -> Result<CompressedRule> {
    let m = measure.len();
    let rank_n = fact.rank();
    let exactness_degree = fact.space().degree();
    if m <= rank_n {
        return Ok(CompressedRule {
            node_indices: (0..m).collect(),
            nodes: measure.points().clone(),
            weights: measure.masses().to_vec(),
            residual: 0.0,
            exactness_degree,
            rank_n,
            solver_used: solver,
        });
    }

    let system = fact.v().transpose();
    let b = moments(fact, measure);
    let u = match solver {
        SolverKind::Nnls => {
            let nnls_opts = NnlsOptions {
                ktol: opts.ktol,
                max_iter: None,
            };
            let res = solvers::nnls_with(&system, &b, &nnls_opts)?;
            debug!(
                "nnls: {} iterations, support {}, residual {:e}",
                res.iterations,
                res.support.len(),
                res.residual_norm
            );
            res.u
        }
        SolverKind::Lp => {
            let c = solvers::power_objective(
                measure.points(),
                fact.space().bbox(),
                exactness_degree + 1,
            );
            let res = solvers::simplex_lp_with(&system, &b, &c, &opts.lp)?;
            debug!(
                "simplex: {} pivots, status {:?}, phase-one objective {:e}",
                res.pivots, res.status, res.phase_one_objective
            );
            match res.status {
                LpStatus::Optimal => res.u,
                LpStatus::Infeasible => {
                    return Err(Error::Infeasible {
                        phase_one_objective: res.phase_one_objective,
                        tolerance: opts.lp.ftol * (1.0 + norm2(&b)),
                    })
                }
                LpStatus::Unbounded => {
                    return Err(Error::Unbounded {
                        column: res.basis.first().copied().unwrap_or(0),
                    })
                }
            }
        }
    };

    let umax = u.iter().fold(0.0f64, |a, &x| a.max(x));
    let cutoff = opts.zero_threshold * umax;
    let node_indices: Vec<usize> = (0..m).filter(|&i| u[i] > cutoff && u[i] > 0.0).collect();
    let weights: Vec<f64> = node_indices.iter().map(|&i| u[i]).collect();
    let residual = moment_residual(fact, &b, &node_indices, &weights);
    Ok(CompressedRule {
        nodes: measure.points().select(&node_indices),
        node_indices,
        weights,
        residual,
        exactness_degree,
        rank_n,
        solver_used: solver,
    })
}

/// `||Vᵗ u - b||_2` for `u` supported on `indices`.
pub fn moment_residual(
    fact: &OrthoFactorization,
    b: &[f64],
    indices: &[usize],
    weights: &[f64],
) -> f64 {
    let v = fact.v();
    let diff: Vec<f64> = (0..fact.rank())
        .map(|j| {
            let col = v.col(j);
            let approx: f64 = indices.iter().zip(weights).map(|(&i, w)| w * col[i]).sum();
            approx - b[j]
        })
        .collect();
    linalg::norm2(&diff)
}

/// `C_ratio = M / m`.
pub fn compression_ratio(rule: &CompressedRule, original_m: usize) -> f64 {
    original_m as f64 / rule.len() as f64
}

/// `C_ε E_S + ε ||f||` with `C_ε = 2 (μ(X) + ε sqrt(μ(X)))`: a bound on the
/// quadrature error of the rule for `f` whose distance from the exactness
/// space in the max norm is at most `best_approx_bound`.
pub fn error_bound(
    rule: &CompressedRule,
    total_mass: f64,
    best_approx_bound: f64,
    f_l2_norm: f64,
) -> f64 {
    let eps = rule.residual;
    let c_eps = 2.0 * (total_mass + eps * total_mass.sqrt());
    c_eps * best_approx_bound + eps * f_l2_norm
}

/// `Σ_j w_j f(t_j)` from the values of `f` on the full support.
pub fn apply_rule(rule: &CompressedRule, f_values_on_x: &[f64]) -> f64 {
    rule.node_indices
        .iter()
        .zip(&rule.weights)
        .map(|(&i, w)| w * f_values_on_x[i])
        .sum()
}
