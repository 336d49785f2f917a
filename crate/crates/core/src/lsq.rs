//! Discrete polynomial least squares on a full sample and on its compressed
//! (CATCH) rule, with the stability constants relating the two.
//!
//! The compressed fit of degree `n` is the weighted `ℓ²_w(T)` projection on the
//! nodes of a rule with exactness `2n`. Its RMSE over the full sample is within
//! a factor `1 + β_M(ε)` of the best possible.

use rayon::prelude::*;

use crate::catch::{
    compress_with_basis, orthonormal_basis, CompressOptions, CompressedRule, DiscreteMeasure,
    OrthoFactorization, SolverKind,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::points::PointSet;
use crate::polyspace::{BoundingBox, PolynomialSpace};

/// Weighted least-squares polynomial in the orthonormal basis of its sample.
#[derive(Debug, Clone)]
pub struct LsFit {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub basis: OrthoFactorization,
}

impl LsFit {
    /// `Σ_j c_j ψ_j(y)` at arbitrary points inside the basis box.
    pub fn evaluate(&self, points: &PointSet) -> Result<Vec<f64>> {
        Ok(self.basis.evaluate(points)?.matvec(&self.coefficients))
    }

    /// The fit on its own sample, i.e. the discrete orthogonal projection of the data.
    pub fn values_on_sample(&self) -> Vec<f64> {
        self.basis.v().matvec(&self.coefficients)
    }
}

/// Fits `f` on `basis`, which must be orthonormal for the measure the values live on:
/// `c_j = Σ_i λ_i ψ_j(x_i) f(x_i)`.
pub fn ls_fit_with_basis(basis: &OrthoFactorization, f_values: &[f64]) -> Result<LsFit> {
    let masses = basis.masses();
    if f_values.len() != masses.len() {
        return Err(Error::InvalidInput(format!(
            "{} function values for {} sample points",
            f_values.len(),
            masses.len()
        )));
    }
    let weighted: Vec<f64> = masses.iter().zip(f_values).map(|(l, f)| l * f).collect();
    Ok(LsFit {
        degree: basis.space().degree(),
        coefficients: basis.v().tr_matvec(&weighted),
        basis: basis.clone(),
    })
}

/// Degree-`n` weighted least squares of `f` on `measure`. The basis lives on
/// `bbox`, or on the support's bounding box when `None`.
pub fn ls_fit(
    measure: &DiscreteMeasure,
    f_values: &[f64],
    n: usize,
    bbox: Option<&BoundingBox>,
    rtol: Option<f64>,
) -> Result<LsFit> {
    let bbox = match bbox {
        Some(b) => b.clone(),
        None => measure.bounding_box()?,
    };
    let basis = orthonormal_basis(measure, &PolynomialSpace::new(n, bbox), rtol)?;
    ls_fit_with_basis(&basis, f_values)
}

/// `(1/sqrt(M)) ||f - fit||_2`.
pub fn rmse(f_values: &[f64], fit_values: &[f64], total_count: usize) -> f64 {
    assert_eq!(f_values.len(), fit_values.len(), "rmse needs equal lengths");
    let diff: Vec<f64> = f_values
        .iter()
        .zip(fit_values)
        .map(|(a, b)| a - b)
        .collect();
    norm2(&diff) / (total_count as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityFactors {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon_sqrt_m: f64,
}

/// `α = (1 - ε√M)^(-1/2)` and `β = α (1 + ε/√M)^(1/2)`, defined for `ε√M < 1`.
pub fn stability_factors(epsilon: f64, big_m: usize) -> Result<StabilityFactors> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "residual must be nonnegative, got {epsilon}"
        )));
    }
    let sqrt_m = (big_m as f64).sqrt();
    let epsilon_sqrt_m = epsilon * sqrt_m;
    if epsilon_sqrt_m >= 1.0 {
        return Err(Error::StabilityViolated(epsilon_sqrt_m));
    }
    let alpha = (1.0 - epsilon_sqrt_m).powf(-0.5);
    let beta = alpha * (1.0 + epsilon / sqrt_m).sqrt();
    Ok(StabilityFactors {
        alpha,
        beta,
        epsilon_sqrt_m,
    })
}

/// `C_n sqrt(M) β_M(ε)`: the mesh constant certified for the CATCH points of a
/// polynomial mesh with constant `C_n`.
pub fn catch_mesh_bound(c_n: f64, big_m: usize, epsilon: f64) -> Result<f64> {
    let s = stability_factors(epsilon, big_m)?;
    Ok(c_n * (big_m as f64).sqrt() * s.beta)
}

/// Number of control points used when none are given: twenty per sample point, at most 10⁵.
pub fn default_control_count(sample_len: usize) -> usize {
    (20 * sample_len).min(100_000)
}

const CONTROL_CHUNK: usize = 256;

/// Per-control-point maxima of `f` over chunks, reduced with `max`; the
/// result does not depend on how the points are partitioned.
fn max_over_points<F>(basis: &OrthoFactorization, control: &PointSet, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = control.len();
    let chunks: Vec<usize> = (0..n).step_by(CONTROL_CHUNK).collect();
    let partial: Result<Vec<f64>> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + CONTROL_CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let psi = basis.evaluate(&control.select(&idx))?;
            let mut best = f64::NEG_INFINITY;
            let mut row = vec![0.0; psi.cols()];
            for r in 0..psi.rows() {
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = psi[(r, j)];
                }
                best = best.max(f(&row));
            }
            Ok(best)
        })
        .collect();
    Ok(partial?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Maximum over `control` of the Lebesgue function `Σ_i λ_i |K_n(x, x_i)|`,
/// with `K_n(x, y) = Σ_j ψ_j(x) ψ_j(y)` the reproducing kernel of the sample.
/// This estimates the uniform norm of the discrete least-squares projection.
pub fn operator_norm_estimate(basis: &OrthoFactorization, control: &PointSet) -> Result<f64> {
    let v = basis.v();
    let (m, rank) = (v.rows(), v.cols());
    // Rows of V laid out contiguously.
    let mut v_rows = vec![0.0; m * rank];
    for j in 0..rank {
        for (i, &x) in v.col(j).iter().enumerate() {
            v_rows[i * rank + j] = x;
        }
    }
    let masses = basis.masses();
    max_over_points(basis, control, |psi| {
        v_rows
            .chunks_exact(rank)
            .zip(masses)
            .map(|(vi, l)| l * dot(psi, vi).abs())
            .sum()
    })
}

/// `max_x sqrt(K_n(x, x))` over `control`: the smallest `C` with
/// `|p(x)| <= C ||p||_{ℓ²_λ}` for every `p` in the space and every control point.
/// Any polynomial-mesh constant of the sample bounds it from above.
pub fn christoffel_constant(basis: &OrthoFactorization, control: &PointSet) -> Result<f64> {
    max_over_points(basis, control, |psi| dot(psi, psi).sqrt())
}

/// Compression and both least-squares bases for one sample and degree, ready
/// to fit any number of functions.
#[derive(Debug, Clone)]
pub struct CatchLs {
    pub degree: usize,
    pub measure: DiscreteMeasure,
    /// Degree-`n` basis on the full sample.
    pub ls_basis: OrthoFactorization,
    /// Rule with exactness `2n`.
    pub rule: CompressedRule,
    /// Degree-`n` basis on the rule's nodes and weights.
    pub cls_basis: OrthoFactorization,
}

#[derive(Debug, Clone)]
pub struct CatchLsReport {
    pub ls: LsFit,
    pub cls: LsFit,
    pub rmse_ls: f64,
    pub rmse_cls: f64,
}

impl CatchLs {
    /// Builds the degree-`2n` rule with `solver` and the two degree-`n` bases.
    pub fn new(
        measure: &DiscreteMeasure,
        n: usize,
        solver: SolverKind,
        opts: &CompressOptions,
    ) -> Result<Self> {
        let bbox = match &opts.bbox {
            Some(b) => b.clone(),
            None => measure.bounding_box()?,
        };
        let high = orthonormal_basis(
            measure,
            &PolynomialSpace::new(2 * n, bbox.clone()),
            opts.rtol,
        )?;
        Self::from_high_basis(measure, n, &high, solver, opts)
    }

    /// Same as [`CatchLs::new`] with the degree-`2n` basis already built, so
    /// several solvers can share it.
    pub fn from_high_basis(
        measure: &DiscreteMeasure,
        n: usize,
        high: &OrthoFactorization,
        solver: SolverKind,
        opts: &CompressOptions,
    ) -> Result<Self> {
        if high.space().degree() != 2 * n {
            return Err(Error::InvalidInput(format!(
                "compression basis has degree {}, expected {}",
                high.space().degree(),
                2 * n
            )));
        }
        let bbox = high.space().bbox().clone();
        let rule = compress_with_basis(measure, high, solver, opts)?;
        let low_space = PolynomialSpace::new(n, bbox);
        let ls_basis = orthonormal_basis(measure, &low_space, opts.rtol)?;
        let cls_basis = orthonormal_basis(&rule.as_measure()?, &low_space, opts.rtol)?;
        Ok(Self {
            degree: n,
            measure: measure.clone(),
            ls_basis,
            rule,
            cls_basis,
        })
    }

    /// Plain and compressed fits of `f` with their RMSE over the full sample.
    pub fn fit(&self, f_values: &[f64]) -> Result<CatchLsReport> {
        let ls = ls_fit_with_basis(&self.ls_basis, f_values)?;
        let on_nodes: Vec<f64> = self
            .rule
            .node_indices
            .iter()
            .map(|&i| f_values[i])
            .collect();
        let cls = ls_fit_with_basis(&self.cls_basis, &on_nodes)?;
        let m = self.measure.len();
        let rmse_ls = rmse(f_values, &ls.values_on_sample(), m);
        let rmse_cls = rmse(f_values, &cls.evaluate(self.measure.points())?, m);
        Ok(CatchLsReport {
            ls,
            cls,
            rmse_ls,
            rmse_cls,
        })
    }

    /// Stability factors with `M` the sample size.
    pub fn stability(&self) -> Result<StabilityFactors> {
        stability_factors(self.rule.residual, self.measure.len())
    }
}

/// One-shot compressed least squares: compress at exactness `2n`, then fit.
pub fn catchls(
    measure: &DiscreteMeasure,
    f_values: &[f64],
    n: usize,
    solver: SolverKind,
    opts: &CompressOptions,
) -> Result<(CatchLs, CatchLsReport)> {
    let prepared = CatchLs::new(measure, n, solver, opts)?;
    let report = prepared.fit(f_values)?;
    Ok((prepared, report))
}
