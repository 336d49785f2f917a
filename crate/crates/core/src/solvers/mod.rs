//! Sparse nonnegative solvers for the moment system: Lawson-Hanson NNLS and
//! a two-phase dense simplex method.

pub mod nnls;
pub mod simplex;

pub use nnls::{kkt_violation, nnls, nnls_with, NnlsOptions, NnlsResult};
pub use simplex::{simplex_lp, simplex_lp_with, LpOptions, LpResult, LpStatus};

use crate::points::PointSet;
use crate::polyspace::BoundingBox;

/// LP objective `c_i = sum_j t_ij^power`, where `t_i` is point `i` mapped
/// into `[-1, 1]^d` through `bbox`.
pub fn power_objective(points: &PointSet, bbox: &BoundingBox, power: usize) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(axis, &x)| bbox.to_reference(axis, x).powi(power as i32))
                .sum()
        })
        .collect()
}

/// The objective for exactness degree `2n`: the polynomial
/// `x^(2n+1) + y^(2n+1) (+ z^(2n+1))`, which lies outside the exactness space.
pub fn default_objective(points: &PointSet, bbox: &BoundingBox, n: usize) -> Vec<f64> {
    power_objective(points, bbox, 2 * n + 1)
}
