//! Compression of discrete measures into sparse positive quadrature rules
//! (Caratheodory-Tchakaloff subsampling) and compressed polynomial least
//! squares on the extracted nodes.
//!
//! ```no_run
//! use catch_core::{catch::*, pointsets::{halton_domain, DomainSpec}};
//!
//! let points = halton_domain(&DomainSpec::four_disks(), 10_000, 0).unwrap();
//! let measure = DiscreteMeasure::unit(points).unwrap();
//! let rule = compress(&measure, 6, SolverKind::Nnls, &CompressOptions::default()).unwrap();
//! println!("{} nodes, residual {:e}", rule.len(), rule.residual);
//! ```

pub mod catch;
pub mod error;
pub mod linalg;
pub mod lsq;
pub mod points;
pub mod pointsets;
pub mod polyspace;
pub mod solvers;

pub use catch::{
    apply_rule, compress, compress_with_basis, compression_ratio, error_bound, moments,
    orthonormal_basis, CompressOptions, CompressedRule, DiscreteMeasure, OrthoFactorization,
    SolverKind,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use lsq::{
    catchls, ls_fit, rmse, stability_factors, CatchLs, CatchLsReport, LsFit, StabilityFactors,
};
pub use points::PointSet;
pub use polyspace::{space_dimension, BoundingBox, PolynomialSpace};
