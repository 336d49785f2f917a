//! Total-degree polynomial spaces in one to three variables and their
//! Vandermonde-like matrices in a product Chebyshev basis.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::points::PointSet;

pub const MAX_DIM: usize = 3;

/// Axis-aligned box `[a_1, b_1] x ... x [a_d, b_d]` with `a_j < b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "bounding box needs 1 to {MAX_DIM} matching bounds, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidInput(format!(
                    "bounding box axis {j} is not a proper interval: [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Tightest box around `points`. An axis along which all points agree is
    /// widened to unit length around the common value.
    pub fn enclosing(points: &PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "cannot bound an empty point set".into(),
            ));
        }
        let d = points.dim();
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for p in points.iter() {
            for j in 0..d {
                lower[j] = lower[j].min(p[j]);
                upper[j] = upper[j].max(p[j]);
            }
        }
        for j in 0..d {
            if lower[j] == upper[j] {
                lower[j] -= 0.5;
                upper[j] += 0.5;
            }
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    /// Affine image of coordinate `x` on `axis` in `[-1, 1]`.
    pub fn to_reference(&self, axis: usize, x: f64) -> f64 {
        let (a, b) = (self.lower[axis], self.upper[axis]);
        (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0)
    }
}

/// Multi-index of a monomial-like basis element.
pub type Exponent = Vec<usize>;

/// Number of `d`-variate polynomials of total degree at most `degree`,
/// i.e. `binomial(degree + d, d)`.
pub fn space_dimension(d: usize, degree: usize) -> usize {
    // Multiplicative binomial; every prefix product is itself a binomial, so
    // the division is exact.
    let mut acc: usize = 1;
    for i in 1..=d {
        acc = acc * (degree + i) / i;
    }
    acc
}

/// Exponents with total degree `<= degree`, graded by total degree and
/// lexicographically descending in the leading coordinates within a degree.
pub fn exponent_list(d: usize, degree: usize) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(space_dimension(d, degree));
    let mut current = vec![0; d];
    for total in 0..=degree {
        push_with_total(&mut current, 0, total, &mut out);
    }
    out
}

fn push_with_total(current: &mut [usize], axis: usize, remaining: usize, out: &mut Vec<Exponent>) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        out.push(current.to_vec());
        return;
    }
    for a in (0..=remaining).rev() {
        current[axis] = a;
        push_with_total(current, axis + 1, remaining - a, out);
    }
}

/// `T_0(t), ..., T_degree(t)` by the three-term recurrence.
pub fn chebyshev_values(t: f64, degree: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if degree >= 1 {
        out.push(t);
    }
    for k in 2..=degree {
        let next = 2.0 * t * out[k - 1] - out[k - 2];
        out.push(next);
    }
}

/// The space of `d`-variate polynomials of total degree `<= degree` on a
/// reference box.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSpace {
    degree: usize,
    exponents: Vec<Exponent>,
    bbox: BoundingBox,
}

impl PolynomialSpace {
    pub fn new(degree: usize, bbox: BoundingBox) -> Self {
        let exponents = exponent_list(bbox.dim(), degree);
        Self {
            degree,
            exponents,
            bbox,
        }
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exponents
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Same box, different degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        Self::new(degree, self.bbox.clone())
    }

    /// Basis values at one point into `row` (length `len()`).
    fn fill_row(&self, p: &[f64], cheb: &mut [Vec<f64>], row: &mut [f64]) {
        for (axis, values) in cheb.iter_mut().enumerate() {
            chebyshev_values(self.bbox.to_reference(axis, p[axis]), self.degree, values);
        }
        for (slot, alpha) in row.iter_mut().zip(&self.exponents) {
            *slot = alpha
                .iter()
                .enumerate()
                .map(|(axis, &k)| cheb[axis][k])
                .product();
        }
    }

    /// Basis values at a single point.
    pub fn evaluate_basis(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, space is {}-dimensional",
                p.len(),
                self.dim()
            )));
        }
        check_inside(&self.bbox, 0, p)?;
        let mut cheb = vec![Vec::with_capacity(self.degree + 1); self.dim()];
        let mut row = vec![0.0; self.len()];
        self.fill_row(p, &mut cheb, &mut row);
        Ok(row)
    }

    /// `card(points) x len()` matrix with entry `(i, k)` the `k`-th product
    /// Chebyshev polynomial at point `i`.
    pub fn vandermonde(&self, points: &PointSet) -> Result<Matrix> {
        if points.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "points are {}-dimensional, space is {}-dimensional",
                points.dim(),
                self.dim()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("no points".into()));
        }
        let m = points.len();
        let mut data = vec![0.0; m * self.len()];
        let mut cheb = vec![Vec::with_capacity(self.degree + 1); self.dim()];
        let mut row = vec![0.0; self.len()];
        for (i, p) in points.iter().enumerate() {
            check_inside(&self.bbox, i, p)?;
            self.fill_row(p, &mut cheb, &mut row);
            for (k, v) in row.iter().enumerate() {
                data[i + k * m] = *v;
            }
        }
        Matrix::from_col_major(m, self.len(), data)
    }
}

/// Relative slack for points computed on the boundary of a domain whose box is
/// known analytically; Chebyshev polynomials are harmless that close to `[-1, 1]`.
const BOX_SLACK: f64 = 1e-10;

fn check_inside(bbox: &BoundingBox, index: usize, p: &[f64]) -> Result<()> {
    for axis in 0..bbox.dim() {
        let x = p[axis];
        let slack = BOX_SLACK * (bbox.upper[axis] - bbox.lower[axis]);
        if !(bbox.lower[axis] - slack <= x && x <= bbox.upper[axis] + slack) {
            return Err(Error::OutOfDomain {
                point: index,
                axis,
                value: x,
            });
        }
    }
    Ok(())
}
