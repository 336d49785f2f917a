//! Sample geometries: Halton sequences, domain indicators and boundary
//! sampling of star-shaped level sets.

pub mod io;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::polyspace::{space_dimension, BoundingBox};

const PRIMES: [u64; 3] = [2, 3, 5];

/// Digit reversal of `index` in `base`, a value in `[0, 1)`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut factor = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv_base;
    }
    value
}

/// `count` Halton points in `(0, 1)^d` with bases 2, 3, 5. Point `i` uses the
/// sequence index `i + skip + 1`, so the origin is never produced.
pub fn halton(count: usize, d: usize, skip: u64) -> Result<PointSet> {
    if d == 0 || d > PRIMES.len() {
        return Err(Error::InvalidInput(format!(
            "Halton dimension must be 1 to 3, got {d}"
        )));
    }
    let mut coords = Vec::with_capacity(count * d);
    for i in 0..count as u64 {
        for &base in &PRIMES[..d] {
            coords.push(radical_inverse(i + skip + 1, base));
        }
    }
    PointSet::new(d, coords)
}

/// Halton points mapped affinely from the unit cube onto `bbox`.
pub fn halton_in_box(count: usize, bbox: &BoundingBox, skip: u64) -> Result<PointSet> {
    let unit = halton(count, bbox.dim(), skip)?;
    let mut coords = Vec::with_capacity(unit.coords().len());
    for p in unit.iter() {
        for (axis, &t) in p.iter().enumerate() {
            let (a, b) = (bbox.lower()[axis], bbox.upper()[axis]);
            coords.push(a + (b - a) * t);
        }
    }
    PointSet::new(bbox.dim(), coords)
}

/// Sampling domains.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Box(BoundingBox),
    DiskUnion {
        centers: Vec<[f64; 2]>,
        radii: Vec<f64>,
    },
    /// `{ x⁴ + 4 y⁴ <= threshold }`.
    LevelSet {
        threshold: f64,
    },
}

impl DomainSpec {
    pub fn disk_union(centers: Vec<[f64; 2]>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || centers.len() != radii.len() {
            return Err(Error::InvalidInput(format!(
                "{} centers and {} radii",
                centers.len(),
                radii.len()
            )));
        }
        if radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidInput("disk radii must be positive".into()));
        }
        Ok(DomainSpec::DiskUnion { centers, radii })
    }

    pub fn level_set(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "level-set threshold must be positive, got {threshold}"
            )));
        }
        Ok(DomainSpec::LevelSet { threshold })
    }

    /// Union of four disks of radius 0.775 whose Halton acceptance ratio from
    /// the surrounding rectangle is about 0.56 (5587 of the first 10000 points).
    pub fn four_disks() -> Self {
        DomainSpec::DiskUnion {
            centers: vec![[0.0, 0.0], [1.8, 0.0], [0.9, 1.5], [0.9, -0.6]],
            radii: vec![0.775; 4],
        }
    }

    /// The quartic level set `x⁴ + 4 y⁴ <= 1`.
    pub fn quartic() -> Self {
        DomainSpec::LevelSet { threshold: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box(b) => b.dim(),
            DomainSpec::DiskUnion { .. } | DomainSpec::LevelSet { .. } => 2,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            DomainSpec::Box(b) => b.contains(p),
            DomainSpec::DiskUnion { centers, radii } => centers.iter().zip(radii).any(|(c, r)| {
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                dx * dx + dy * dy <= r * r
            }),
            DomainSpec::LevelSet { threshold } => quartic(p[0], p[1]) <= *threshold,
        }
    }

    /// Minimal axis-aligned rectangle (or box) containing the domain.
    pub fn bounding_box(&self) -> BoundingBox {
        let (lower, upper) = match self {
            DomainSpec::Box(b) => return b.clone(),
            DomainSpec::DiskUnion { centers, radii } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for (c, r) in centers.iter().zip(radii) {
                    for axis in 0..2 {
                        lo[axis] = lo[axis].min(c[axis] - r);
                        hi[axis] = hi[axis].max(c[axis] + r);
                    }
                }
                (lo.to_vec(), hi.to_vec())
            }
            DomainSpec::LevelSet { threshold } => {
                let xmax = threshold.powf(0.25);
                let ymax = (threshold / 4.0).powf(0.25);
                (vec![-xmax, -ymax], vec![xmax, ymax])
            }
        };
        BoundingBox::new(lower, upper).expect("validated domain has a proper bounding box")
    }
}

fn quartic(x: f64, y: f64) -> f64 {
    let (x2, y2) = (x * x, y * y);
    x2 * x2 + 4.0 * y2 * y2
}

/// The points of `points` inside `spec`, in their original order, and their count.
pub fn filter_domain(points: &PointSet, spec: &DomainSpec) -> Result<(PointSet, usize)> {
    if points.dim() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "{}-dimensional points against a {}-dimensional domain",
            points.dim(),
            spec.dim()
        )));
    }
    let mut kept = PointSet::empty(points.dim())?;
    for p in points.iter().filter(|p| spec.contains(p)) {
        kept.push(p);
    }
    let count = kept.len();
    Ok((kept, count))
}

/// The first `count` Halton points of the bounding rectangle, filtered to the domain.
pub fn halton_domain(spec: &DomainSpec, count: usize, skip: u64) -> Result<PointSet> {
    let raw = halton_in_box(count, &spec.bounding_box(), skip)?;
    Ok(filter_domain(&raw, spec)?.0)
}

/// Walks the Halton sequence of the bounding rectangle until `target` points
/// inside the domain have been collected.
pub fn halton_fill(spec: &DomainSpec, target: usize, skip: u64) -> Result<PointSet> {
    let bbox = spec.bounding_box();
    let mut kept = PointSet::empty(spec.dim())?;
    let mut offset = skip;
    let batch = 1024;
    let max_draws = 1000 * (target + 1);
    while kept.len() < target {
        if offset - skip > max_draws as u64 {
            return Err(Error::Geometry(format!(
                "domain accepted only {} of {max_draws} Halton points",
                kept.len()
            )));
        }
        let raw = halton_in_box(batch, &bbox, offset)?;
        for p in raw.iter().filter(|p| spec.contains(p)) {
            if kept.len() < target {
                kept.push(p);
            }
        }
        offset += batch as u64;
    }
    Ok(kept)
}

const BISECTION_STEPS: usize = 200;

/// Points on the boundary curve of a level-set domain at `4 * per_arc`
/// equally spaced angles, one arc per quadrant, located by radial bisection.
pub fn boundary_sample(spec: &DomainSpec, per_arc: usize) -> Result<PointSet> {
    let DomainSpec::LevelSet { threshold } = spec else {
        return Err(Error::Geometry(
            "boundary sampling needs a level-set domain".into(),
        ));
    };
    let total = 4 * per_arc;
    let mut out = PointSet::empty(2)?;
    for k in 0..total {
        let theta = 2.0 * PI * k as f64 / total as f64;
        let (s, c) = theta.sin_cos();
        let r = radial_root(|r| quartic(r * c, r * s) - threshold, *threshold)?;
        out.push(&[r * c, r * s]);
    }
    Ok(out)
}

/// Root of `g` on `(0, r_hi)` where `g(0) < 0`, bracketing by doubling.
fn radial_root<G: Fn(f64) -> f64>(g: G, scale: f64) -> Result<f64> {
    let tol = 1e-12 * scale.max(1.0);
    let mut lo = 0.0;
    if g(lo) >= 0.0 {
        return Err(Error::Geometry(
            "origin is not interior to the level set".into(),
        ));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Geometry(
                "could not bracket the boundary along a ray".into(),
            ));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if g(mid).abs() <= 1e-10 * scale.max(1.0) {
        Ok(mid)
    } else {
        Err(Error::Geometry(
            "radial bisection did not reach the boundary".into(),
        ))
    }
}

/// Boundary-plus-interior sample of a level-set domain used as a stand-in
/// polynomial mesh for degree `n`: `12 (n + 1)` boundary points and
/// `3 dim(P_2n) + 50` interior Halton points.
pub fn level_set_mesh(spec: &DomainSpec, n: usize, skip: u64) -> Result<PointSet> {
    let boundary = boundary_sample(spec, 3 * (n + 1))?;
    let interior = halton_fill(spec, 3 * space_dimension(2, 2 * n) + 50, skip)?;
    boundary.chain(&interior)
}

/// Control points for operator-norm estimation on a level-set domain: a
/// boundary sample five times denser than the mesh's, then interior Halton
/// points up to `count` in total.
pub fn level_set_control(spec: &DomainSpec, n: usize, count: usize, skip: u64) -> Result<PointSet> {
    let boundary = boundary_sample(spec, 15 * (n + 1))?;
    let interior = halton_fill(spec, count.saturating_sub(boundary.len()), skip)?;
    boundary.chain(&interior)
}
