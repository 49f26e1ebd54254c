//! Simple sets with closed-form Euclidean projections.
//!
//! These are the "easy" sets the solvers project onto after every step; the
//! hard functional constraints are handled separately by the randomized
//! feasibility passes.

use crate::error::CoreError;
use crate::vector::Vector;

/// A closed convex set whose projection is a few flops per coordinate.
#[derive(Debug, Clone)]
pub enum EasySet {
    /// All of R^n: projection is the identity.
    WholeSpace { dim: usize },
    /// Axis-aligned box `{ x : lower <= x <= upper }` (componentwise).
    Box { lower: Vector, upper: Vector },
    /// Euclidean ball of radius `radius` around `center`.
    Ball { center: Vector, radius: f64 },
    /// Constrains coordinates `start..end` to be nonnegative; the rest are free.
    NonnegativeSlice {
        dim: usize,
        start: usize,
        end: usize,
    },
    /// Cartesian product applied blockwise over consecutive coordinate ranges.
    Product(Vec<EasySet>),
}

impl EasySet {
    /// Uniform box `[lo, hi]^dim`.
    pub fn symmetric_box(dim: usize, lo: f64, hi: f64) -> Result<Self, CoreError> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(CoreError::invalid("bounds", format!("[{lo}, {hi}]")));
        }
        Ok(EasySet::Box {
            lower: Vector::new(vec![lo; dim])?,
            upper: Vector::new(vec![hi; dim])?,
        })
    }

    /// Validates internal consistency (bounds ordered, ranges in-bounds).
    pub fn validate(&self) -> Result<(), CoreError> {
        match self {
            EasySet::WholeSpace { .. } => Ok(()),
            EasySet::Box { lower, upper } => {
                if lower.dim() != upper.dim() {
                    return Err(CoreError::DimensionMismatch {
                        expected: lower.dim(),
                        got: upper.dim(),
                    });
                }
                if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                    return Err(CoreError::invalid("Box", "lower bound exceeds upper"));
                }
                Ok(())
            }
            EasySet::Ball { radius, .. } => {
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(CoreError::invalid("radius", radius.to_string()));
                }
                Ok(())
            }
            EasySet::NonnegativeSlice { dim, start, end } => {
                if start > end || *end > *dim {
                    return Err(CoreError::invalid(
                        "NonnegativeSlice",
                        format!("range {start}..{end} out of bounds for dim {dim}"),
                    ));
                }
                Ok(())
            }
            EasySet::Product(parts) => {
                if parts.is_empty() {
                    return Err(CoreError::Empty { context: "Product" });
                }
                parts.iter().try_for_each(|p| p.validate())
            }
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            EasySet::WholeSpace { dim } | EasySet::NonnegativeSlice { dim, .. } => *dim,
            EasySet::Box { lower, .. } => lower.dim(),
            EasySet::Ball { center, .. } => center.dim(),
            EasySet::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Result<Vector, CoreError> {
        if x.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let mut out = x.clone();
        self.project_slice(out.as_mut_slice());
        Ok(out)
    }

    fn project_slice(&self, x: &mut [f64]) {
        match self {
            EasySet::WholeSpace { .. } => {}
            EasySet::Box { lower, upper } => {
                for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper.iter())) {
                    *v = v.clamp(*l, *u);
                }
            }
            EasySet::Ball { center, radius } => {
                let dist = center
                    .iter()
                    .zip(x.iter())
                    .map(|(c, v)| (v - c) * (v - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let t = radius / dist;
                    for (v, c) in x.iter_mut().zip(center.iter()) {
                        *v = c + t * (*v - c);
                    }
                }
            }
            EasySet::NonnegativeSlice { start, end, .. } => {
                for v in &mut x[*start..*end] {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            EasySet::Product(parts) => {
                let mut offset = 0;
                for part in parts {
                    let next = offset + part.dim();
                    part.project_slice(&mut x[offset..next]);
                    offset = next;
                }
            }
        }
    }

    /// Membership test with absolute slack `tol` per defining inequality.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        self.contains_slice(x.as_slice(), tol)
    }

    fn contains_slice(&self, x: &[f64], tol: f64) -> bool {
        match self {
            EasySet::WholeSpace { .. } => true,
            EasySet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            EasySet::Ball { center, radius } => {
                let dist = center
                    .iter()
                    .zip(x.iter())
                    .map(|(c, v)| (v - c) * (v - c))
                    .sum::<f64>()
                    .sqrt();
                dist <= radius + tol
            }
            EasySet::NonnegativeSlice { start, end, .. } => {
                x[*start..*end].iter().all(|v| *v >= -tol)
            }
            EasySet::Product(parts) => {
                let mut offset = 0;
                parts.iter().all(|part| {
                    let next = offset + part.dim();
                    let ok = part.contains_slice(&x[offset..next], tol);
                    offset = next;
                    ok
                })
            }
        }
    }
}
