//! Problem interfaces: objective oracles and functional constraint families.

use crate::sets::EasySet;
use crate::vector::Vector;

/// First-order oracle for a convex objective.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    /// A subgradient at `x`; the gradient whenever the objective is smooth.
    fn subgradient(&self, x: &Vector) -> Vector;

    /// Lipschitz constant of the gradient, when known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Strong-convexity modulus, when known and positive.
    fn strong_convexity(&self) -> Option<f64> {
        None
    }
}

/// Finite family of convex constraint functions `g_i(x) <= 0`, addressed by
/// index so feasibility passes can sample single members cheaply.
pub trait ConstraintFamily: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of constraints in the family.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value of constraint `i` at `x` (feasible iff `<= 0`).
    fn value(&self, i: usize, x: &Vector) -> f64;

    /// A subgradient of constraint `i` at `x`.
    fn subgradient(&self, i: usize, x: &Vector) -> Vector;
}

/// Total constraint violation `sum_i max(g_i(x), 0)`.
pub fn infeasibility(constraints: &dyn ConstraintFamily, x: &Vector) -> f64 {
    (0..constraints.len())
        .map(|i| constraints.value(i, x).max(0.0))
        .sum()
}

/// Largest single violation `max_i g_i(x)^+`; 0 when feasible.
pub fn max_violation(constraints: &dyn ConstraintFamily, x: &Vector) -> f64 {
    (0..constraints.len())
        .map(|i| constraints.value(i, x).max(0.0))
        .fold(0.0, f64::max)
}

/// A convex program `min f(x) s.t. g_i(x) <= 0 for all i, x in Y` where `Y`
/// has an easy projection and the `g_i` are accessed by sampling.
pub struct ConstrainedProblem {
    pub objective: Box<dyn Objective>,
    pub constraints: Box<dyn ConstraintFamily>,
    pub easy_set: EasySet,
}

impl ConstrainedProblem {
    pub fn dim(&self) -> usize {
        self.easy_set.dim()
    }
}

/// Affine constraints `a_i . x - c_i <= 0`, used widely in tests.
pub struct AffineConstraints {
    normals: Vec<Vector>,
    offsets: Vec<f64>,
    dim: usize,
}

impl AffineConstraints {
    pub fn new(normals: Vec<Vector>, offsets: Vec<f64>) -> Self {
        assert_eq!(normals.len(), offsets.len());
        let dim = normals.first().map_or(0, Vector::dim);
        assert!(normals.iter().all(|n| n.dim() == dim));
        AffineConstraints {
            normals,
            offsets,
            dim,
        }
    }
}

impl ConstraintFamily for AffineConstraints {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.normals.len()
    }

    fn value(&self, i: usize, x: &Vector) -> f64 {
        self.normals[i].dot(x) - self.offsets[i]
    }

    fn subgradient(&self, i: usize, _x: &Vector) -> Vector {
        self.normals[i].clone()
    }
}

/// Smooth quadratic `0.5 x.Hx + b.x` with explicit symmetric `H`, for tests.
pub struct QuadraticObjective {
    hessian: Vec<Vector>,
    linear: Vector,
}

impl QuadraticObjective {
    pub fn new(hessian: Vec<Vector>, linear: Vector) -> Self {
        assert!(hessian.iter().all(|row| row.dim() == linear.dim()));
        assert_eq!(hessian.len(), linear.dim());
        QuadraticObjective { hessian, linear }
    }

    fn hx(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.linear.dim(), |i| self.hessian[i].dot(x))
            .expect("finite quadratic form")
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.linear.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.hx(x).dot(x) + self.linear.dot(x)
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        self.hx(x).add_scaled(1.0, &self.linear)
    }
}
