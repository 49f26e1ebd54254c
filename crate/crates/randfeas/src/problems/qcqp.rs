//! Synthetic quadratically constrained quadratic programs over a box.
//!
//! The objective is `x . A x + b . x` and each of the `m` constraints is
//! `x . C_i x + u_i . x - e_i <= 0`, with every matrix drawn with a
//! prescribed eigenvalue range (orthogonal basis from the QR factorization of
//! a Gaussian matrix, eigenvalues uniform in the range). Three flavors are
//! generated:
//!
//! * [`QcqpCase::KnownOptimum`]: objective eigenvalues in `[1, 10]`; the
//!   offsets `e_i` are rigged so the unconstrained minimizer is strictly
//!   feasible, making the optimum and its value known exactly.
//! * [`QcqpCase::StronglyConvex`]: same curvature, random offsets, optimum
//!   on the constraint boundary.
//! * [`QcqpCase::Convex`]: objective eigenvalues in `[0, 10]`.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::problem::{ConstrainedProblem, ConstraintFamily, Objective};
use crate::problems::ProblemError;
use crate::rng::RandomSource;
use crate::sets::EasySet;
use crate::vector::Vector;

/// Which of the three generation recipes to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcqpCase {
    /// Strongly convex with a planted, strictly feasible optimum.
    KnownOptimum,
    /// Strongly convex; the optimum lies on the constraint boundary.
    StronglyConvex,
    /// Merely convex (objective eigenvalue range starts at 0).
    Convex,
}

/// The planted solution of a [`QcqpCase::KnownOptimum`] instance.
#[derive(Debug, Clone)]
pub struct PlantedOptimum {
    pub point: Vector,
    pub value: f64,
}

/// A generated QCQP instance. Matrices are stored as dense rows; all are
/// symmetric by construction.
pub struct QcqpInstance {
    /// Objective matrix `A` (rows).
    pub objective_quad: Vec<Vector>,
    /// Objective linear term `b`.
    pub objective_linear: Vector,
    /// Constraint matrices `C_i` (rows each).
    pub constraint_quads: Vec<Vec<Vector>>,
    /// Constraint linear terms `u_i`.
    pub constraint_linears: Vec<Vector>,
    /// Constraint offsets `e_i`.
    pub constraint_offsets: Vec<f64>,
    /// The box `[-10, 10]^n`.
    pub easy_set: EasySet,
    /// Planted optimum, present only for [`QcqpCase::KnownOptimum`].
    pub planted: Option<PlantedOptimum>,
    /// Largest eigenvalue of the objective Hessian `A + A^T`.
    pub smoothness: f64,
    /// Smallest eigenvalue of the objective Hessian (may be ~0 for
    /// [`QcqpCase::Convex`]).
    pub hessian_min_eigenvalue: f64,
}

/// Half-width of the box domain.
pub const BOX_HALF_WIDTH: f64 = 10.0;

const GENERATION_ATTEMPTS: usize = 100;

/// Draws a symmetric matrix with eigenvalues uniform in `[eig_lo, eig_hi]`
/// and a uniformly random orthogonal eigenbasis; returned as dense rows.
pub fn generate_eig_controlled_matrix(
    dim: usize,
    eig_lo: f64,
    eig_hi: f64,
    rng: &mut RandomSource,
) -> Result<Vec<Vector>, ProblemError> {
    if dim == 0 {
        return Err(CoreError::invalid("dim", "matrix dimension must be positive").into());
    }
    if !(eig_lo.is_finite() && eig_hi.is_finite()) || eig_lo > eig_hi {
        return Err(CoreError::invalid("eig range", format!("[{eig_lo}, {eig_hi}]")).into());
    }
    // Entries are drawn in nalgebra's column-major storage order; the order
    // is fixed so generation is reproducible from the stream alone.
    let gaussian = DMatrix::from_fn(dim, dim, |_, _| rng.standard_normal());
    let q = gaussian.qr().q();
    let eigs = DVector::from_fn(dim, |_, _| rng.uniform_range(eig_lo, eig_hi));
    let mut matrix = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    // Kill the last bits of asymmetry from the floating-point products.
    let transposed = matrix.transpose();
    matrix = (matrix + transposed) * 0.5;
    Ok(matrix_rows(&matrix))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vector> {
    (0..m.nrows())
        .map(|i| {
            Vector::new(m.row(i).iter().copied().collect()).expect("finite matrix entries")
        })
        .collect()
}

fn rows_to_matrix(rows: &[Vector]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn normal_vector(dim: usize, rng: &mut RandomSource) -> Vector {
    Vector::from_fn(dim, |_| rng.standard_normal()).expect("finite normal draws")
}

/// Generates an instance with `n` variables and `m` constraints.
pub fn generate_qcqp(
    n: usize,
    m: usize,
    case: QcqpCase,
    rng: &mut RandomSource,
) -> Result<QcqpInstance, ProblemError> {
    if n == 0 || m == 0 {
        return Err(CoreError::invalid("shape", format!("n = {n}, m = {m}")).into());
    }
    let objective_eig_lo = match case {
        QcqpCase::Convex => 0.0,
        _ => 1.0,
    };

    // Draw the objective; for the known-optimum case, retry with fresh draws
    // until the unconstrained minimizer falls inside the box.
    let mut attempts = 0;
    let (quad_rows, linear, planted_point) = loop {
        attempts += 1;
        let rows = generate_eig_controlled_matrix(n, objective_eig_lo, 10.0, rng)?;
        let b = normal_vector(n, rng);
        if case != QcqpCase::KnownOptimum {
            break (rows, b, None);
        }
        // Solve (A + A^T) x = -b; the Hessian is positive definite here.
        let hessian = rows_to_matrix(&rows) * 2.0;
        let rhs = DVector::from_iterator(n, b.iter().map(|v| -v));
        let solution = hessian
            .cholesky()
            .ok_or_else(|| CoreError::invalid("hessian", "not positive definite"))?
            .solve(&rhs);
        let inside = solution.iter().all(|v| v.abs() <= BOX_HALF_WIDTH);
        if inside {
            let point = Vector::new(solution.iter().copied().collect())?;
            break (rows, b, Some(point));
        }
        if attempts >= GENERATION_ATTEMPTS {
            return Err(ProblemError::RetriesExhausted { attempts });
        }
    };

    let mut constraint_quads = Vec::with_capacity(m);
    let mut constraint_linears = Vec::with_capacity(m);
    let mut constraint_offsets = Vec::with_capacity(m);
    for _ in 0..m {
        let c_rows = generate_eig_controlled_matrix(n, 0.0, 2.0, rng)?;
        let u = normal_vector(n, rng);
        let slack = rng.uniform_range(1.0, 2.0);
        let e = match &planted_point {
            // e_i = x*.C_i x* + u_i.x* + slack keeps the planted point
            // strictly feasible with slack in [1, 2].
            Some(x) => quad_form(&c_rows, x) + u.dot(x) + slack,
            None => slack,
        };
        constraint_quads.push(c_rows);
        constraint_linears.push(u);
        constraint_offsets.push(e);
    }

    let hessian = rows_to_matrix(&quad_rows) * 2.0;
    let eigs = hessian.symmetric_eigen().eigenvalues;
    let smoothness = eigs.iter().cloned().fold(f64::MIN, f64::max);
    let hessian_min_eigenvalue = eigs.iter().cloned().fold(f64::MAX, f64::min);

    let planted = planted_point.map(|point| {
        let value = quad_form(&quad_rows, &point) + linear.dot(&point);
        PlantedOptimum { point, value }
    });

    Ok(QcqpInstance {
        objective_quad: quad_rows,
        objective_linear: linear,
        constraint_quads,
        constraint_linears,
        constraint_offsets,
        easy_set: EasySet::symmetric_box(n, -BOX_HALF_WIDTH, BOX_HALF_WIDTH)?,
        planted,
        smoothness,
        hessian_min_eigenvalue,
    })
}

/// `x . M x` for a symmetric matrix given as rows.
fn quad_form(rows: &[Vector], x: &Vector) -> f64 {
    rows.iter()
        .zip(x.iter())
        .map(|(row, xi)| xi * row.dot(x))
        .sum()
}

/// Objective oracle for a QCQP instance.
pub struct QcqpObjective {
    /// Hessian `A + A^T` rows.
    hessian: Vec<Vector>,
    linear: Vector,
    smoothness: f64,
    strong_convexity: Option<f64>,
}

impl Objective for QcqpObjective {
    fn dim(&self) -> usize {
        self.linear.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        // x.Ax = 0.5 x.(A + A^T)x.
        0.5 * quad_form(&self.hessian, x) + self.linear.dot(x)
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::from_fn(self.dim(), |i| self.hessian[i].dot(x))
            .expect("finite quadratic gradient");
        g.axpy(1.0, &self.linear);
        g
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }
}

/// Constraint oracle for a QCQP instance.
pub struct QcqpConstraints {
    /// Per-constraint Hessians `C_i + C_i^T`, as rows.
    hessians: Vec<Vec<Vector>>,
    linears: Vec<Vector>,
    offsets: Vec<f64>,
    dim: usize,
}

impl ConstraintFamily for QcqpConstraints {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.offsets.len()
    }

    fn value(&self, i: usize, x: &Vector) -> f64 {
        0.5 * quad_form(&self.hessians[i], x) + self.linears[i].dot(x) - self.offsets[i]
    }

    fn subgradient(&self, i: usize, x: &Vector) -> Vector {
        let mut g = Vector::from_fn(self.dim, |r| self.hessians[i][r].dot(x))
            .expect("finite constraint gradient");
        g.axpy(1.0, &self.linears[i]);
        g
    }
}

/// Wraps an instance in first-order oracles and its box, ready for a solver.
pub fn qcqp_problem(instance: &QcqpInstance) -> ConstrainedProblem {
    let n = instance.objective_linear.dim();
    let scale_rows = |rows: &[Vector]| -> Vec<Vector> {
        rows.iter().map(|r| r.scale(2.0)).collect()
    };
    // Strong convexity is only advertised when the smallest Hessian
    // eigenvalue is safely positive.
    let mu = (instance.hessian_min_eigenvalue > 1e-9).then_some(instance.hessian_min_eigenvalue);
    ConstrainedProblem {
        objective: Box::new(QcqpObjective {
            hessian: scale_rows(&instance.objective_quad),
            linear: instance.objective_linear.clone(),
            smoothness: instance.smoothness,
            strong_convexity: mu,
        }),
        constraints: Box::new(QcqpConstraints {
            hessians: instance
                .constraint_quads
                .iter()
                .map(|rows| scale_rows(rows))
                .collect(),
            linears: instance.constraint_linears.clone(),
            offsets: instance.constraint_offsets.clone(),
            dim: n,
        }),
        easy_set: instance.easy_set.clone(),
    }
}
