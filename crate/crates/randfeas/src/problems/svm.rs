//! Soft-margin linear SVM posed as a constrained program.
//!
//! Variables are stacked as `x = [w (d), bias (1), slack (m)]`. The
//! objective is `0.5 |w|^2 + c_reg * sum(slack)` and each data point `(z_i,
//! y_i)` contributes the margin constraint
//! `1 - slack_i - y_i (w . z_i + bias) <= 0`. The easy set leaves `(w, bias)`
//! free and keeps the slacks nonnegative, so every constraint is affine and
//! cheap to sample.

use crate::error::CoreError;
use crate::problem::{ConstrainedProblem, ConstraintFamily, Objective};
use crate::problems::ProblemError;
use crate::rng::RandomSource;
use crate::sets::EasySet;
use crate::vector::Vector;

/// Objective `0.5 |w|^2 + c_reg * sum(slack)`.
struct SvmObjective {
    feature_dim: usize,
    points: usize,
    c_reg: f64,
}

impl SvmObjective {
    fn dim(&self) -> usize {
        self.feature_dim + 1 + self.points
    }
}

impl Objective for SvmObjective {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        let w_sq: f64 = x.as_slice()[..self.feature_dim]
            .iter()
            .map(|v| v * v)
            .sum();
        let slack_sum: f64 = x.as_slice()[self.feature_dim + 1..].iter().sum();
        0.5 * w_sq + self.c_reg * slack_sum
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i| {
            if i < self.feature_dim {
                x[i]
            } else if i == self.feature_dim {
                0.0
            } else {
                self.c_reg
            }
        })
        .expect("finite svm gradient")
    }

    fn smoothness(&self) -> Option<f64> {
        // The Hessian is the identity on the w block and zero elsewhere.
        Some(1.0)
    }
}

/// Margin constraints `1 - slack_i - y_i (w . z_i + bias) <= 0`.
struct SvmConstraints {
    features: Vec<Vector>,
    labels: Vec<f64>,
    feature_dim: usize,
}

impl SvmConstraints {
    fn dim(&self) -> usize {
        self.feature_dim + 1 + self.labels.len()
    }
}

impl ConstraintFamily for SvmConstraints {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn value(&self, i: usize, x: &Vector) -> f64 {
        let (w, rest) = x.as_slice().split_at(self.feature_dim);
        let bias = rest[0];
        let slack = rest[1 + i];
        let score: f64 = w
            .iter()
            .zip(self.features[i].iter())
            .map(|(a, b)| a * b)
            .sum();
        1.0 - slack - self.labels[i] * (score + bias)
    }

    fn subgradient(&self, i: usize, _x: &Vector) -> Vector {
        let y = self.labels[i];
        Vector::from_fn(self.dim(), |r| {
            if r < self.feature_dim {
                -y * self.features[i][r]
            } else if r == self.feature_dim {
                -y
            } else if r == self.feature_dim + 1 + i {
                -1.0
            } else {
                0.0
            }
        })
        .expect("finite svm constraint gradient")
    }
}

/// Builds the constrained program for a labeled dataset. Labels must be `+1`
/// or `-1` and all feature vectors must share one dimension.
pub fn build_svm(
    features: &[Vector],
    labels: &[f64],
    c_reg: f64,
) -> Result<ConstrainedProblem, ProblemError> {
    if features.is_empty() {
        return Err(CoreError::Empty {
            context: "build_svm features",
        }
        .into());
    }
    if features.len() != labels.len() {
        return Err(CoreError::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        }
        .into());
    }
    if !(c_reg.is_finite() && c_reg > 0.0) {
        return Err(CoreError::invalid("c_reg", c_reg.to_string()).into());
    }
    if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
        return Err(CoreError::invalid("labels", "must be +1 or -1").into());
    }
    let feature_dim = features[0].dim();
    if features.iter().any(|z| z.dim() != feature_dim) {
        return Err(CoreError::DimensionMismatch {
            expected: feature_dim,
            got: features.iter().map(Vector::dim).find(|d| *d != feature_dim).unwrap_or(0),
        }
        .into());
    }
    let points = labels.len();
    let easy_set = EasySet::Product(vec![
        EasySet::WholeSpace {
            dim: feature_dim + 1,
        },
        EasySet::NonnegativeSlice {
            dim: points,
            start: 0,
            end: points,
        },
    ]);
    Ok(ConstrainedProblem {
        objective: Box::new(SvmObjective {
            feature_dim,
            points,
            c_reg,
        }),
        constraints: Box::new(SvmConstraints {
            features: features.to_vec(),
            labels: labels.to_vec(),
            feature_dim,
        }),
        easy_set,
    })
}

/// Splits a stacked SVM point into the classifier `(w, bias)`.
pub fn classifier_from_point(x: &Vector, feature_dim: usize) -> (Vector, f64) {
    let w = Vector::new(x.as_slice()[..feature_dim].to_vec()).expect("finite weights");
    (w, x[feature_dim])
}

/// Fraction of points misclassified by `sign(w . z + bias)`, with
/// `sign(0) = +1`.
pub fn misclassification_error(
    weights: &Vector,
    bias: f64,
    features: &[Vector],
    labels: &[f64],
) -> Result<f64, CoreError> {
    if features.is_empty() {
        return Err(CoreError::Empty {
            context: "misclassification_error",
        });
    }
    if features.len() != labels.len() {
        return Err(CoreError::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let mistakes = features
        .iter()
        .zip(labels)
        .filter(|(z, y)| {
            let score = weights.dot(z) + bias;
            let predicted = if score >= 0.0 { 1.0 } else { -1.0 };
            predicted != **y
        })
        .count();
    Ok(mistakes as f64 / labels.len() as f64)
}

/// Generates a linearly separable planar dataset: a random separating line is
/// drawn, points are sampled uniformly in `[-3, 3]^2` with random labels, and
/// each point is pushed to its label's side so the gap between the classes is
/// at least `margin`.
pub fn generate_separable_2d(
    count: usize,
    margin: f64,
    rng: &mut RandomSource,
) -> Result<(Vec<Vector>, Vec<f64>), ProblemError> {
    if count == 0 {
        return Err(CoreError::Empty {
            context: "generate_separable_2d",
        }
        .into());
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(CoreError::invalid("margin", margin.to_string()).into());
    }
    let angle = rng.uniform_range(0.0, 2.0 * std::f64::consts::PI);
    let normal = Vector::new(vec![angle.cos(), angle.sin()])?;
    let offset = rng.uniform_range(-1.0, 1.0);
    let half = margin / 2.0;
    let mut features = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let y = if rng.uniform_index(2)? == 0 { 1.0 } else { -1.0 };
        let mut z = Vector::new(vec![
            rng.uniform_range(-3.0, 3.0),
            rng.uniform_range(-3.0, 3.0),
        ])?;
        let signed = y * (normal.dot(&z) - offset);
        if signed < half {
            // Slide along the normal until the point clears the half-margin.
            z = z.add_scaled((half - signed) * y, &normal);
        }
        features.push(z);
        labels.push(y);
    }
    Ok((features, labels))
}
