//! Stepsize selection for the primal-dual baselines: k-fold cross-validated
//! grid search over `(eta_primal, eta_dual)` pairs, scoring held-out
//! misclassification of the averaged classifier.

use randfeas::baselines::{solve_primal_dual, PrimalDualConfig, PrimalDualMode};
use randfeas::problems::dataset::Dataset;
use randfeas::problems::svm::{build_svm, classifier_from_point, misclassification_error};
use randfeas::{RandomSource, SolverError, Vector};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SolverConfig};
use crate::experiment::build_problem;
use crate::HarnessError;

/// `[grid]` section of the experiment TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub eta_primal: Vec<f64>,
    pub eta_dual: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_grid_iterations")]
    pub iterations: usize,
}

fn default_folds() -> usize {
    3
}

fn default_grid_iterations() -> usize {
    200
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |message: String| Err(HarnessError::Config { message });
        if self.eta_primal.is_empty() || self.eta_dual.is_empty() {
            return fail("grid needs nonempty eta_primal and eta_dual lists".into());
        }
        if self.eta_primal.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return fail("grid eta_primal values must be positive".into());
        }
        if self.eta_dual.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return fail("grid eta_dual values must be nonnegative".into());
        }
        if self.folds < 2 {
            return fail("grid needs at least 2 folds".into());
        }
        if self.iterations == 0 {
            return fail("grid iterations must be at least 1".into());
        }
        Ok(())
    }
}

/// One grid cell: `None` mean error marks a pair excluded for divergence.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub eta_primal: f64,
    pub eta_dual: f64,
    pub mean_error: Option<f64>,
    pub diverged_folds: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSearchResult {
    pub best_eta_primal: f64,
    pub best_eta_dual: f64,
    pub best_error: f64,
    pub points: Vec<GridPoint>,
}

/// Splits `0..count` into `folds` disjoint validation index sets covering
/// every row exactly once, after a seeded shuffle. Sizes differ by at most
/// one.
pub fn kfold_indices(
    count: usize,
    folds: usize,
    rng: &mut RandomSource,
) -> Result<Vec<Vec<usize>>, HarnessError> {
    if folds < 2 || count < folds {
        return Err(HarnessError::Config {
            message: format!("cannot split {count} rows into {folds} folds"),
        });
    }
    let mut indices: Vec<usize> = (0..count).collect();
    rng.shuffle(&mut indices)?;
    let base = count / folds;
    let extra = count % folds;
    let mut out = Vec::with_capacity(folds);
    let mut cursor = 0;
    for fold in 0..folds {
        let size = base + usize::from(fold < extra);
        out.push(indices[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(out)
}

fn subset(data: &Dataset, indices: &[usize]) -> Dataset {
    Dataset {
        features: indices.iter().map(|&i| data.features[i].clone()).collect(),
        labels: indices.iter().map(|&i| data.labels[i]).collect(),
    }
}

/// Cross-validated error of one stepsize pair; `Ok(None)` means a fold
/// diverged and the pair is excluded.
fn cv_error(
    train: &Dataset,
    fold_sets: &[Vec<usize>],
    c_reg: f64,
    mode: PrimalDualMode,
    eta_primal: f64,
    eta_dual: f64,
    iterations: usize,
) -> Result<(Option<f64>, usize), HarnessError> {
    let mut errors = Vec::with_capacity(fold_sets.len());
    let mut diverged = 0;
    for (fold, validation) in fold_sets.iter().enumerate() {
        let training: Vec<usize> = fold_sets
            .iter()
            .enumerate()
            .filter(|(other, _)| *other != fold)
            .flat_map(|(_, set)| set.iter().copied())
            .collect();
        let fit = subset(train, &training);
        let held_out = subset(train, validation);
        let problem = build_svm(&fit.features, &fit.labels, c_reg)?;
        let config = PrimalDualConfig {
            mode,
            eta_primal,
            eta_dual,
            iterations,
            log_every: Some(0),
            record_vectors: false,
        };
        let start = Vector::zeros(problem.dim());
        match solve_primal_dual(&problem, &config, &start) {
            Ok(output) => {
                let (weights, bias) =
                    classifier_from_point(&output.final_average, fit.feature_dim());
                errors.push(misclassification_error(
                    &weights,
                    bias,
                    &held_out.features,
                    &held_out.labels,
                )?);
            }
            Err(SolverError::Diverged { .. }) => diverged += 1,
            Err(other) => return Err(other.into()),
        }
    }
    if diverged > 0 {
        return Ok((None, diverged));
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok((Some(mean), 0))
}

/// Runs the cross-validated grid search described by the config's `[grid]`
/// section. Requires an SVM problem and a primal-dual solver kind. Ties are
/// broken toward the smaller `eta_primal`, then the smaller `eta_dual`.
pub fn grid_search(config: &ExperimentConfig) -> Result<GridSearchResult, HarnessError> {
    config.validate()?;
    let grid = config.grid.as_ref().ok_or_else(|| HarnessError::Config {
        message: "grid search needs a [grid] section".into(),
    })?;
    grid.validate()?;
    let mode = match &config.solver {
        SolverConfig::ArrowHurwicz { .. } => PrimalDualMode::ArrowHurwicz,
        SolverConfig::AltGda { .. } => PrimalDualMode::AltGda,
        other => {
            return Err(HarnessError::Config {
                message: format!(
                    "grid search tunes the primal-dual baselines, not {}",
                    other.name()
                ),
            })
        }
    };
    let built = build_problem(config)?;
    let svm = built.svm.as_ref().ok_or_else(|| HarnessError::Config {
        message: "grid search needs an svm problem".into(),
    })?;

    // Dedicated stream so fold membership is independent of the data split.
    let mut fold_rng = RandomSource::new(config.seed, 48);
    let fold_sets = kfold_indices(svm.train.len(), grid.folds, &mut fold_rng)?;

    let mut eta_primal_grid = grid.eta_primal.clone();
    let mut eta_dual_grid = grid.eta_dual.clone();
    eta_primal_grid.sort_by(f64::total_cmp);
    eta_primal_grid.dedup();
    eta_dual_grid.sort_by(f64::total_cmp);
    eta_dual_grid.dedup();

    let mut points = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for &eta_primal in &eta_primal_grid {
        for &eta_dual in &eta_dual_grid {
            let (mean_error, diverged_folds) = cv_error(
                &svm.train,
                &fold_sets,
                svm.c_reg,
                mode,
                eta_primal,
                eta_dual,
                grid.iterations,
            )?;
            if let Some(error) = mean_error {
                // Strict improvement keeps the first (smallest) pair on ties
                // because the loops ascend.
                if best.is_none_or(|(_, _, incumbent)| error < incumbent) {
                    best = Some((eta_primal, eta_dual, error));
                }
            }
            points.push(GridPoint {
                eta_primal,
                eta_dual,
                mean_error,
                diverged_folds,
            });
        }
    }

    match best {
        Some((eta_primal, eta_dual, error)) => Ok(GridSearchResult {
            best_eta_primal: eta_primal,
            best_eta_dual: eta_dual,
            best_error: error,
            points,
        }),
        None => Err(HarnessError::AllReplicasDiverged {
            replicas: points.len(),
            first_iteration: 0,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_cover_every_row_exactly_once() {
        let mut rng = RandomSource::new(5, 0);
        for count in [9, 10, 11, 23] {
            let sets = kfold_indices(count, 3, &mut rng).unwrap();
            assert_eq!(sets.len(), 3);
            let mut seen: Vec<usize> = sets.iter().flatten().copied().collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..count).collect::<Vec<_>>(), "count = {count}");
            let sizes: Vec<usize> = sets.iter().map(Vec::len).collect();
            let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
            assert!(spread <= 1, "unbalanced folds {sizes:?}");
        }
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let mut rng = RandomSource::new(5, 0);
        assert!(kfold_indices(2, 3, &mut rng).is_err());
    }

    fn svm_grid_config(eta_primal: &str, eta_dual: &str) -> ExperimentConfig {
        let text = format!(
            r#"
            seed = 9
            replicas = 1
            iterations = 100

            [problem]
            kind = "svm"
            c_reg = 1.0
            synthetic = {{ count = 60, margin = 0.5, train_fraction = 0.8 }}

            [solver]
            kind = "arrow-hurwicz"
            eta_primal = 0.1
            eta_dual = 0.1

            [grid]
            eta_primal = {eta_primal}
            eta_dual = {eta_dual}
            iterations = 60
        "#
        );
        toml::from_str(&text).unwrap()
    }

    #[test]
    fn converging_pair_beats_diverging_pair() {
        // 1e12 explodes within a few iterations on this data; 0.05 converges.
        let config = svm_grid_config("[0.05, 1e12]", "[0.05]");
        let result = grid_search(&config).unwrap();
        assert_eq!(result.best_eta_primal, 0.05);
        let diverged: Vec<&GridPoint> = result
            .points
            .iter()
            .filter(|p| p.mean_error.is_none())
            .collect();
        assert_eq!(diverged.len(), 1, "the 1e12 pair should be excluded");
        assert!(diverged[0].eta_primal > 1e11);
    }

    #[test]
    fn all_divergent_grid_is_a_structured_error() {
        let config = svm_grid_config("[1e12, 1e13]", "[1e12]");
        let err = grid_search(&config).unwrap_err();
        assert!(matches!(err, HarnessError::AllReplicasDiverged { .. }), "{err}");
    }

    #[test]
    fn ties_prefer_the_smaller_pair() {
        // Separable data: several small stepsizes all reach zero validation
        // error, so the tie-break picks the smallest pair.
        let config = svm_grid_config("[0.2, 0.1]", "[0.2, 0.1]");
        let result = grid_search(&config).unwrap();
        let zero_error_points: Vec<&GridPoint> = result
            .points
            .iter()
            .filter(|p| p.mean_error == Some(result.best_error))
            .collect();
        if zero_error_points.len() > 1 {
            assert_eq!(result.best_eta_primal, 0.1);
            assert_eq!(result.best_eta_dual, 0.1);
        }
    }
}
