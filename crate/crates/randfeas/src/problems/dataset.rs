//! CSV loading and preprocessing for classification datasets.
//!
//! The loader reads a delimited file into feature vectors plus `+1/-1`
//! labels, splits rows into train/test with a seeded shuffle, and
//! standardizes features using statistics computed on the training split
//! only.

use crate::error::CoreError;
use crate::rng::RandomSource;
use crate::vector::Vector;
use std::path::Path;

/// Which column carries the class label.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    /// Header name; requires `has_header`.
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label: LabelColumn,
    /// Raw label value mapped to `+1`; every other value becomes `-1`.
    pub positive_label: String,
    pub has_header: bool,
}

/// A labeled dataset with parallel feature and label arrays.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<Vector>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vector::dim)
    }
}

/// Errors raised while reading or preparing datasets.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("csv read failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("label column {name:?} not found in header")]
    MissingLabelColumn { name: String },
    #[error("label column index {index} out of range for {width} columns")]
    LabelIndexOutOfRange { index: usize, width: usize },
    #[error("line {line}: field {field:?} is not a number")]
    BadNumber { line: u64, field: String },
    #[error("line {line}: expected {expected} columns, got {got}")]
    RaggedRow { line: u64, expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has only one class after labeling")]
    SingleClass,
    #[error("split fraction {fraction} leaves an empty side for {rows} rows")]
    DegenerateSplit { fraction: f64, rows: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Reads a CSV into features and `+1/-1` labels. All non-label columns must
/// parse as numbers; rows must all have the same width.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let label_index = match &options.label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !options.has_header {
                return Err(DatasetError::MissingLabelColumn { name: name.clone() });
            }
            reader
                .headers()?
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DatasetError::MissingLabelColumn { name: name.clone() })?
        }
    };

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DatasetError::RaggedRow {
                line,
                expected,
                got: record.len(),
            });
        }
        if label_index >= record.len() {
            return Err(DatasetError::LabelIndexOutOfRange {
                index: label_index,
                width: record.len(),
            });
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate() {
            if col == label_index {
                labels.push(if field == options.positive_label {
                    1.0
                } else {
                    -1.0
                });
            } else {
                let value: f64 = field.parse().map_err(|_| DatasetError::BadNumber {
                    line,
                    field: field.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(DatasetError::BadNumber {
                        line,
                        field: field.to_string(),
                    });
                }
                row.push(value);
            }
        }
        features.push(Vector::new(row)?);
    }
    if labels.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    if labels.iter().all(|y| *y == 1.0) || labels.iter().all(|y| *y == -1.0) {
        return Err(DatasetError::SingleClass);
    }
    Ok(Dataset { features, labels })
}

/// Shuffles row indices with the given source and splits off
/// `round(train_fraction * len)` rows for training. Both sides must end up
/// nonempty.
pub fn split(
    data: &Dataset,
    train_fraction: f64,
    rng: &mut RandomSource,
) -> Result<(Dataset, Dataset), DatasetError> {
    let rows = data.len();
    if rows == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    let train_rows = (train_fraction * rows as f64).round() as usize;
    if !(train_fraction.is_finite() && train_fraction > 0.0 && train_fraction < 1.0)
        || train_rows == 0
        || train_rows >= rows
    {
        return Err(DatasetError::DegenerateSplit {
            fraction: train_fraction,
            rows,
        });
    }
    let mut order: Vec<usize> = (0..rows).collect();
    rng.shuffle(&mut order)?;
    let take = |indices: &[usize]| Dataset {
        features: indices.iter().map(|i| data.features[*i].clone()).collect(),
        labels: indices.iter().map(|i| data.labels[*i]).collect(),
    };
    Ok((take(&order[..train_rows]), take(&order[train_rows..])))
}

/// Per-feature affine transform fitted on a training split.
#[derive(Debug, Clone)]
pub struct Standardizer {
    means: Vector,
    /// Population standard deviations, with constant columns kept at one so
    /// the transform never divides by zero.
    scales: Vector,
}

impl Standardizer {
    /// Fits means and standard deviations on the given rows.
    pub fn fit(data: &Dataset) -> Result<Self, DatasetError> {
        if data.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let dim = data.feature_dim();
        let count = data.len() as f64;
        let mut means = vec![0.0; dim];
        for z in &data.features {
            for (m, v) in means.iter_mut().zip(z.iter()) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= count;
        }
        let mut vars = vec![0.0; dim];
        for z in &data.features {
            for ((s, v), m) in vars.iter_mut().zip(z.iter()).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let scales: Vec<f64> = vars
            .iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            means: Vector::new(means)?,
            scales: Vector::new(scales)?,
        })
    }

    /// Applies `(z - mean) / scale` componentwise.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset, DatasetError> {
        let dim = self.means.dim();
        let features = data
            .features
            .iter()
            .map(|z| {
                if z.dim() != dim {
                    return Err(DatasetError::Core(CoreError::DimensionMismatch {
                        expected: dim,
                        got: z.dim(),
                    }));
                }
                Vector::from_fn(dim, |i| (z[i] - self.means[i]) / self.scales[i])
                    .map_err(DatasetError::Core)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            features,
            labels: data.labels.clone(),
        })
    }
}

/// Loads, splits, and (optionally) standardizes a CSV in one call; the
/// standardizer is fitted on the training rows only.
pub fn load_split_standardize(
    path: &Path,
    options: &CsvOptions,
    train_fraction: f64,
    standardize: bool,
    rng: &mut RandomSource,
) -> Result<(Dataset, Dataset), DatasetError> {
    let data = load_csv(path, options)?;
    let (train, test) = split(&data, train_fraction, rng)?;
    if standardize {
        let scaler = Standardizer::fit(&train)?;
        Ok((scaler.transform(&train)?, scaler.transform(&test)?))
    } else {
        Ok((train, test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        let unique = format!(
            "randfeas-dataset-{}-{}.csv",
            std::process::id(),
            contents.len()
        );
        path.push(unique);
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_named_label_column() {
        let path = write_temp("a,b,cls\n1.0,2.0,yes\n3.0,4.0,no\n");
        let data = load_csv(
            &path,
            &CsvOptions {
                label: LabelColumn::Name("cls".into()),
                positive_label: "yes".into(),
                has_header: true,
            },
        )
        .unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(data.len(), 2);
        assert_eq!(data.labels, vec![1.0, -1.0]);
        assert_eq!(data.features[0].as_slice(), &[1.0, 2.0]);
        assert_eq!(data.features[1].as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn loads_indexed_label_without_header() {
        let path = write_temp("1,5.5\n-1,6.5\n1,7.5\n");
        let data = load_csv(
            &path,
            &CsvOptions {
                label: LabelColumn::Index(0),
                positive_label: "1".into(),
                has_header: false,
            },
        )
        .unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(data.labels, vec![1.0, -1.0, 1.0]);
        assert_eq!(data.feature_dim(), 1);
    }

    #[test]
    fn reports_bad_number_with_line() {
        let path = write_temp("1,5.5\n-1,oops\n");
        let err = load_csv(
            &path,
            &CsvOptions {
                label: LabelColumn::Index(0),
                positive_label: "1".into(),
                has_header: false,
            },
        )
        .unwrap_err();
        std::fs::remove_file(&path).ok();
        match err {
            DatasetError::BadNumber { line, field } => {
                assert_eq!(line, 2);
                assert_eq!(field, "oops");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_single_class() {
        let path = write_temp("1,5.5\n1,6.5\n");
        let err = load_csv(
            &path,
            &CsvOptions {
                label: LabelColumn::Index(0),
                positive_label: "1".into(),
                has_header: false,
            },
        )
        .unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, DatasetError::SingleClass));
    }

    #[test]
    fn rejects_ragged_rows() {
        let path = write_temp("1,5.5\n-1,6.5,7.5\n");
        let err = load_csv(
            &path,
            &CsvOptions {
                label: LabelColumn::Index(0),
                positive_label: "1".into(),
                has_header: false,
            },
        )
        .unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, DatasetError::RaggedRow { line: 2, .. }));
    }

    fn toy_dataset(rows: usize) -> Dataset {
        Dataset {
            features: (0..rows)
                .map(|i| Vector::new(vec![i as f64, 10.0 * i as f64]).unwrap())
                .collect(),
            labels: (0..rows).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        }
    }

    #[test]
    fn split_sizes_round_and_are_seeded() {
        let data = toy_dataset(625);
        let mut rng = RandomSource::new(3, 0);
        let (train, test) = split(&data, 0.8, &mut rng).unwrap();
        assert_eq!(train.len(), 500);
        assert_eq!(test.len(), 125);
        let mut rng2 = RandomSource::new(3, 0);
        let (train2, _) = split(&data, 0.8, &mut rng2).unwrap();
        assert_eq!(train.labels, train2.labels);
        // Different seed gives a different permutation with high probability.
        let mut rng3 = RandomSource::new(4, 0);
        let (train3, _) = split(&data, 0.8, &mut rng3).unwrap();
        assert_ne!(
            train
                .features
                .iter()
                .map(|z| z[0] as i64)
                .collect::<Vec<_>>(),
            train3
                .features
                .iter()
                .map(|z| z[0] as i64)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn split_preserves_rows_exactly() {
        let data = toy_dataset(10);
        let mut rng = RandomSource::new(9, 0);
        let (train, test) = split(&data, 0.5, &mut rng).unwrap();
        let mut seen: Vec<i64> = train
            .features
            .iter()
            .chain(test.features.iter())
            .map(|z| z[0] as i64)
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_split_is_rejected() {
        let data = toy_dataset(3);
        let mut rng = RandomSource::new(1, 0);
        assert!(matches!(
            split(&data, 0.01, &mut rng),
            Err(DatasetError::DegenerateSplit { .. })
        ));
        assert!(matches!(
            split(&data, 0.99, &mut rng),
            Err(DatasetError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn standardizer_zeroes_train_moments_and_keeps_constant_columns() {
        let data = Dataset {
            features: vec![
                Vector::new(vec![1.0, 7.0]).unwrap(),
                Vector::new(vec![3.0, 7.0]).unwrap(),
                Vector::new(vec![5.0, 7.0]).unwrap(),
            ],
            labels: vec![1.0, -1.0, 1.0],
        };
        let scaler = Standardizer::fit(&data).unwrap();
        let out = scaler.transform(&data).unwrap();
        let mean0: f64 = out.features.iter().map(|z| z[0]).sum::<f64>() / 3.0;
        let var0: f64 = out.features.iter().map(|z| z[0] * z[0]).sum::<f64>() / 3.0;
        assert!(mean0.abs() < 1e-12);
        assert!((var0 - 1.0).abs() < 1e-12);
        // Constant column: centered but left unscaled.
        for z in &out.features {
            assert_eq!(z[1], 0.0);
        }
    }
}
