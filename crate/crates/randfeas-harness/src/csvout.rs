//! Deterministic CSV emission. Floats are printed with 17 significant
//! digits (`{:.16e}`), which round-trips every `f64` exactly, so repeated
//! runs produce byte-identical files.

use std::path::Path;

use crate::experiment::{AggregateRow, ReplicaRow};
use crate::HarnessError;

pub const AGGREGATE_HEADER: &str = "k,mean_gap,std_gap,mean_infeas,std_infeas,mean_step,n_k";
pub const REPLICA_HEADER: &str = "k,gap,infeas,step,n_k";

/// 17-significant-digit scientific notation; round-trip exact for `f64`.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Renders the aggregate trace; one row per logged iteration.
pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.k,
            format_float(row.mean_gap),
            format_float(row.std_gap),
            format_float(row.mean_infeas),
            format_float(row.std_infeas),
            format_float(row.mean_step),
            format_float(row.n_k),
        ));
    }
    out
}

/// Renders one replica's logged rows.
pub fn replica_csv(rows: &[ReplicaRow]) -> String {
    let mut out = String::from(REPLICA_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k,
            format_float(row.gap),
            format_float(row.infeas),
            format_float(row.step),
            format_float(row.n_k),
        ));
    }
    out
}

/// Writes text to `path`, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| HarnessError::io(format!("creating {}", parent.display()), e))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

fn parse_float(field: &str, line: usize, path: &Path) -> Result<f64, HarnessError> {
    field.parse().map_err(|_| HarnessError::Config {
        message: format!("{}:{line}: bad float {field:?}", path.display()),
    })
}

/// Reads an aggregate CSV back (for plotting and round-trip checks).
pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == AGGREGATE_HEADER => {}
        other => {
            return Err(HarnessError::Config {
                message: format!(
                    "{}: expected header {AGGREGATE_HEADER:?}, got {:?}",
                    path.display(),
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    lines
        .map(|(index, line)| {
            let line_no = index + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(HarnessError::Config {
                    message: format!(
                        "{}:{line_no}: expected 7 fields, got {}",
                        path.display(),
                        fields.len()
                    ),
                });
            }
            Ok(AggregateRow {
                k: fields[0].parse().map_err(|_| HarnessError::Config {
                    message: format!("{}:{line_no}: bad index {:?}", path.display(), fields[0]),
                })?,
                mean_gap: parse_float(fields[1], line_no, path)?,
                std_gap: parse_float(fields[2], line_no, path)?,
                mean_infeas: parse_float(fields[3], line_no, path)?,
                std_infeas: parse_float(fields[4], line_no, path)?,
                mean_step: parse_float(fields[5], line_no, path)?,
                n_k: parse_float(fields[6], line_no, path)?,
            })
        })
        .collect()
}

/// Reads a per-replica CSV back.
pub fn read_replica_csv(path: &Path) -> Result<Vec<ReplicaRow>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == REPLICA_HEADER => {}
        other => {
            return Err(HarnessError::Config {
                message: format!(
                    "{}: expected header {REPLICA_HEADER:?}, got {:?}",
                    path.display(),
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    lines
        .map(|(index, line)| {
            let line_no = index + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(HarnessError::Config {
                    message: format!(
                        "{}:{line_no}: expected 5 fields, got {}",
                        path.display(),
                        fields.len()
                    ),
                });
            }
            Ok(ReplicaRow {
                k: fields[0].parse().map_err(|_| HarnessError::Config {
                    message: format!("{}:{line_no}: bad index {:?}", path.display(), fields[0]),
                })?,
                gap: parse_float(fields[1], line_no, path)?,
                infeas: parse_float(fields[2], line_no, path)?,
                step: parse_float(fields[3], line_no, path)?,
                n_k: parse_float(fields[4], line_no, path)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<AggregateRow> {
        vec![
            AggregateRow {
                k: 10,
                mean_gap: 0.125,
                std_gap: 1.0 / 3.0,
                mean_infeas: 2e-9,
                std_infeas: 0.0,
                mean_step: 0.01,
                n_k: 4.0,
            },
            AggregateRow {
                k: 20,
                mean_gap: f64::MIN_POSITIVE,
                std_gap: 1e300,
                mean_infeas: -0.0,
                std_infeas: 7.1,
                mean_step: std::f64::consts::PI,
                n_k: 11.5,
            },
        ]
    }

    #[test]
    fn floats_round_trip_exactly() {
        for value in [1.0 / 3.0, f64::MIN_POSITIVE, 1e300, -1234.5678e-9] {
            let printed = format_float(value);
            assert_eq!(printed.parse::<f64>().unwrap(), value, "{printed}");
        }
    }

    #[test]
    fn aggregate_csv_round_trips() {
        let rows = sample_rows();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_text(&path, &aggregate_csv(&rows)).unwrap();
        let back = read_aggregate_csv(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn rendering_is_deterministic() {
        let rows = sample_rows();
        assert_eq!(aggregate_csv(&rows), aggregate_csv(&rows));
    }

    #[test]
    fn header_mismatch_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        write_text(&path, "wrong,header\n1,2\n").unwrap();
        let err = read_aggregate_csv(&path).unwrap_err();
        assert!(err.to_string().contains("expected header"), "{err}");
    }

    #[test]
    fn empty_trace_gives_header_only() {
        assert_eq!(aggregate_csv(&[]), format!("{AGGREGATE_HEADER}\n"));
        assert_eq!(replica_csv(&[]), format!("{REPLICA_HEADER}\n"));
    }
}
