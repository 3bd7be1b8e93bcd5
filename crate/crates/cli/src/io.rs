//! Dataset, partition, curve and report files.
//!
//! The CSV dialect is fixed so generated files are byte-reproducible:
//! `,` separator, `.` decimal point, `\n` line endings, header required.
//! Dataset files carry `id,label,f0..f{d-1}`; partition files carry
//! `id,class_rank`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use asymshap_core::{Curve, DataPoint, Dataset, OrderedPartition, ValueReport};

use crate::error::{CliError, CliResult};

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    col: usize,
    raw: &str,
    what: &str,
) -> CliResult<T> {
    raw.trim().parse().map_err(|_| {
        CliError::validation(format!(
            "{}:{}:{}: cannot parse {what} from `{raw}`",
            path.display(),
            line,
            col
        ))
    })
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let lines = read_lines(path)?;
    let Some(header) = lines.first() else {
        return Err(CliError::validation(format!(
            "{}: missing header",
            path.display()
        )));
    };
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" {
        return Err(CliError::validation(format!(
            "{}:1: header must be id,label,f0..; got `{header}`",
            path.display()
        )));
    }
    for (j, name) in cols[2..].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(CliError::validation(format!(
                "{}:1: feature column {} must be named f{j}, got `{name}`",
                path.display(),
                j + 3
            )));
        }
    }
    let dim = cols.len() - 2;

    let mut points = Vec::with_capacity(lines.len().saturating_sub(1));
    let mut seen = HashMap::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CliError::validation(format!(
                "{}:{}: expected {} columns, got {} (inconsistent dimension)",
                path.display(),
                lineno,
                cols.len(),
                fields.len()
            )));
        }
        let id: usize = parse_field(path, lineno, 1, fields[0], "id")?;
        if let Some(prev) = seen.insert(id, lineno) {
            return Err(CliError::validation(format!(
                "{}:{}: duplicate id {id} (first seen on line {prev})",
                path.display(),
                lineno
            )));
        }
        let label: usize = parse_field(path, lineno, 2, fields[1], "label")?;
        let mut features = Vec::with_capacity(dim);
        for (j, raw) in fields[2..].iter().enumerate() {
            features.push(parse_field::<f64>(path, lineno, j + 3, raw, "feature")?);
        }
        points.push(DataPoint {
            id,
            features,
            label,
        });
    }
    let num_classes = points.iter().map(|p| p.label).max().map_or(1, |m| m + 1);
    Dataset::new(points, num_classes)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> CliResult<()> {
    let mut out = String::from("id,label");
    for j in 0..dataset.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for p in dataset.points() {
        let _ = write!(out, "{},{}", p.id, p.label);
        for x in &p.features {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_partition(path: &Path) -> CliResult<OrderedPartition> {
    let lines = read_lines(path)?;
    let Some(header) = lines.first() else {
        return Err(CliError::validation(format!(
            "{}: missing header",
            path.display()
        )));
    };
    if header.trim() != "id,class_rank" {
        return Err(CliError::validation(format!(
            "{}:1: header must be `id,class_rank`, got `{header}`",
            path.display()
        )));
    }
    let mut assignments = HashMap::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let Some((raw_id, raw_rank)) = line.split_once(',') else {
            return Err(CliError::validation(format!(
                "{}:{}: expected id,class_rank",
                path.display(),
                lineno
            )));
        };
        let id: usize = parse_field(path, lineno, 1, raw_id, "id")?;
        let rank: i64 = parse_field(path, lineno, 2, raw_rank, "class rank")?;
        if assignments.insert(id, rank).is_some() {
            return Err(CliError::validation(format!(
                "{}:{}: duplicate id {id}",
                path.display(),
                lineno
            )));
        }
    }
    OrderedPartition::from_assignments(&assignments)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn save_partition(path: &Path, partition: &OrderedPartition) -> CliResult<()> {
    let mut out = String::from("id,class_rank\n");
    for (rank, class) in partition.classes().iter().enumerate() {
        for &id in class {
            let _ = writeln!(out, "{},{}", id, rank + 1);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_curve_csv(path: &Path, curve: &Curve) -> CliResult<()> {
    let mut out = String::from("fraction,relative_accuracy\n");
    for p in &curve.steps {
        let _ = writeln!(out, "{},{}", p.fraction, p.relative_accuracy);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Mean of several aligned curves, written in the same CSV layout.
pub fn write_mean_curve_csv(path: &Path, curves: &[Curve]) -> CliResult<()> {
    if curves.is_empty() {
        return Err(CliError::internal("no curves to average"));
    }
    let steps = curves[0].steps.len();
    if curves.iter().any(|c| c.steps.len() != steps) {
        return Err(CliError::internal("curves have mismatched step counts"));
    }
    let mut out = String::from("fraction,relative_accuracy\n");
    for j in 0..steps {
        let fraction = curves[0].steps[j].fraction;
        let mean: f64 = curves
            .iter()
            .map(|c| c.steps[j].relative_accuracy)
            .sum::<f64>()
            / curves.len() as f64;
        let _ = writeln!(out, "{fraction},{mean}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_report(path: &Path, report: &ValueReport) -> CliResult<()> {
    let mut text = report.to_json();
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> CliResult<ValueReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    ValueReport::from_json(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("asymshap-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dataset_round_trip() {
        let ds = Dataset::from_parts(vec![vec![0.5, -1.25], vec![1.0 / 3.0, 2e-17]], vec![0, 1])
            .unwrap();
        let path = tmp("ds.csv");
        save_dataset(&path, &ds).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn dataset_errors_carry_line_numbers() {
        let path = tmp("dup.csv");
        std::fs::write(&path, "id,label,f0\n0,0,1.0\n0,1,2.0\n").unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("duplicate id 0"), "{err}");
        assert!(err.contains(":3:"), "{err}");

        let path = tmp("ragged.csv");
        std::fs::write(&path, "id,label,f0,f1\n0,0,1.0,2.0\n1,1,3.0\n").unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("inconsistent dimension"), "{err}");

        let path = tmp("badfloat.csv");
        std::fs::write(&path, "id,label,f0\n0,0,abc\n").unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains(":2:3"), "{err}");
    }

    #[test]
    fn partition_round_trip_and_compaction() {
        let p = OrderedPartition::new(vec![vec![0, 2], vec![1]]).unwrap();
        let path = tmp("part.csv");
        save_partition(&path, &p).unwrap();
        let back = load_partition(&path).unwrap();
        assert_eq!(back, p);

        // arbitrary ranks compact in order
        let path = tmp("gaps.csv");
        std::fs::write(&path, "id,class_rank\n0,10\n1,-3\n2,10\n").unwrap();
        let p = load_partition(&path).unwrap();
        assert_eq!(p.classes(), &[vec![1], vec![0, 2]]);
    }

    #[test]
    fn report_file_round_trip() {
        use asymshap_core::{Method, OrderedPartition, ReportMeta};
        let partition = OrderedPartition::single_class(3);
        let report = ValueReport::new(
            Method::KnnAds,
            vec![0.1, -0.2, 1.0 / 7.0],
            &partition,
            None,
            ReportMeta {
                seed: 3,
                iterations: 9,
                utility: "knn(k=3, metric=euclidean, empty_score=0)".into(),
                workers: None,
                config_hash: Some("deadbeef".into()),
                tool_version: Some("0.1.0".into()),
            },
        );
        let path = tmp("report.json");
        write_report(&path, &report).unwrap();
        assert_eq!(read_report(&path).unwrap(), report);
    }
}
