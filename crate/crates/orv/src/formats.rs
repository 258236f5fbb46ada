//! File formats: tabulated driving functions, sample batches, batch
//! metadata, and convergence curves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use orv_core::liouville::SampleBatch;
use orv_core::regvar::ConvergenceReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ModelConfig;
use crate::OrvError;

pub const CURVE_HEADER: [&str; 4] = ["t", "ratio", "target", "rel_error"];

/// Reads `(t, g(t))` pairs. A non-numeric first row is taken as a header.
pub fn load_tabulated_csv(path: &Path) -> Result<Vec<(f64, f64)>, OrvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| OrvError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| OrvError::Config(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(OrvError::Config(format!(
                "{}: row {} has {} columns, expected 2",
                path.display(),
                i + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(g)) => points.push((t, g)),
            _ if i == 0 => continue,
            _ => {
                return Err(OrvError::Config(format!(
                    "{}: row {} is not numeric",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(points)
}

/// Writes draws with header `x1,…,xd`.
pub fn write_samples_csv(path: &Path, batch: &SampleBatch) -> Result<(), OrvError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let header: Vec<String> = (1..=batch.dim).map(|i| format!("x{i}")).collect();
    w.write_record(&header)?;
    for row in batch.rows() {
        w.write_record(row.iter().map(|v| format_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<(usize, Vec<f64>), OrvError> {
    let mut r = csv::Reader::from_path(path)?;
    let dim = r.headers()?.len();
    let mut points = Vec::new();
    for record in r.records() {
        for field in record?.iter() {
            points.push(
                field
                    .parse::<f64>()
                    .map_err(|e| OrvError::Config(format!("{}: {e}", path.display())))?,
            );
        }
    }
    Ok((dim, points))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub seed: u64,
    pub n: usize,
    pub dim: usize,
    /// SHA-256 of the model config's canonical JSON.
    pub model_hash: String,
}

impl BatchMetadata {
    pub fn new(batch: &SampleBatch, model: &ModelConfig) -> Self {
        BatchMetadata {
            seed: batch.seed,
            n: batch.len(),
            dim: batch.dim,
            model_hash: model_hash(model),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), OrvError> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

pub fn model_hash(model: &ModelConfig) -> String {
    let canonical = serde_json::to_vec(model).expect("model config serializes");
    hex(&Sha256::digest(&canonical))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `t,ratio,target,rel_error`, one row per grid point.
pub fn write_curve_csv(path: &Path, report: &ConvergenceReport) -> Result<(), OrvError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(CURVE_HEADER)?;
    for i in 0..report.t_grid.len() {
        w.write_record([
            format_float(report.t_grid[i]),
            format_float(report.ratios[i]),
            format_float(report.targets[i]),
            format_float(report.rel_errors[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that round-trips.
fn format_float(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DrivingConfig;
    use orv_core::driving::DrivingFunction;
    use orv_core::liouville::{sample, LiouvilleModel};

    #[test]
    fn tabulated_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "t,g\n0,1\n1,0.5\n# note\n4,0.1\n").unwrap();
        assert_eq!(load_tabulated_csv(&a).unwrap(), vec![(0.0, 1.0), (1.0, 0.5), (4.0, 0.1)]);
        let b = dir.path().join("b.csv");
        std::fs::write(&b, "0, 1\n2, 0.25\n").unwrap();
        assert_eq!(load_tabulated_csv(&b).unwrap(), vec![(0.0, 1.0), (2.0, 0.25)]);
        let c = dir.path().join("c.csv");
        std::fs::write(&c, "t,g\n0,1\n1,x\n").unwrap();
        assert!(load_tabulated_csv(&c).is_err());
    }

    #[test]
    fn samples_round_trip_exactly() {
        let m = LiouvilleModel::normalize(vec![1.0, 2.0], DrivingFunction::inverted_dirichlet(4.0).unwrap())
            .unwrap();
        let batch = sample(&m, 500, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_samples_csv(&p, &batch).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        let (dim, points) = read_samples_csv(&p).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(points, batch.points);
    }

    #[test]
    fn model_hash_is_stable_and_sensitive() {
        let a = ModelConfig {
            shapes: vec![1.0, 1.0],
            driving: DrivingConfig::InvertedDirichlet { beta: 3.0 },
        };
        let mut b = a.clone();
        assert_eq!(model_hash(&a), model_hash(&b));
        assert_eq!(model_hash(&a).len(), 64);
        b.shapes[0] = 1.5;
        assert_ne!(model_hash(&a), model_hash(&b));
    }
}
