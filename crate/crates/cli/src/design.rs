//! Design matrices: generation and the CSV loader for user-supplied files.
//!
//! A design file holds one observation per line as comma-separated numbers,
//! no header. Blank lines are ignored.

use std::path::Path;

use mrle_core::calibration::normalize_columns;
use mrle_core::Tensor;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{HarnessError, Result};

/// Parses design CSV text into an `n x b` matrix.
pub fn parse_design_csv(text: &str) -> Result<Tensor> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::Config(format!("design CSV: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(HarnessError::Config(format!(
                    "design CSV line {}: {} fields, expected {w}",
                    line + 1,
                    record.len()
                )));
            }
        }
        width = Some(record.len());
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                HarnessError::Config(format!("design CSV line {}: not a number: {field:?}", line + 1))
            })?;
            if !v.is_finite() {
                return Err(HarnessError::Config(format!(
                    "design CSV line {}: non-finite value",
                    line + 1
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| HarnessError::Config("design CSV is empty".into()))?;
    Tensor::matrix(rows, width, data).map_err(|e| HarnessError::Config(format!("design CSV: {e}")))
}

pub fn load_design_csv(path: &Path) -> Result<Tensor> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_design_csv(&text)
}

/// I.i.d. standard normal `n x b` matrix with columns rescaled to unit mean
/// square.
pub fn normalized_gaussian<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<Tensor> {
    let data = (0..n * b).map(|_| rng.sample(StandardNormal)).collect();
    let raw = Tensor::matrix(n, b, data).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let (z, _) = normalize_columns(&raw).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrle_core::calibration::{validate_design, NORMALIZATION_TOLERANCE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn parses_rows() {
        let z = parse_design_csv("1, 2\n# note\n\n3,4.5\n").unwrap();
        assert_eq!(z.dims(), &[2, 2]);
        assert_eq!(z.data(), &[1.0, 2.0, 3.0, 4.5]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_design_csv("").is_err());
        assert!(parse_design_csv("1,2\n3\n").is_err());
        assert!(parse_design_csv("1,x\n").is_err());
        assert!(parse_design_csv("1,NaN\n").is_err());
        assert!(parse_design_csv("inf\n").is_err());
    }

    #[test]
    fn generated_design_is_normalized() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let z = normalized_gaussian(30, 4, &mut rng).unwrap();
        assert!(validate_design(&z, NORMALIZATION_TOLERANCE).passed());
    }
}
