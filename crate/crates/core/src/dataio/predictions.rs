//! Prediction CSVs. Values are written in shortest round-trip form, so a
//! write/read cycle reproduces every `f64` exactly.

use std::path::Path;

use super::DataError;
use crate::category::{Category, NUM_CATEGORIES};
use crate::ensemble::{ProbMatrix, SIMPLEX_TOLERANCE};

pub const CATEGORICAL_HEADER: [&str; 10] = ["id", "p_A", "p_C", "p_D", "p_F", "p_H", "p_N", "p_S", "p_U", "pred"];
pub const ATTRIBUTE_HEADER: [&str; 4] = ["id", "valence", "arousal", "dominance"];

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalPredictions {
    pub ids: Vec<String>,
    pub probs: Vec<[f64; NUM_CATEGORIES]>,
    pub labels: Vec<Category>,
}

impl CategoricalPredictions {
    /// Labels are the row argmax.
    pub fn from_probs(ids: Vec<String>, probs: Vec<[f64; NUM_CATEGORIES]>) -> Self {
        let labels = probs.iter().map(crate::ensemble::argmax).collect();
        CategoricalPredictions { ids, probs, labels }
    }

    pub fn to_prob_matrix(&self, model_id: impl Into<String>) -> Result<ProbMatrix, crate::ensemble::EnsembleError> {
        ProbMatrix::new(model_id, self.probs.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributePredictions {
    pub ids: Vec<String>,
    /// Rows ordered (valence, arousal, dominance).
    pub values: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictionFile {
    Categorical(CategoricalPredictions),
    Attributes(AttributePredictions),
}

impl PredictionFile {
    pub fn ids(&self) -> &[String] {
        match self {
            PredictionFile::Categorical(p) => &p.ids,
            PredictionFile::Attributes(p) => &p.ids,
        }
    }
}

fn csv_err(path: &Path, row: usize, e: impl ToString) -> DataError {
    DataError::Csv {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

pub fn write_predictions(path: impl AsRef<Path>, preds: &PredictionFile) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, 0, e))?;
    let mut record: Vec<String> = Vec::new();
    let put = |w: &mut csv::Writer<std::fs::File>, rec: &[String], row: usize| {
        w.write_record(rec).map_err(|e| csv_err(path, row, e))
    };
    match preds {
        PredictionFile::Categorical(p) => {
            assert!(p.ids.len() == p.probs.len() && p.ids.len() == p.labels.len(), "ragged predictions");
            put(&mut w, &CATEGORICAL_HEADER.map(String::from), 0)?;
            for (i, ((id, row), label)) in p.ids.iter().zip(&p.probs).zip(&p.labels).enumerate() {
                record.clear();
                record.push(id.clone());
                record.extend(row.iter().map(|v| v.to_string()));
                record.push(label.code().to_string());
                put(&mut w, &record, i + 1)?;
            }
        }
        PredictionFile::Attributes(p) => {
            assert_eq!(p.ids.len(), p.values.len(), "ragged predictions");
            put(&mut w, &ATTRIBUTE_HEADER.map(String::from), 0)?;
            for (i, (id, row)) in p.ids.iter().zip(&p.values).enumerate() {
                record.clear();
                record.push(id.clone());
                record.extend(row.iter().map(|v| v.to_string()));
                put(&mut w, &record, i + 1)?;
            }
        }
    }
    w.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads either layout, chosen by the header. Categorical rows are checked
/// against the simplex.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionFile, DataError> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => csv_err(path, 0, format!("{other:?}")),
        })?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, 0, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let categorical = header == CATEGORICAL_HEADER;
    if !categorical && header != ATTRIBUTE_HEADER {
        let expected = if header.len() >= 5 || header.iter().any(|h| h.starts_with("p_")) {
            CATEGORICAL_HEADER.join(",")
        } else {
            ATTRIBUTE_HEADER.join(",")
        };
        return Err(DataError::HeaderMismatch {
            path: path.to_path_buf(),
            expected,
            found: header.join(","),
        });
    }
    let mut ids = Vec::new();
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(path, row, e))?;
        let num = |k: usize| -> Result<f64, DataError> {
            let s = rec.get(k).ok_or_else(|| csv_err(path, row, format!("missing column {k}")))?;
            let v: f64 = s.trim().parse().map_err(|_| csv_err(path, row, format!("bad number {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(csv_err(path, row, format!("non-finite value {s:?}")))
            }
        };
        ids.push(rec.get(0).unwrap_or_default().to_string());
        if categorical {
            let mut p = [0.0; NUM_CATEGORIES];
            for (c, v) in p.iter_mut().enumerate() {
                *v = num(c + 1)?;
            }
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&v| v < -SIMPLEX_TOLERANCE) || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(csv_err(path, row, format!("probabilities off the simplex (sum {sum})")));
            }
            let code = rec.get(9).unwrap_or_default().trim();
            let label = Category::from_code(code).ok_or_else(|| csv_err(path, row, format!("unknown category {code:?}")))?;
            probs.push(p);
            labels.push(label);
        } else {
            values.push([num(1)?, num(2)?, num(3)?]);
        }
    }
    Ok(if categorical {
        PredictionFile::Categorical(CategoricalPredictions { ids, probs, labels })
    } else {
        PredictionFile::Attributes(AttributePredictions { ids, values })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_row_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let preds = CategoricalPredictions::from_probs(vec!["a".into()], vec![[0.125; 8]]);
        write_predictions(&p, &PredictionFile::Categorical(preds.clone())).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "id,p_A,p_C,p_D,p_F,p_H,p_N,p_S,p_U,pred\na,0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125,A\n"
        );
        assert_eq!(read_predictions(&p).unwrap(), PredictionFile::Categorical(preds));
    }

    #[test]
    fn awkward_values_are_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let mut row = [1.0 / 3.0, 1e-17, 0.0, 0.1, 0.2, 0.0, 0.0, 0.0];
        row[7] = 1.0 - row.iter().sum::<f64>();
        let preds = CategoricalPredictions::from_probs(vec!["x,y".into()], vec![row]);
        write_predictions(&p, &PredictionFile::Categorical(preds.clone())).unwrap();
        match read_predictions(&p).unwrap() {
            PredictionFile::Categorical(back) => {
                assert_eq!(back.ids, preds.ids);
                for (a, b) in back.probs[0].iter().zip(&row) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            _ => panic!("wrong layout"),
        }
    }

    #[test]
    fn attributes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let preds = PredictionFile::Attributes(AttributePredictions {
            ids: vec!["s1".into(), "s2".into()],
            values: vec![[1.0, 7.0, 3.3333333333333335], [4.25, 2.0, 5.5]],
        });
        write_predictions(&p, &preds).unwrap();
        assert_eq!(read_predictions(&p).unwrap(), preds);
    }

    #[test]
    fn header_mismatch_and_off_simplex() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "id,p_A,p_C,p_D,p_F,p_H,p_N,p_S,pred\na,0,0,0,0,0,0,1,S\n").unwrap();
        assert!(matches!(read_predictions(&p), Err(DataError::HeaderMismatch { .. })));
        std::fs::write(&p, "id,p_A,p_C,p_D,p_F,p_H,p_N,p_S,p_U,pred\na,0.5,0.5,0.5,0,0,0,0,0,A\n").unwrap();
        assert!(matches!(read_predictions(&p), Err(DataError::Csv { row: 1, .. })));
        std::fs::write(&p, "id,valence,arousal\na,1,2\n").unwrap();
        assert!(matches!(read_predictions(&p), Err(DataError::HeaderMismatch { .. })));
    }
}
