use serde::{Deserialize, Serialize};

use super::ModelError;

/// Per-dimension min-max scaling fitted on training inputs only.
///
/// Out-of-range inputs map affinely outside `[0, 1]`; nothing is clamped.
/// A constant dimension maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ModelError> {
        let first = rows.first().ok_or(ModelError::EmptyTrainingSet)?.as_ref();
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in rows {
            let row = row.as_ref();
            if row.len() != min.len() {
                return Err(ModelError::Shape {
                    expected: min.len(),
                    got: row.len(),
                });
            }
            for ((lo, hi), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }
}
