use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::MlpEnsemble;
use super::ModelError;

pub const FORMAT_TAG: &str = "pvforecast-ensemble";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    ensemble: MlpEnsemble,
}

impl MlpEnsemble {
    /// JSON container. Floats use shortest round-trip formatting, so loading
    /// reproduces every weight exactly.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            ensemble: self.clone(),
        };
        serde_json::to_string(&file).expect("ensemble serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Persist(e.to_string()))?;
        if file.format != FORMAT_TAG {
            return Err(ModelError::Persist(format!("unknown format `{}`", file.format)));
        }
        if file.version != FORMAT_VERSION {
            return Err(ModelError::Persist(format!("unsupported version {}", file.version)));
        }
        let e = file.ensemble;
        let (config, scaler, members) = (e.config().clone(), e.scaler().clone(), e.members().to_vec());
        MlpEnsemble::new(config, scaler, members)
    }
}

pub fn save_ensemble(ens: &MlpEnsemble, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, ens.to_json()).map_err(|e| ModelError::Persist(format!("{}: {e}", path.display())))
}

pub fn load_ensemble(path: &Path) -> Result<MlpEnsemble, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Persist(format!("{}: {e}", path.display())))?;
    MlpEnsemble::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plantmodel::{ensemble_train_xy, MlpConfig, TrainParams};

    #[test]
    fn round_trip_is_bit_exact() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64).sqrt(), (i as f64 * 0.3).sin()]).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] * r[1]]).collect();
        let config = MlpConfig {
            input_dim: 2,
            hidden: vec![5, 3],
            output_dim: 1,
            seed: 1,
            train: TrainParams {
                epochs: 10,
                ..TrainParams::default()
            },
            night_filter: false,
        };
        let (ens, _) = ensemble_train_xy(&config, 2, &x, &y).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_ensemble(&ens, &path).unwrap();
        let back = load_ensemble(&path).unwrap();
        assert_eq!(back, ens);
        for r in &x {
            let a = ens.predict(r).unwrap();
            let b = back.predict(r).unwrap();
            assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
        assert_eq!(back.to_json(), ens.to_json());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(MlpEnsemble::from_json("{}").is_err());
        assert!(MlpEnsemble::from_json(r#"{"format":"x","version":1,"ensemble":null}"#).is_err());
    }
}
