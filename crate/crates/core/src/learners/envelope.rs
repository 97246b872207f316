//! Versioned JSON model envelope.
//!
//! `{version, family, hyperparams, parameters, preprocessing, seed}` with
//! numeric f64 arrays stored either as plain decimals or as base64
//! little-endian blobs (flag-selectable).

use super::{
    FittedModel, GbtFitted, KnnFitted, LogRegFitted, MlpFitted, NbFitted, RfFitted, SvmFitted,
};
use crate::error::{Error, Result};
use crate::neural::FittedCnn;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const ENVELOPE_VERSION: u32 = 1;
const B64_KEY: &str = "__f64_base64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericEncoding {
    Decimal,
    Base64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessingIds {
    pub scaler: Option<String>,
    pub pca: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub version: u32,
    pub family: String,
    pub hyperparams: Value,
    pub parameters: Value,
    pub preprocessing: PreprocessingIds,
    pub seed: u64,
}

impl ModelEnvelope {
    pub fn new(
        family: &str,
        hyperparams: Value,
        model: &dyn FittedModel,
        preprocessing: PreprocessingIds,
        seed: u64,
    ) -> Self {
        ModelEnvelope {
            version: ENVELOPE_VERSION,
            family: family.to_string(),
            hyperparams,
            parameters: model.parameters_json(),
            preprocessing,
            seed,
        }
    }

    pub fn to_json(&self, encoding: NumericEncoding) -> String {
        let mut v = serde_json::to_value(self).expect("envelope serializes");
        if encoding == NumericEncoding::Base64 {
            encode_numeric_arrays(&mut v);
        }
        serde_json::to_string_pretty(&v).expect("envelope prints")
    }

    pub fn from_json(s: &str) -> Result<ModelEnvelope> {
        let mut v: Value = serde_json::from_str(s)?;
        decode_numeric_arrays(&mut v);
        let env: ModelEnvelope = serde_json::from_value(v)?;
        if env.version != ENVELOPE_VERSION {
            return Err(Error::Serde(format!("unsupported model envelope version {}", env.version)));
        }
        Ok(env)
    }
}

/// Reconstructs a predict-capable model from its envelope.
pub fn fitted_from_envelope(env: &ModelEnvelope) -> Result<Box<dyn FittedModel>> {
    let p = env.parameters.clone();
    let model: Box<dyn FittedModel> = match env.family.as_str() {
        "knn" => Box::new(serde_json::from_value::<KnnFitted>(p)?),
        "nb" => Box::new(serde_json::from_value::<NbFitted>(p)?),
        "svm" => Box::new(serde_json::from_value::<SvmFitted>(p)?),
        "rf" => Box::new(serde_json::from_value::<RfFitted>(p)?),
        "gbt" => Box::new(serde_json::from_value::<GbtFitted>(p)?),
        "mlp" => Box::new(serde_json::from_value::<MlpFitted>(p)?),
        "logreg" => Box::new(serde_json::from_value::<LogRegFitted>(p)?),
        "cnn" => Box::new(serde_json::from_value::<FittedCnn>(p)?),
        other => return Err(Error::Serde(format!("unknown model family '{other}'"))),
    };
    Ok(model)
}

/// Replaces every all-f64 array in the tree with a base64 blob object.
/// Integer arrays (indices, shapes) are left alone.
pub fn encode_numeric_arrays(v: &mut Value) {
    match v {
        Value::Array(items) => {
            let all_f64 = !items.is_empty()
                && items.iter().all(|x| matches!(x, Value::Number(n) if n.is_f64()));
            if all_f64 {
                let mut bytes = Vec::with_capacity(items.len() * 8);
                for x in items.iter() {
                    bytes.extend_from_slice(&x.as_f64().unwrap().to_le_bytes());
                }
                *v = serde_json::json!({ B64_KEY: B64.encode(bytes) });
            } else {
                for x in items {
                    encode_numeric_arrays(x);
                }
            }
        }
        Value::Object(map) => {
            for (_, x) in map.iter_mut() {
                encode_numeric_arrays(x);
            }
        }
        _ => {}
    }
}

/// Inverse of `encode_numeric_arrays`.
pub fn decode_numeric_arrays(v: &mut Value) {
    match v {
        Value::Object(map) => {
            if map.len() == 1 {
                if let Some(Value::String(s)) = map.get(B64_KEY) {
                    if let Ok(bytes) = B64.decode(s) {
                        let floats: Vec<Value> = bytes
                            .chunks_exact(8)
                            .map(|c| {
                                let arr: [u8; 8] = c.try_into().unwrap();
                                serde_json::json!(f64::from_le_bytes(arr))
                            })
                            .collect();
                        *v = Value::Array(floats);
                        return;
                    }
                }
            }
            for (_, x) in map.iter_mut() {
                decode_numeric_arrays(x);
            }
        }
        Value::Array(items) => {
            for x in items {
                decode_numeric_arrays(x);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Learner, LogRegParams, NbParams};
    use crate::matrix::Mat;

    fn toy_model() -> (Box<dyn FittedModel>, Mat, Vec<usize>) {
        let x = Mat::from_rows(&[
            vec![0.25, -1.5],
            vec![0.5, -0.5],
            vec![1.0, 0.5],
            vec![1.25, 1.5],
        ]);
        let y = vec![0, 0, 1, 1];
        let m = LogRegParams::default().fit(&x, &y, 0).unwrap();
        (m, x, y)
    }

    #[test]
    fn decimal_and_base64_roundtrip_identically() {
        let (model, x, _) = toy_model();
        let env = ModelEnvelope::new(
            "logreg",
            serde_json::json!({"l2_strength": 0.01}),
            model.as_ref(),
            PreprocessingIds::default(),
            9,
        );
        for encoding in [NumericEncoding::Decimal, NumericEncoding::Base64] {
            let text = env.to_json(encoding);
            let back = ModelEnvelope::from_json(&text).unwrap();
            let rebuilt = fitted_from_envelope(&back).unwrap();
            assert_eq!(
                model.predict_proba(&x).unwrap(),
                rebuilt.predict_proba(&x).unwrap(),
                "{encoding:?}"
            );
        }
    }

    #[test]
    fn base64_encoding_actually_compacts_float_arrays() {
        let (model, _, _) = toy_model();
        let env = ModelEnvelope::new(
            "logreg",
            Value::Null,
            model.as_ref(),
            PreprocessingIds::default(),
            0,
        );
        let text = env.to_json(NumericEncoding::Base64);
        assert!(text.contains(B64_KEY));
    }

    #[test]
    fn integer_arrays_survive_base64_mode() {
        let mut v = serde_json::json!({"idx": [1, 2, 3], "w": [0.5, 1.5]});
        encode_numeric_arrays(&mut v);
        assert_eq!(v["idx"], serde_json::json!([1, 2, 3]));
        assert!(v["w"].is_object());
        decode_numeric_arrays(&mut v);
        assert_eq!(v["w"], serde_json::json!([0.5, 1.5]));
    }

    #[test]
    fn every_family_roundtrips_through_the_envelope() {
        let x = Mat::from_rows(&[
            vec![0.1, 1.0],
            vec![0.3, 0.8],
            vec![0.2, 0.9],
            vec![0.9, 0.1],
            vec![0.8, 0.3],
            vec![1.0, 0.2],
        ]);
        let y = vec![0, 0, 0, 1, 1, 1];
        use crate::learners::{GbtParams, KnnParams, MlpParams, RfParams, SvmParams};
        let learners: Vec<(&str, Box<dyn Learner>)> = vec![
            ("knn", Box::new(KnnParams { n_neighbors: 3, ..Default::default() })),
            ("nb", Box::new(NbParams::default())),
            ("svm", Box::new(SvmParams { c: 1.0, ..Default::default() })),
            ("rf", Box::new(RfParams { n_estimators: 5, ..Default::default() })),
            ("gbt", Box::new(GbtParams { n_estimators: 5, ..Default::default() })),
            ("mlp", Box::new(MlpParams { hidden_units: 3, max_epochs: 5, ..Default::default() })),
            ("logreg", Box::new(LogRegParams::default())),
        ];
        for (family, learner) in learners {
            let model = learner.fit(&x, &y, 3).unwrap();
            let env = ModelEnvelope::new(
                family,
                Value::Null,
                model.as_ref(),
                PreprocessingIds::default(),
                3,
            );
            let back = ModelEnvelope::from_json(&env.to_json(NumericEncoding::Base64)).unwrap();
            let rebuilt = fitted_from_envelope(&back).unwrap();
            assert_eq!(
                model.predict_proba(&x).unwrap(),
                rebuilt.predict_proba(&x).unwrap(),
                "family {family}"
            );
        }
    }
}
