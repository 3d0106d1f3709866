//! Named parameter tensors stored as base64 little-endian `f64` blobs.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor::new(vec![data.len()], data)
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::new(Vec::new(), vec![v])
    }

    pub fn indices(data: &[usize]) -> Self {
        Tensor::vector(data.iter().map(|&i| i as f64).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    shape: Vec<usize>,
    data: String,
}

impl Serialize for Tensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut bytes = Vec::with_capacity(8 * self.data.len());
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        TensorRepr {
            shape: self.shape.clone(),
            data: STANDARD.encode(bytes),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TensorRepr::deserialize(d)?;
        let bytes = STANDARD.decode(repr.data).map_err(D::Error::custom)?;
        if bytes.len() % 8 != 0 {
            return Err(D::Error::custom("tensor blob length is not a multiple of 8"));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if repr.shape.iter().product::<usize>() != data.len() {
            return Err(D::Error::custom("tensor shape does not match blob length"));
        }
        Ok(Tensor {
            shape: repr.shape,
            data,
        })
    }
}

/// Parameter payload of one model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    #[serde(flatten)]
    pub tensors: BTreeMap<String, Tensor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<super::TrainedModel>,
}

impl Params {
    pub fn put(&mut self, name: &str, t: Tensor) -> &mut Self {
        self.tensors.insert(name.to_string(), t);
        self
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Serialization(format!("missing parameter tensor {name:?}")))
    }

    pub fn vector(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.get(name)?.data.clone())
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        self.get(name)?
            .data
            .first()
            .copied()
            .ok_or_else(|| Error::Serialization(format!("empty tensor {name:?}")))
    }

    pub fn indices(&self, name: &str) -> Result<Vec<usize>> {
        self.get(name)?
            .data
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Serialization(format!("tensor {name:?} holds a non-index value {v}")))
                }
            })
            .collect()
    }

    pub fn matrix(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        let t = self.get(name)?;
        match t.shape.as_slice() {
            [_, cols] => Ok(t.data.chunks(*cols.max(&1)).map(<[f64]>::to_vec).collect()),
            _ => Err(Error::Serialization(format!("tensor {name:?} is not a matrix"))),
        }
    }
}

pub fn matrix_tensor(rows: &[Vec<f64>]) -> Tensor {
    let cols = rows.first().map_or(0, Vec::len);
    Tensor::new(vec![rows.len(), cols], rows.iter().flatten().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tensor_blob_round_trip(data in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..40)) {
            let t = Tensor::vector(data);
            let json = serde_json::to_string(&t).unwrap();
            let back: Tensor = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, t);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let bad = r#"{"shape":[3],"data":"AAAAAAAAAAA="}"#;
        assert!(serde_json::from_str::<Tensor>(bad).is_err());
    }
}
