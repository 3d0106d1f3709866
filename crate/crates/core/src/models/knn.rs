//! k-nearest neighbours over Euclidean distance.

use serde::{Deserialize, Serialize};

use super::params::{matrix_tensor, Params, Tensor};
use super::{check_training_set, Classifier};
use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnHyper {
    pub k: usize,
}

impl Default for KnnHyper {
    fn default() -> Self {
        KnnHyper { k: 5 }
    }
}

/// Stores the training set; `k` is capped at its size.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
    pub k: usize,
}

pub fn train_knn(x: &[Vec<f64>], y: &[Label], hyper: &KnnHyper) -> Result<Knn> {
    check_training_set(x, y)?;
    if hyper.k == 0 {
        return Err(Error::InvalidConfig("knn k must be at least 1".into()));
    }
    Ok(Knn {
        x: x.to_vec(),
        y: y.to_vec(),
        k: hyper.k.min(x.len()),
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Vote fractions of the `k` nearest training points; equal distances are
/// ordered by training index.
pub fn knn_predict_proba(x_train: &[Vec<f64>], y_train: &[Label], x: &[f64], k: usize) -> Result<[f64; 2]> {
    if x_train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if k == 0 || k > x_train.len() {
        return Err(Error::InvalidConfig(format!(
            "k={k} must be between 1 and the training size {}",
            x_train.len()
        )));
    }
    let mut d: Vec<(f64, usize)> = x_train
        .iter()
        .enumerate()
        .map(|(i, row)| (squared_distance(row, x), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let takeoff = d[..k].iter().filter(|(_, i)| y_train[*i].is_positive()).count();
    let p = takeoff as f64 / k as f64;
    Ok([1.0 - p, p])
}

impl Knn {
    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        p.put("x", matrix_tensor(&self.x))
            .put("y", Tensor::vector(self.y.iter().map(|l| l.target()).collect()))
            .put("k", Tensor::scalar(self.k as f64));
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        let y = p
            .indices("y")?
            .into_iter()
            .map(|i| match i {
                0 | 1 => Ok(Label::from_index(i)),
                _ => Err(Error::Serialization(format!("label index {i} out of range"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let x = p.matrix("x")?;
        if x.len() != y.len() {
            return Err(Error::Serialization("knn x and y lengths differ".into()));
        }
        Ok(Knn {
            x,
            y,
            k: p.scalar("k")? as usize,
        })
    }
}

impl Classifier for Knn {
    fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        knn_predict_proba(&self.x, &self.y, x, self.k).expect("validated at training time")
    }
}
