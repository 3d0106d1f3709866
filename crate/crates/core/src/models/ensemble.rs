//! Soft voting over member probabilities.

use super::params::{Params, Tensor};
use super::{Classifier, TrainedModel};
use crate::error::{Error, Result};
use crate::label::Label;

const SUM_TOLERANCE: f64 = 1e-9;

/// Argmax of summed class probabilities (ties go to landing) and the mean
/// probability vector.
pub fn soft_vote(probas: &[[f64; 2]]) -> Result<(Label, [f64; 2])> {
    if probas.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut sum = [0.0; 2];
    for p in probas {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) || (p[0] + p[1] - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidData(format!("member probabilities {p:?} do not form a distribution")));
        }
        sum[0] += p[0];
        sum[1] += p[1];
    }
    let n = probas.len() as f64;
    let label = Label::from_probabilities(sum);
    let p1 = sum[1] / n;
    Ok((label, [1.0 - p1, p1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<TrainedModel>,
}

impl Ensemble {
    pub fn new(members: Vec<TrainedModel>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Ensemble { members })
    }

    pub fn vote(&self, x: &[f64]) -> (Label, [f64; 2]) {
        let probas: Vec<[f64; 2]> = self.members.iter().map(|m| m.model.predict_proba(x)).collect();
        soft_vote(&probas).expect("members produce distributions")
    }

    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        p.put("n_members", Tensor::scalar(self.members.len() as f64));
        p.members = self.members.clone();
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        Ensemble::new(p.members.clone())
    }
}

impl Classifier for Ensemble {
    fn n_features(&self) -> usize {
        self.members[0].model.n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        self.vote(x).1
    }

    fn predict(&self, x: &[f64]) -> Label {
        self.vote(x).0
    }
}
