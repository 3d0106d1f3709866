//! Classifiers. Every model maps a feature vector to `[p_landing,
//! p_takeoff]`; trained models serialize to a JSON envelope whose tensors
//! are base64 little-endian `f64` blobs.

pub mod cnn;
pub mod ensemble;
pub mod knn;
pub mod linear;
pub mod params;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cnn::{train_cnn, Cnn, CnnHyper, CnnSpec};
pub use ensemble::{soft_vote, Ensemble};
pub use knn::{knn_predict_proba, train_knn, Knn, KnnHyper};
pub use linear::{train_logreg, train_svm, LinearSvm, LogisticRegression, LogregHyper, SvmHyper};
pub use params::{Params, Tensor};
pub use tree::{
    train_dtree, train_gboost, train_rforest, DecisionTree, DtreeHyper, FeatureFrac, GboostHyper,
    GradientBoosting, RandomForest, RforestHyper,
};

use crate::error::{Error, Result};
use crate::label::Label;

pub trait Classifier {
    fn n_features(&self) -> usize;

    /// `[p_landing, p_takeoff]`; callers guarantee the input width.
    fn predict_proba(&self, x: &[f64]) -> [f64; 2];

    fn predict(&self, x: &[f64]) -> Label {
        Label::from_probabilities(self.predict_proba(x))
    }
}

/// Validates a training matrix and returns its width.
pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[Label]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let d = x[0].len();
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("training features contain a non-finite value".into()));
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Svm,
    Knn,
    Dtree,
    Rforest,
    Gboost,
    Ensemble,
    Cnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Logreg,
        ModelKind::Svm,
        ModelKind::Knn,
        ModelKind::Dtree,
        ModelKind::Rforest,
        ModelKind::Gboost,
        ModelKind::Ensemble,
        ModelKind::Cnn,
    ];

    pub const TRADITIONAL: [ModelKind; 6] = [
        ModelKind::Logreg,
        ModelKind::Svm,
        ModelKind::Knn,
        ModelKind::Dtree,
        ModelKind::Rforest,
        ModelKind::Gboost,
    ];

    pub const DEFAULT_ENSEMBLE: [ModelKind; 5] = [
        ModelKind::Logreg,
        ModelKind::Svm,
        ModelKind::Rforest,
        ModelKind::Gboost,
        ModelKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Knn => "knn",
            ModelKind::Dtree => "dtree",
            ModelKind::Rforest => "rforest",
            ModelKind::Gboost => "gboost",
            ModelKind::Ensemble => "ensemble",
            ModelKind::Cnn => "cnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    Tfidf,
    PooledSpectral,
    Spectrogram2d,
}

impl FeatureSpace {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSpace::Tfidf => "tfidf",
            FeatureSpace::PooledSpectral => "pooled_spectral",
            FeatureSpace::Spectrogram2d => "spectrogram_2d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
}

/// Hyperparameters for every kind; each trainer reads its own entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub logreg: LogregHyper,
    pub svm: SvmHyper,
    pub knn: KnnHyper,
    pub dtree: DtreeHyper,
    pub rforest: RforestHyper,
    pub gboost: GboostHyper,
    pub cnn: CnnHyper,
    pub ensemble_members: Vec<ModelKind>,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            logreg: LogregHyper::default(),
            svm: SvmHyper::default(),
            knn: KnnHyper::default(),
            dtree: DtreeHyper::default(),
            rforest: RforestHyper::default(),
            gboost: GboostHyper::default(),
            cnn: CnnHyper::default(),
            ensemble_members: ModelKind::DEFAULT_ENSEMBLE.to_vec(),
        }
    }
}

impl Hyper {
    fn for_kind(&self, kind: ModelKind) -> serde_json::Value {
        let v = match kind {
            ModelKind::Logreg => serde_json::to_value(self.logreg),
            ModelKind::Svm => serde_json::to_value(self.svm),
            ModelKind::Knn => serde_json::to_value(self.knn),
            ModelKind::Dtree => serde_json::to_value(self.dtree),
            ModelKind::Rforest => serde_json::to_value(self.rforest),
            ModelKind::Gboost => serde_json::to_value(self.gboost),
            ModelKind::Cnn => serde_json::to_value(self.cnn),
            ModelKind::Ensemble => serde_json::to_value(&self.ensemble_members),
        };
        v.expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logreg(LogisticRegression),
    Svm(LinearSvm),
    Knn(Knn),
    Dtree(DecisionTree),
    Rforest(RandomForest),
    Gboost(GradientBoosting),
    Ensemble(Ensemble),
    Cnn(Cnn),
}

impl Model {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Logreg(m) => m,
            Model::Svm(m) => m,
            Model::Knn(m) => m,
            Model::Dtree(m) => m,
            Model::Rforest(m) => m,
            Model::Gboost(m) => m,
            Model::Ensemble(m) => m,
            Model::Cnn(m) => m,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Logreg(_) => ModelKind::Logreg,
            Model::Svm(_) => ModelKind::Svm,
            Model::Knn(_) => ModelKind::Knn,
            Model::Dtree(_) => ModelKind::Dtree,
            Model::Rforest(_) => ModelKind::Rforest,
            Model::Gboost(_) => ModelKind::Gboost,
            Model::Ensemble(_) => ModelKind::Ensemble,
            Model::Cnn(_) => ModelKind::Cnn,
        }
    }

    fn to_params(&self) -> Params {
        match self {
            Model::Logreg(m) => m.to_params(),
            Model::Svm(m) => m.to_params(),
            Model::Knn(m) => m.to_params(),
            Model::Dtree(m) => m.to_params(),
            Model::Rforest(m) => m.to_params(),
            Model::Gboost(m) => m.to_params(),
            Model::Ensemble(m) => m.to_params(),
            Model::Cnn(m) => m.to_params(),
        }
    }

    fn from_params(kind: ModelKind, p: &Params) -> Result<Self> {
        Ok(match kind {
            ModelKind::Logreg => Model::Logreg(LogisticRegression::from_params(p)?),
            ModelKind::Svm => Model::Svm(LinearSvm::from_params(p)?),
            ModelKind::Knn => Model::Knn(Knn::from_params(p)?),
            ModelKind::Dtree => Model::Dtree(DecisionTree::from_params(p)?),
            ModelKind::Rforest => Model::Rforest(RandomForest::from_params(p)?),
            ModelKind::Gboost => Model::Gboost(GradientBoosting::from_params(p)?),
            ModelKind::Ensemble => Model::Ensemble(Ensemble::from_params(p)?),
            ModelKind::Cnn => Model::Cnn(Cnn::from_params(p)?),
        })
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        self.inner().predict_proba(x)
    }

    fn predict(&self, x: &[f64]) -> Label {
        self.inner().predict(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub feature_space: FeatureSpace,
    pub train_meta: TrainMeta,
    pub model: Model,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    kind: ModelKind,
    feature_space: FeatureSpace,
    train_meta: TrainMeta,
    parameters: Params,
}

impl Serialize for TrainedModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Envelope {
            kind: self.kind(),
            feature_space: self.feature_space,
            train_meta: self.train_meta.clone(),
            parameters: self.model.to_params(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrainedModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = Envelope::deserialize(d)?;
        let model = Model::from_params(e.kind, &e.parameters).map_err(serde::de::Error::custom)?;
        Ok(TrainedModel {
            feature_space: e.feature_space,
            train_meta: e.train_meta,
            model,
        })
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn n_features(&self) -> usize {
        self.model.n_features()
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        if let Model::Cnn(c) = &self.model {
            if x.len() != c.spec.input_len() {
                return Err(Error::ShapeMismatch {
                    expected: (c.spec.input_rows, c.spec.input_cols),
                    actual: (x.len() / c.spec.input_cols, x.len() % c.spec.input_cols),
                });
            }
        }
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_width(x)?;
        Ok(self.model.predict_proba(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.check_width(x)?;
        Ok(self.model.predict(x))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainedModel::from_json(&s)
    }
}

/// Trains one model of `kind` on rows of `x`.
pub fn train(
    kind: ModelKind,
    x: &[Vec<f64>],
    y: &[Label],
    hyper: &Hyper,
    seed: u64,
    feature_space: FeatureSpace,
) -> Result<TrainedModel> {
    let mut epochs = None;
    let model = match kind {
        ModelKind::Logreg => {
            epochs = Some(hyper.logreg.epochs);
            Model::Logreg(train_logreg(x, y, &hyper.logreg)?)
        }
        ModelKind::Svm => {
            epochs = Some(hyper.svm.epochs);
            Model::Svm(train_svm(x, y, &hyper.svm)?)
        }
        ModelKind::Knn => Model::Knn(train_knn(x, y, &hyper.knn)?),
        ModelKind::Dtree => Model::Dtree(train_dtree(x, y, &hyper.dtree)?),
        ModelKind::Rforest => Model::Rforest(train_rforest(x, y, &hyper.rforest, seed)?),
        ModelKind::Gboost => Model::Gboost(train_gboost(x, y, &hyper.gboost)?),
        ModelKind::Cnn => {
            epochs = Some(hyper.cnn.epochs);
            Model::Cnn(train_cnn(x, y, &hyper.cnn, seed)?)
        }
        ModelKind::Ensemble => {
            if hyper.ensemble_members.is_empty() {
                return Err(Error::EmptyEnsemble);
            }
            let members = hyper
                .ensemble_members
                .iter()
                .map(|&k| match k {
                    ModelKind::Ensemble | ModelKind::Cnn => Err(Error::InvalidConfig(format!(
                        "{k} cannot be an ensemble member"
                    ))),
                    _ => train(k, x, y, hyper, seed, feature_space),
                })
                .collect::<Result<Vec<_>>>()?;
            Model::Ensemble(Ensemble::new(members)?)
        }
    };
    Ok(TrainedModel {
        feature_space,
        train_meta: TrainMeta {
            seed,
            hyperparameters: hyper.for_kind(kind),
            epochs,
        },
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Landing as L, Takeoff as T};

    fn toy() -> (Vec<Vec<f64>>, Vec<Label>) {
        let x = vec![
            vec![0.1, 0.3],
            vec![0.4, 0.1],
            vec![0.3, 0.2],
            vec![0.2, 0.4],
            vec![0.9, 0.7],
            vec![0.8, 0.9],
            vec![0.7, 0.8],
            vec![0.95, 0.6],
        ];
        (x, vec![L, L, L, L, T, T, T, T])
    }

    #[test]
    fn every_kind_round_trips_and_gives_distributions() {
        let (x, y) = toy();
        let hyper = Hyper {
            cnn: CnnHyper {
                epochs: 2,
                spec: CnnSpec {
                    input_rows: 4,
                    input_cols: 4,
                    ..CnnSpec::default()
                },
                ..CnnHyper::default()
            },
            ..Hyper::default()
        };
        for kind in ModelKind::ALL {
            let (xs, space): (Vec<Vec<f64>>, _) = if kind == ModelKind::Cnn {
                (x.iter().map(|r| r.iter().cycle().take(16).copied().collect()).collect(), FeatureSpace::Spectrogram2d)
            } else {
                (x.clone(), FeatureSpace::PooledSpectral)
            };
            let m = train(kind, &xs, &y, &hyper, 42, space).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m, "{kind}");
            for row in &xs {
                let p = m.predict_proba(row).unwrap();
                assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
                assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
                assert_eq!(back.predict_proba(row).unwrap(), p);
            }
        }
    }

    #[test]
    fn width_is_checked() {
        let (x, y) = toy();
        let m = train(ModelKind::Logreg, &x, &y, &Hyper::default(), 0, FeatureSpace::Tfidf).unwrap();
        assert!(matches!(m.predict_proba(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identical_members_vote_like_one_model() {
        let (x, y) = toy();
        let hyper = Hyper {
            ensemble_members: vec![ModelKind::Gboost; 3],
            ..Hyper::default()
        };
        let ens = train(ModelKind::Ensemble, &x, &y, &hyper, 1, FeatureSpace::Tfidf).unwrap();
        let single = train(ModelKind::Gboost, &x, &y, &hyper, 1, FeatureSpace::Tfidf).unwrap();
        for q in [[0.5, 0.5], [0.1, 0.9], [0.9, 0.1], [0.3, 0.3]] {
            assert_eq!(ens.predict(&q).unwrap(), single.predict(&q).unwrap());
            let (a, b) = (ens.predict_proba(&q).unwrap(), single.predict_proba(&q).unwrap());
            assert!((a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("rforest".parse::<ModelKind>().unwrap(), ModelKind::Rforest);
        assert!("lstm".parse::<ModelKind>().is_err());
    }
}
