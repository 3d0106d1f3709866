//! Model x pipeline x augmentation evaluation grid over one seeded split.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{evaluate, CellInfo, MetricsReport};
use super::split::train_test_split;
use crate::audio::{self, AudioClip};
use crate::augment::{add_noise, augment_dataset, AugmentConfig};
use crate::dataset::{Dataset, Example, TestPartition, TrainPartition};
use crate::denoise::{denoise, DenoiseConfig};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::models::{self, FeatureSpace, Hyper, ModelKind};
use crate::rng::{rng_for, stable_hash};
use crate::spectral::{flatten_spectrogram, pool_spectrogram, spectral_pipeline, MelVariant, Spectrogram};
use crate::text::{fit_tfidf, transform_tfidf, TfIdfModel, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pipeline {
    Textual,
    Spectral(MelVariant),
}

impl Pipeline {
    pub const SPECTRAL: Pipeline = Pipeline::Spectral(MelVariant::LogMel);

    pub fn supports(self, kind: ModelKind) -> bool {
        !(kind == ModelKind::Cnn && self == Pipeline::Textual)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::Textual => f.write_str("textual"),
            Pipeline::Spectral(v) => write!(f, "spectral/{v}"),
        }
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "textual" => Ok(Pipeline::Textual),
            "spectral" => Ok(Pipeline::SPECTRAL),
            _ => match s.strip_prefix("spectral/") {
                Some(v) => Ok(Pipeline::Spectral(v.parse()?)),
                None => Err(Error::InvalidConfig(format!("unknown pipeline {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub models: Vec<ModelKind>,
    pub pipelines: Vec<Pipeline>,
    /// Augmentation settings to evaluate, e.g. `[false, true]` for an ablation.
    pub augment: Vec<bool>,
    pub seed: u64,
    pub train_frac: f64,
    /// `None` skips denoising.
    pub denoise: Option<DenoiseConfig>,
    pub augment_cfg: AugmentConfig,
    pub hyper: Hyper,
    /// Std of Gaussian noise added to preprocessed test clips.
    pub test_noise: Option<f64>,
    /// Fail on a missing transcript instead of using an empty document.
    pub strict_transcripts: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        let mut models = ModelKind::TRADITIONAL.to_vec();
        models.push(ModelKind::Ensemble);
        models.push(ModelKind::Cnn);
        GridConfig {
            models,
            pipelines: vec![Pipeline::Textual, Pipeline::SPECTRAL],
            augment: vec![false],
            seed: 42,
            train_frac: 0.8,
            denoise: Some(DenoiseConfig::default()),
            augment_cfg: AugmentConfig::default(),
            hyper: Hyper::default(),
            test_noise: None,
            strict_transcripts: false,
        }
    }
}

/// Canonical length and rate, then spectral subtraction.
pub fn preprocess(clip: &AudioClip<f64>, cfg: Option<&DenoiseConfig>) -> Result<AudioClip<f64>> {
    let c = audio::canonicalize(clip)?;
    match cfg {
        Some(d) => denoise(&c, d),
        None => Ok(c),
    }
}

pub fn transcript_of(ex: &Example, strict: bool) -> Result<Transcript> {
    match (&ex.transcript, strict) {
        (Some(t), _) => Ok(Transcript::new(ex.id(), t.as_str())),
        (None, false) => Ok(Transcript::new(ex.id(), "")),
        (None, true) => Err(Error::MissingTranscript(ex.id().to_string())),
    }
}

pub fn fingerprint(examples: &[Example]) -> u64 {
    let ids: Vec<&str> = examples.iter().map(Example::id).collect();
    stable_hash(&ids.join("\n"))
}

/// Features of one partition under one pipeline.
#[derive(Debug, Clone, Default)]
pub struct Features {
    pub rows: Vec<Vec<f64>>,
    /// Flattened spectrograms for the CNN; empty for the textual route.
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

pub fn spectrograms(examples: &[Example], variant: MelVariant) -> Result<Vec<Spectrogram<f64>>> {
    examples.iter().map(|e| spectral_pipeline(&e.clip, variant)).collect()
}

/// Textual features; the TF-IDF model is fitted on `train` only.
pub fn textual_features(train: &[Example], test: &[Example], strict: bool) -> Result<(TfIdfModel, Features, Features)> {
    let docs = |xs: &[Example]| xs.iter().map(|e| transcript_of(e, strict)).collect::<Result<Vec<_>>>();
    let (train_docs, test_docs) = (docs(train)?, docs(test)?);
    let model = fit_tfidf(&train_docs)?;
    let feats = |ds: &[Transcript], xs: &[Example]| Features {
        rows: ds.iter().map(|d| transform_tfidf(d, &model).values).collect(),
        images: Vec::new(),
        labels: xs.iter().map(|e| e.label).collect(),
    };
    let (a, b) = (feats(&train_docs, train), feats(&test_docs, test));
    Ok((model, a, b))
}

pub fn spectral_features(examples: &[Example], variant: MelVariant, with_images: bool) -> Result<Features> {
    let specs = spectrograms(examples, variant)?;
    Ok(Features {
        rows: specs.iter().map(|s| pool_spectrogram(s).values).collect(),
        images: if with_images {
            specs.iter().map(|s| flatten_spectrogram(s).values).collect()
        } else {
            Vec::new()
        },
        labels: examples.iter().map(|e| e.label).collect(),
    })
}

/// Split once, preprocess, then evaluate every supported
/// (pipeline, model, augmentation) cell on the same test partition.
/// Rows come out grouped by pipeline, then model, then augmentation.
pub fn run_grid(ds: &Dataset, cfg: &GridConfig) -> Result<Vec<MetricsReport>> {
    if cfg.models.is_empty() || cfg.pipelines.is_empty() || cfg.augment.is_empty() {
        return Err(Error::InvalidConfig("grid needs at least one model, pipeline and augmentation setting".into()));
    }
    let (train, test) = train_test_split(ds, cfg.train_frac, cfg.seed)?;
    let prep = |c: &AudioClip<f64>| preprocess(c, cfg.denoise.as_ref());
    let train = TrainPartition(
        train
            .examples()
            .iter()
            .map(|e| Ok(Example { clip: prep(&e.clip)?, ..e.clone() }))
            .collect::<Result<_>>()?,
    );
    let mut test: TestPartition = test.map_clips(prep)?;
    if let Some(level) = cfg.test_noise {
        test = test.map_clips(|c| Ok(add_noise(c, level, &mut rng_for(cfg.seed, &format!("eval/test-noise/{}", c.id)))))?;
    }
    let test_fp = fingerprint(test.examples());
    let aug_cfg = AugmentConfig {
        seed: cfg.seed,
        ..cfg.augment_cfg
    };
    let train_sets: Vec<(bool, TrainPartition)> = cfg
        .augment
        .iter()
        .map(|&on| Ok((on, if on { augment_dataset(&train, &aug_cfg)? } else { train.clone() })))
        .collect::<Result<_>>()?;

    let wants_cnn = cfg.models.contains(&ModelKind::Cnn);
    let mut reports = Vec::new();
    for &pipeline in &cfg.pipelines {
        let mut cells = Vec::new();
        for (on, set) in &train_sets {
            let (tr, te) = match pipeline {
                Pipeline::Textual => {
                    let (_, a, b) = textual_features(set.examples(), test.examples(), cfg.strict_transcripts)?;
                    (a, b)
                }
                Pipeline::Spectral(v) => (
                    spectral_features(set.examples(), v, wants_cnn)?,
                    spectral_features(test.examples(), v, wants_cnn)?,
                ),
            };
            cells.push((*on, set.len(), tr, te));
        }
        for &kind in &cfg.models {
            if !pipeline.supports(kind) {
                continue;
            }
            for (on, n_train, tr, te) in &cells {
                let (space, xtr, xte) = match (kind, pipeline) {
                    (ModelKind::Cnn, _) => (FeatureSpace::Spectrogram2d, &tr.images, &te.images),
                    (_, Pipeline::Textual) => (FeatureSpace::Tfidf, &tr.rows, &te.rows),
                    (_, Pipeline::Spectral(_)) => (FeatureSpace::PooledSpectral, &tr.rows, &te.rows),
                };
                let model = models::train(kind, xtr, &tr.labels, &cfg.hyper, cfg.seed, space)?;
                let cell = CellInfo {
                    model: kind,
                    pipeline: pipeline.to_string(),
                    augmented: *on,
                    seed: cfg.seed,
                    n_train: *n_train,
                    test_fingerprint: test_fp,
                };
                reports.push(evaluate(&model, xte, &te.labels, cell)?);
            }
        }
    }
    Ok(reports)
}

/// `run_grid` under seeds `seed, seed + 1, ...`.
pub fn run_repeats(ds: &Dataset, cfg: &GridConfig, repeats: usize) -> Result<Vec<MetricsReport>> {
    let mut out = Vec::new();
    for r in 0..repeats.max(1) as u64 {
        out.extend(run_grid(
            ds,
            &GridConfig {
                seed: cfg.seed + r,
                ..cfg.clone()
            },
        )?);
    }
    Ok(out)
}
