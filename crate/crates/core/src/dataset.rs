//! Labeled examples and the on-disk corpus layout:
//! `<dir>/<id>.wav`, optional `<dir>/<id>.txt` transcript, and
//! `<dir>/labels.csv` with an `id,label` header.

use std::path::Path;

use crate::audio::{self, AudioClip};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::text::sidecar_path;

pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub clip: AudioClip<f64>,
    pub label: Label,
    pub transcript: Option<String>,
}

impl Example {
    pub fn id(&self) -> &str {
        &self.clip.id
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Self {
        Dataset { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    /// Treat the whole dataset as training data, e.g. for offline
    /// augmentation of a corpus that has already been split.
    pub fn into_training(self) -> TrainPartition {
        TrainPartition(self.examples)
    }
}

/// Training side of a split. Augmentation only accepts this type.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPartition(pub(crate) Vec<Example>);

/// Held-out side of a split; never augmented.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPartition(pub(crate) Vec<Example>);

impl TrainPartition {
    pub fn examples(&self) -> &[Example] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TestPartition {
    pub fn examples(&self) -> &[Example] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Evaluation-time perturbation of the held-out clips.
    pub fn map_clips<F>(&self, mut f: F) -> Result<TestPartition>
    where
        F: FnMut(&AudioClip<f64>) -> Result<AudioClip<f64>>,
    {
        let examples = self
            .0
            .iter()
            .map(|e| {
                Ok(Example {
                    clip: f(&e.clip)?,
                    ..e.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(TestPartition(examples))
    }
}

pub fn read_labels(dir: &Path) -> Result<Vec<(String, Label)>> {
    let path = dir.join(LABELS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, label) = line.split_once(',').ok_or_else(|| {
            Error::InvalidData(format!("{}:{}: expected `id,label`", path.display(), lineno + 1))
        })?;
        if lineno == 0 && id.trim() == "id" {
            continue;
        }
        out.push((id.trim().to_string(), label.parse()?));
    }
    Ok(out)
}

pub fn write_labels(dir: &Path, rows: &[(String, Label)]) -> Result<()> {
    let path = dir.join(LABELS_FILE);
    let mut s = String::from("id,label\n");
    for (id, label) in rows {
        s.push_str(&format!("{id},{label}\n"));
    }
    std::fs::write(&path, s).map_err(|e| Error::io(&path, e))
}

/// Loads every clip listed in `labels.csv`. Sidecar transcripts are
/// attached when present.
pub fn load_corpus(dir: &Path) -> Result<Dataset> {
    let labels = read_labels(dir)?;
    let mut examples = Vec::with_capacity(labels.len());
    for (id, label) in labels {
        let mut clip: AudioClip<f64> = audio::load_wav(dir.join(format!("{id}.wav")))?;
        clip.id = id.clone();
        clip.label = Some(label);
        let side = sidecar_path(dir, &id);
        let transcript = if side.exists() {
            Some(
                std::fs::read_to_string(&side)
                    .map_err(|e| Error::io(&side, e))?
                    .trim_end()
                    .to_string(),
            )
        } else {
            None
        };
        examples.push(Example {
            clip,
            label,
            transcript,
        });
    }
    Ok(Dataset { examples })
}

/// Writes WAVs, sidecars (when a transcript exists) and `labels.csv`.
pub fn write_corpus(dir: &Path, examples: &[Example]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for ex in examples {
        audio::write_wav(dir.join(format!("{}.wav", ex.id())), &ex.clip)?;
        if let Some(t) = &ex.transcript {
            let p = sidecar_path(dir, ex.id());
            std::fs::write(&p, format!("{t}\n")).map_err(|e| Error::io(&p, e))?;
        }
    }
    let rows: Vec<_> = examples.iter().map(|e| (e.id().to_string(), e.label)).collect();
    write_labels(dir, &rows)
}
