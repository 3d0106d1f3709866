//! Transcripts, the ASR boundary, and TF-IDF vectorization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::audio::{self, AudioClip};
use crate::error::{Error, Result};
use crate::feature::FeatureVector;

/// Lowercase, split on anything that is not an ASCII letter or digit, drop
/// empty pieces. Digits are kept: runway numbers carry signal.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub clip_id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Transcript {
    pub fn new(clip_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Transcript {
            clip_id: clip_id.into(),
            tokens: tokenize(&text),
            text,
        }
    }
}

/// Source of transcripts for clips.
pub trait AsrProvider {
    fn transcribe_text(&self, clip: &AudioClip<f64>) -> Result<String>;
}

pub fn transcribe(clip: &AudioClip<f64>, provider: &dyn AsrProvider) -> Result<Transcript> {
    Ok(Transcript::new(clip.id.clone(), provider.transcribe_text(clip)?))
}

/// Reads `<dir>/<id>.txt`.
#[derive(Debug, Clone)]
pub struct SidecarAsr {
    pub dir: PathBuf,
}

impl SidecarAsr {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SidecarAsr { dir: dir.into() }
    }
}

pub fn sidecar_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.txt"))
}

impl AsrProvider for SidecarAsr {
    fn transcribe_text(&self, clip: &AudioClip<f64>) -> Result<String> {
        let path = sidecar_path(&self.dir, &clip.id);
        match std::fs::read_to_string(&path) {
            Ok(s) => Ok(s.trim_end().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(Error::MissingTranscript(clip.id.clone()))
            }
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

/// In-memory `clip id -> text` map.
#[derive(Debug, Clone, Default)]
pub struct FixtureAsr {
    pub texts: HashMap<String, String>,
}

impl FixtureAsr {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        FixtureAsr {
            texts: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

impl AsrProvider for FixtureAsr {
    fn transcribe_text(&self, clip: &AudioClip<f64>) -> Result<String> {
        self.texts
            .get(&clip.id)
            .cloned()
            .ok_or_else(|| Error::MissingTranscript(clip.id.clone()))
    }
}

/// POSTs the clip as `audio/wav` and expects `{"transcript": "..."}` back.
#[derive(Debug, Clone)]
pub struct HttpAsr {
    pub endpoint: String,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct AsrResponse {
    transcript: String,
}

impl HttpAsr {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        HttpAsr {
            endpoint: endpoint.into(),
            timeout,
        }
    }
}

impl AsrProvider for HttpAsr {
    fn transcribe_text(&self, clip: &AudioClip<f64>) -> Result<String> {
        let body = audio::encode_wav_bytes(clip)?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent
            .post(&self.endpoint)
            .header("Content-Type", "audio/wav")
            .send(&body[..])
            .map_err(|e| Error::AsrService(format!("{}: {e}", self.endpoint)))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::AsrService(format!("reading response: {e}")))?;
        if !status.is_success() {
            return Err(Error::AsrService(format!("status {}: {}", status.as_u16(), text.trim())));
        }
        let parsed: AsrResponse = serde_json::from_str(&text)
            .map_err(|e| Error::AsrService(format!("malformed response: {e}")))?;
        Ok(parsed.transcript)
    }
}

/// Fitted vocabulary and inverse document frequencies,
/// `idf(t) = ln(N / df(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub doc_count: usize,
}

impl TfIdfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TfIdfModel = serde_json::from_str(s)?;
        if m.vocabulary.len() != m.idf.len() || m.vocabulary.values().any(|&i| i >= m.idf.len()) {
            return Err(Error::InvalidData("vocabulary and idf disagree".into()));
        }
        Ok(m)
    }
}

/// Vocabulary in lexicographic order; document frequency counts each
/// document at most once per term.
pub fn fit_tfidf(corpus: &[Transcript]) -> Result<TfIdfModel> {
    if corpus.iter().all(|d| d.tokens.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let distinct: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n = corpus.len() as f64;
    let vocabulary = df.keys().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
    let idf = df.values().map(|&d| (n / d as f64).ln()).collect();
    Ok(TfIdfModel {
        vocabulary,
        idf,
        doc_count: corpus.len(),
    })
}

/// Raw term count times idf; out-of-vocabulary tokens are ignored.
pub fn transform_tfidf(doc: &Transcript, model: &TfIdfModel) -> FeatureVector {
    let mut v = FeatureVector::zeros(model.dim());
    for t in &doc.tokens {
        if let Some(&i) = model.vocabulary.get(t) {
            v.values[i] += 1.0;
        }
    }
    for (x, idf) in v.values.iter_mut().zip(&model.idf) {
        *x *= idf;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(s: &str) -> Transcript {
        Transcript::new("d", s)
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(
            tokenize("Turning crosswind for runway 12."),
            vec!["turning", "crosswind", "for", "runway", "12"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("TAKE-OFF!!"), vec!["take", "off"]);
        assert_eq!(tokenize("caf\u{e9} 3000ft"), vec!["caf", "3000ft"]);
    }

    #[test]
    fn idf_boundaries() {
        let m = fit_tfidf(&[doc("a b"), doc("b c")]).unwrap();
        let vocab: Vec<_> = m.vocabulary.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        assert_eq!(vocab, vec![("a", 0), ("b", 1), ("c", 2)]);
        assert_eq!(m.idf[1], 0.0);
        assert!((m.idf[0] - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(m.doc_count, 2);
    }

    #[test]
    fn transform_examples() {
        let m = fit_tfidf(&[doc("a b"), doc("b c")]).unwrap();
        assert_eq!(transform_tfidf(&doc(""), &m), FeatureVector::zeros(3));
        assert_eq!(transform_tfidf(&doc("zzz yyy"), &m), FeatureVector::zeros(3));
        let v = transform_tfidf(&doc("a a"), &m);
        assert!((v.values[0] - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((v.values[0] - 1.3863).abs() < 1e-4);
        assert_eq!(&v.values[1..], &[0.0, 0.0]);
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(fit_tfidf(&[]), Err(Error::EmptyCorpus)));
        assert!(matches!(fit_tfidf(&[doc(""), doc("!!")]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn fixture_provider() {
        let asr = FixtureAsr::new([("c1", "turning crosswind")]);
        let clip = AudioClip::new("c1", vec![0.0; 10], 22050).unwrap();
        let t = transcribe(&clip, &asr).unwrap();
        assert_eq!(t.tokens, vec!["turning", "crosswind"]);
        let other = AudioClip::new("c2", vec![0.0; 10], 22050).unwrap();
        assert!(matches!(transcribe(&other, &asr), Err(Error::MissingTranscript(_))));
    }

    #[test]
    fn model_json_round_trip() {
        let m = fit_tfidf(&[doc("on final runway 30"), doc("departing runway 12")]).unwrap();
        let back = TfIdfModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
