//! Mel filterbank and the fixed-shape (log-)Mel spectrogram features.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::{self, AudioClip, CANONICAL_RATE};
use crate::dsp;
use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::scalar::Scalar;

pub const N_MELS: usize = 128;
pub const N_FRAMES: usize = 130;
pub const DB_EPSILON: f64 = 1e-10;

/// HTK mel scale, `2595 log10(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MelScale {
    Htk,
}

/// Triangular filters on the mel scale, one row per band over the
/// `n_fft/2 + 1` FFT bins. Each triangle has unit height at its centre
/// frequency; there is no area normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterBank<T> {
    pub weights: Vec<Vec<T>>,
    /// `n_mels + 2` band edges in Hz, equally spaced in mel.
    pub breakpoints_hz: Vec<f64>,
    pub fmin: f64,
    pub fmax: f64,
    pub sample_rate: u32,
    pub n_fft: usize,
    pub scale: MelScale,
}

impl<T: Scalar> MelFilterBank<T> {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32, fmin: f64, fmax: f64) -> Result<Self> {
        build_mel_filterbank(n_mels, n_fft, sample_rate, fmin, fmax)
    }

    pub fn n_mels(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.breakpoints_hz[band + 1]
    }

    /// Continuous triangle response of `band` at `hz`.
    pub fn response(&self, band: usize, hz: f64) -> f64 {
        triangle(
            hz,
            self.breakpoints_hz[band],
            self.breakpoints_hz[band + 1],
            self.breakpoints_hz[band + 2],
        )
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate) / self.n_fft as f64
    }
}

fn triangle(f: f64, lo: f64, center: f64, hi: f64) -> f64 {
    if f <= lo || f >= hi {
        0.0
    } else if f <= center {
        (f - lo) / (center - lo)
    } else {
        (hi - f) / (hi - center)
    }
}

pub fn build_mel_filterbank<T: Scalar>(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterBank<T>> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if n_mels == 0 {
        return Err(Error::InvalidRange("n_mels must be positive".into()));
    }
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::InvalidRange(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got fmin={fmin}, fmax={fmax}"
        )));
    }
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let breakpoints_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bin_hz = f64::from(sample_rate) / n_fft as f64;
    let weights = (0..n_mels)
        .map(|m| {
            (0..n_bins)
                .map(|k| {
                    T::of(triangle(
                        k as f64 * bin_hz,
                        breakpoints_hz[m],
                        breakpoints_hz[m + 1],
                        breakpoints_hz[m + 2],
                    ))
                })
                .collect()
        })
        .collect();
    Ok(MelFilterBank {
        weights,
        breakpoints_hz,
        fmin,
        fmax,
        sample_rate,
        n_fft,
        scale: MelScale::Htk,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecScale {
    Power,
    Db,
    Normalized,
}

impl SpecScale {
    fn code(self) -> u8 {
        match self {
            SpecScale::Power => 0,
            SpecScale::Db => 1,
            SpecScale::Normalized => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(SpecScale::Power),
            1 => Ok(SpecScale::Db),
            2 => Ok(SpecScale::Normalized),
            _ => Err(Error::InvalidData(format!("unknown spectrogram scale code {c}"))),
        }
    }
}

/// Mel-band by frame matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub values: Vec<T>,
    pub rows: usize,
    pub cols: usize,
    pub scale: SpecScale,
    pub clip_id: String,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn new(values: Vec<T>, rows: usize, cols: usize, scale: SpecScale) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        Ok(Spectrogram {
            values,
            rows,
            cols,
            scale,
            clip_id: String::new(),
        })
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Zero-pad or truncate the time axis to `cols` frames.
    pub fn fit_frames(&self, cols: usize) -> Self {
        let mut values = vec![T::zero(); self.rows * cols];
        let keep = cols.min(self.cols);
        for r in 0..self.rows {
            values[r * cols..r * cols + keep].copy_from_slice(&self.row(r)[..keep]);
        }
        Spectrogram {
            values,
            rows: self.rows,
            cols,
            scale: self.scale,
            clip_id: self.clip_id.clone(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Spectrogram<U> {
        Spectrogram {
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
            rows: self.rows,
            cols: self.cols,
            scale: self.scale,
            clip_id: self.clip_id.clone(),
        }
    }
}

/// `S[m][n] = sum_k |X(k, n)|^2 H_m(k)` over a centred Hann STFT, with the
/// time axis forced to `n_frames` columns.
pub fn mel_spectrogram<T: Scalar>(
    clip: &AudioClip<T>,
    bank: &MelFilterBank<T>,
    n_fft: usize,
    hop: usize,
    n_frames: usize,
) -> Result<Spectrogram<T>> {
    if bank.n_bins() != n_fft / 2 + 1 {
        return Err(Error::DimensionMismatch {
            expected: n_fft / 2 + 1,
            actual: bank.n_bins(),
        });
    }
    let window = dsp::hann_window(n_fft);
    let spec = dsp::stft(&clip.samples, n_fft, hop, &window, true)?;
    let rows = bank.n_mels();
    let cols = spec.n_frames();
    let power: Vec<Vec<T>> = spec
        .frames
        .iter()
        .map(|f| f.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    let mut values = vec![T::zero(); rows * cols];
    for (m, filt) in bank.weights.iter().enumerate() {
        let support: Vec<(usize, T)> = filt
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .collect();
        for (n, p) in power.iter().enumerate() {
            values[m * cols + n] = support.iter().fold(T::zero(), |acc, &(k, w)| acc + p[k] * w);
        }
    }
    let mut out = Spectrogram::new(values, rows, cols, SpecScale::Power)?;
    out.clip_id = clip.id.clone();
    Ok(out.fit_frames(n_frames))
}

/// `10 log10(S + eps)`.
pub fn power_to_db<T: Scalar>(spec: &Spectrogram<T>, eps: T) -> Result<Spectrogram<T>> {
    if spec.values.iter().any(|&v| v < T::zero()) {
        return Err(Error::NegativeInput);
    }
    let ten = T::of(10.0);
    Ok(Spectrogram {
        values: spec.values.iter().map(|&v| ten * (v + eps).log10()).collect(),
        scale: SpecScale::Db,
        ..spec.clone()
    })
}

/// Min-max scaling to [0, 1]; a constant matrix maps to all zeros.
pub fn normalize_minmax<T: Scalar>(spec: &Spectrogram<T>) -> Spectrogram<T> {
    let min = spec.values.iter().copied().fold(T::infinity(), T::min);
    let max = spec.values.iter().copied().fold(T::neg_infinity(), T::max);
    let range = max - min;
    let values = if spec.values.is_empty() || !(range > T::zero()) {
        vec![T::zero(); spec.values.len()]
    } else {
        spec.values
            .iter()
            .map(|&v| ((v - min) / range).max(T::zero()).min(T::one()))
            .collect()
    };
    Spectrogram {
        values,
        scale: SpecScale::Normalized,
        ..spec.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MelVariant {
    #[serde(rename = "mel")]
    Mel,
    #[serde(rename = "log-mel")]
    LogMel,
}

impl MelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            MelVariant::Mel => "mel",
            MelVariant::LogMel => "log-mel",
        }
    }
}

impl std::fmt::Display for MelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mel" => Ok(MelVariant::Mel),
            "log-mel" | "logmel" | "log_mel" => Ok(MelVariant::LogMel),
            other => Err(Error::InvalidConfig(format!("unknown mel variant {other:?}"))),
        }
    }
}

/// Fixed feature geometry: 2048-point FFT, hop 512, 128 HTK bands over
/// 0..11025 Hz, 130 frames.
#[derive(Debug, Clone)]
pub struct SpectralExtractor<T> {
    pub bank: MelFilterBank<T>,
    pub n_fft: usize,
    pub hop: usize,
    pub n_frames: usize,
    pub eps: T,
}

impl<T: Scalar> SpectralExtractor<T> {
    pub fn standard() -> Self {
        let bank = build_mel_filterbank(
            N_MELS,
            dsp::N_FFT,
            CANONICAL_RATE,
            0.0,
            f64::from(CANONICAL_RATE) / 2.0,
        )
        .expect("standard filterbank parameters are valid");
        SpectralExtractor {
            bank,
            n_fft: dsp::N_FFT,
            hop: dsp::HOP,
            n_frames: N_FRAMES,
            eps: T::of(DB_EPSILON),
        }
    }

    /// Canonicalize, then Mel power (optionally dB), then min-max.
    pub fn extract(&self, clip: &AudioClip<T>, variant: MelVariant) -> Result<Spectrogram<T>> {
        let canonical = audio::canonicalize(clip)?;
        let power = mel_spectrogram(&canonical, &self.bank, self.n_fft, self.hop, self.n_frames)?;
        let scaled = match variant {
            MelVariant::Mel => power,
            MelVariant::LogMel => power_to_db(&power, self.eps)?,
        };
        Ok(normalize_minmax(&scaled))
    }
}

/// Raw clip to a normalized 128x130 (log-)Mel spectrogram.
pub fn spectral_pipeline<T: Scalar>(clip: &AudioClip<T>, variant: MelVariant) -> Result<Spectrogram<T>> {
    SpectralExtractor::standard().extract(clip, variant)
}

/// Per-band mean followed by per-band (population) standard deviation
/// over time: `2 * rows` values.
pub fn pool_spectrogram<T: Scalar>(spec: &Spectrogram<T>) -> FeatureVector {
    let mut means = Vec::with_capacity(spec.rows);
    let mut stds = Vec::with_capacity(spec.rows);
    for r in 0..spec.rows {
        let row: Vec<f64> = spec.row(r).iter().map(|v| v.as_f64()).collect();
        let n = row.len().max(1) as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    means.extend(stds);
    FeatureVector::new(means)
}

/// Row-major flattening of the whole matrix.
pub fn flatten_spectrogram<T: Scalar>(spec: &Spectrogram<T>) -> FeatureVector {
    FeatureVector::new(spec.values.iter().map(|v| v.as_f64()).collect())
}

pub const MELS_MAGIC: &[u8; 4] = b"MELS";
pub const MELS_VERSION: u16 = 1;

/// Cache encoding: `"MELS"`, version u16, rows u16, cols u16, scale u8,
/// then row-major little-endian f32 values.
pub fn encode_mels<T: Scalar>(spec: &Spectrogram<T>) -> Result<Vec<u8>> {
    let rows = u16::try_from(spec.rows).map_err(|_| Error::InvalidData("too many rows".into()))?;
    let cols = u16::try_from(spec.cols).map_err(|_| Error::InvalidData("too many cols".into()))?;
    let mut out = Vec::with_capacity(11 + 4 * spec.values.len());
    out.extend_from_slice(MELS_MAGIC);
    out.extend_from_slice(&MELS_VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    out.push(spec.scale.code());
    for v in &spec.values {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_mels(bytes: &[u8]) -> Result<Spectrogram<f32>> {
    if bytes.len() < 11 || &bytes[..4] != MELS_MAGIC {
        return Err(Error::InvalidData("not a MELS file".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let version = u16_at(4);
    if version != MELS_VERSION {
        return Err(Error::InvalidData(format!("unsupported MELS version {version}")));
    }
    let rows = usize::from(u16_at(6));
    let cols = usize::from(u16_at(8));
    let scale = SpecScale::from_code(bytes[10])?;
    let body = &bytes[11..];
    if body.len() != 4 * rows * cols {
        return Err(Error::InvalidData(format!(
            "MELS body holds {} bytes, expected {}",
            body.len(),
            4 * rows * cols
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Spectrogram::new(values, rows, cols, scale)
}

pub fn write_mels<T: Scalar>(path: impl AsRef<Path>, spec: &Spectrogram<T>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_mels(spec)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_mels(path: impl AsRef<Path>) -> Result<Spectrogram<f32>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut spec = decode_mels(&bytes)?;
    spec.clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(spec)
}
