//! Loading, writing and canonicalizing mono audio clips.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::Scalar;

pub const CANONICAL_RATE: u32 = 22_050;
pub const CLIP_SECONDS: f64 = 3.0;
/// Sample count of a canonical clip (3 s at 22 050 Hz).
pub const CANONICAL_LEN: usize = 66_150;

/// Zero crossings of the resampling kernel on each side, measured at the
/// lower of the two rates.
pub const SINC_ZERO_CROSSINGS: usize = 32;

/// Mono waveform with amplitudes nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
    pub label: Option<Label>,
    pub id: String,
}

impl<T: Scalar> AudioClip<T> {
    pub fn new(id: impl Into<String>, samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        let clip = AudioClip {
            samples,
            sample_rate,
            label: None,
            id: id.into(),
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidData(format!("clip {}: zero sample rate", self.id)));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidData(format!(
                "clip {}: non-finite sample at index {i}",
                self.id
            )));
        }
        Ok(())
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn rms(&self) -> T {
        rms(&self.samples)
    }

    /// Element type conversion, e.g. `f64` to `f32`.
    pub fn cast<U: Scalar>(&self) -> AudioClip<U> {
        AudioClip {
            samples: self.samples.iter().map(|&s| U::of(s.as_f64())).collect(),
            sample_rate: self.sample_rate,
            label: self.label,
            id: self.id.clone(),
        }
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<T>) -> Self {
        AudioClip {
            samples,
            sample_rate: self.sample_rate,
            label: self.label,
            id: self.id.clone(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.sample_rate == CANONICAL_RATE && self.samples.len() == CANONICAL_LEN
    }
}

pub fn rms<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let sum: T = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
    (sum / T::of_usize(x.len())).sqrt()
}

/// A clip before channel collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelClip<T> {
    pub channels: Vec<Vec<T>>,
    pub sample_rate: u32,
    pub label: Option<Label>,
    pub id: String,
}

impl<T: Scalar> MultiChannelClip<T> {
    /// Arithmetic mean of the channels. A single channel passes through.
    pub fn to_mono(self) -> AudioClip<T> {
        let samples = match self.channels.len() {
            0 => Vec::new(),
            1 => self.channels.into_iter().next().unwrap_or_default(),
            n => {
                let len = self.channels.iter().map(Vec::len).min().unwrap_or(0);
                let scale = T::one() / T::of_usize(n);
                (0..len)
                    .map(|i| self.channels.iter().fold(T::zero(), |acc, ch| acc + ch[i]) * scale)
                    .collect()
            }
        };
        AudioClip {
            samples,
            sample_rate: self.sample_rate,
            label: self.label,
            id: self.id,
        }
    }
}

pub fn to_mono<T: Scalar>(clip: MultiChannelClip<T>) -> AudioClip<T> {
    clip.to_mono()
}

fn map_hound(err: hound::Error, path: &Path) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::MalformedWav(format!("{}: truncated file", path.display()))
        }
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::FormatError(msg) => Error::MalformedWav(format!("{}: {msg}", path.display())),
        hound::Error::Unsupported => {
            Error::UnsupportedEncoding(format!("{}: not a PCM/float WAV", path.display()))
        }
        hound::Error::TooWide | hound::Error::InvalidSampleFormat => {
            Error::UnsupportedEncoding(format!("{}: unsupported sample format", path.display()))
        }
        other => Error::MalformedWav(format!("{}: {other}", path.display())),
    }
}

fn decode<R: std::io::Read, T: Scalar>(
    reader: hound::WavReader<R>,
    path: &Path,
    id: String,
) -> Result<MultiChannelClip<T>> {
    let spec = reader.spec();
    let n_ch = usize::from(spec.channels);
    if !(1..=2).contains(&n_ch) {
        return Err(Error::UnsupportedEncoding(format!(
            "{}: {n_ch} channels",
            path.display()
        )));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedEncoding(format!(
                    "{}: {}-bit float",
                    path.display(),
                    spec.bits_per_sample
                )));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound(e, path))?
        }
        hound::SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if ![8, 16, 24, 32].contains(&bits) {
                return Err(Error::UnsupportedEncoding(format!(
                    "{}: {bits}-bit integer PCM",
                    path.display()
                )));
            }
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound(e, path))?
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n_ch); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(T::of(v));
        }
    }
    Ok(MultiChannelClip {
        channels,
        sample_rate: spec.sample_rate,
        label: None,
        id,
    })
}

/// Reads a PCM WAV (8/16/24/32-bit integer or 32-bit float, 1-2 channels),
/// collapses it to mono and keeps the native sample rate. The clip id is the
/// file stem.
pub fn load_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioClip<T>> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let clip = decode::<_, T>(reader, path, id)?.to_mono();
    if clip.sample_rate == 0 {
        return Err(Error::MalformedWav(format!("{}: zero sample rate", path.display())));
    }
    Ok(clip)
}

/// Decodes WAV bytes held in memory.
pub fn decode_wav_bytes<T: Scalar>(bytes: &[u8], id: &str) -> Result<AudioClip<T>> {
    let path = Path::new(id);
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| map_hound(e, path))?;
    Ok(decode::<_, T>(reader, path, id.to_string())?.to_mono())
}

fn quantize_16<T: Scalar>(v: T) -> i16 {
    let q = (v.as_f64() * 32768.0).round();
    q.clamp(-32768.0, 32767.0) as i16
}

fn wav_spec(sample_rate: u32) -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

/// Encodes a clip as 16-bit mono PCM WAV bytes.
pub fn encode_wav_bytes<T: Scalar>(clip: &AudioClip<T>) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut buf, wav_spec(clip.sample_rate))
            .map_err(|e| Error::Serialization(e.to_string()))?;
        for &s in &clip.samples {
            w.write_sample(quantize_16(s))
                .map_err(|e| Error::Serialization(e.to_string()))?;
        }
        w.finalize().map_err(|e| Error::Serialization(e.to_string()))?;
    }
    Ok(buf.into_inner())
}

/// Writes a clip as 16-bit mono PCM.
pub fn write_wav<T: Scalar>(path: impl AsRef<Path>, clip: &AudioClip<T>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav_bytes(clip)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Output length for a rate change: `round(len * target / source)`.
pub fn resampled_len(len: usize, source: u32, target: u32) -> usize {
    let num = len as u128 * u128::from(target);
    let den = u128::from(source);
    ((num + den / 2) / den) as usize
}

/// Band-limited resampling with a Hann-windowed sinc kernel.
///
/// The kernel cutoff sits at the lower of the two Nyquist frequencies and
/// spans [`SINC_ZERO_CROSSINGS`] zero crossings per side at that rate. Each
/// output sample is normalized by its kernel weight sum, so DC passes with
/// unit gain even where the kernel runs off the clip edges.
pub fn resample<T: Scalar>(clip: &AudioClip<T>, target_rate: u32) -> Result<AudioClip<T>> {
    if target_rate == 0 {
        return Err(Error::InvalidConfig("target sample rate must be positive".into()));
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let src = f64::from(clip.sample_rate);
    let dst = f64::from(target_rate);
    let out_len = resampled_len(clip.samples.len(), clip.sample_rate, target_rate);
    let x: Vec<f64> = clip.samples.iter().map(|s| s.as_f64()).collect();
    let n = x.len() as isize;

    // cutoff relative to the source Nyquist
    let cutoff = (dst / src).min(1.0);
    let radius = SINC_ZERO_CROSSINGS as f64 / cutoff;
    let step = src / dst;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let t = j as f64 * step;
        let lo = ((t - radius).ceil() as isize).max(0);
        let hi = ((t + radius).floor() as isize).min(n - 1);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for i in lo..=hi {
            let d = i as f64 - t;
            let w = kernel(d, cutoff, radius);
            acc += w * x[i as usize];
            wsum += w;
        }
        out.push(if wsum.abs() > 1e-12 { acc / wsum } else { 0.0 });
    }
    Ok(AudioClip {
        samples: out.into_iter().map(T::of).collect(),
        sample_rate: target_rate,
        label: clip.label,
        id: clip.id.clone(),
    })
}

fn kernel(d: f64, cutoff: f64, radius: f64) -> f64 {
    if d.abs() >= radius {
        return 0.0;
    }
    let arg = std::f64::consts::PI * cutoff * d;
    let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
    let window = 0.5 * (1.0 + (std::f64::consts::PI * d / radius).cos());
    cutoff * sinc * window
}

/// Pads with zeros or truncates at the end to exactly `round(seconds * rate)`
/// samples.
pub fn fix_duration<T: Scalar>(clip: &AudioClip<T>, seconds: f64) -> AudioClip<T> {
    let target = (seconds * f64::from(clip.sample_rate)).round() as usize;
    let mut samples = clip.samples.clone();
    samples.resize(target, T::zero());
    clip.with_samples(samples)
}

/// Resample to 22 050 Hz and pad/truncate to 3 s.
pub fn canonicalize<T: Scalar>(clip: &AudioClip<T>) -> Result<AudioClip<T>> {
    let resampled = resample(clip, CANONICAL_RATE)?;
    Ok(fix_duration(&resampled, CLIP_SECONDS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, rate: u32, len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| (2.0 * PI * freq * i as f64 / f64::from(rate)).sin())
            .collect()
    }

    fn clip(samples: Vec<f64>, rate: u32) -> AudioClip<f64> {
        AudioClip::new("t", samples, rate).unwrap()
    }

    #[test]
    fn mono_passthrough() {
        let mc = MultiChannelClip {
            channels: vec![vec![0.1, -0.3, 0.7]],
            sample_rate: 8000,
            label: None,
            id: "m".into(),
        };
        assert_eq!(mc.to_mono().samples, vec![0.1, -0.3, 0.7]);
    }

    #[test]
    fn stereo_mean() {
        let mc = |a: Vec<f64>, b: Vec<f64>| MultiChannelClip {
            channels: vec![a, b],
            sample_rate: 8000,
            label: None,
            id: "s".into(),
        };
        assert_eq!(mc(vec![1.0], vec![-1.0]).to_mono().samples, vec![0.0]);
        let out = mc(vec![0.2, 0.4], vec![0.6, 0.0]).to_mono().samples;
        assert!((out[0] - 0.4).abs() < 1e-15 && (out[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn resample_identity_is_bit_exact() {
        let c = clip(sine(440.0, 16000, 1000), 16000);
        assert_eq!(resample(&c, 16000).unwrap(), c);
    }

    #[test]
    fn resample_length_ratio() {
        let c = clip(vec![0.0; 8000], 8000);
        assert_eq!(resample(&c, 22050).unwrap().samples.len(), 22050);
        assert!(resample(&c, 0).is_err());
    }

    #[test]
    fn downsample_sine_matches_analytic() {
        let c = clip(sine(1000.0, 44100, 44100), 44100);
        let out = resample(&c, 22050).unwrap();
        let expected = sine(1000.0, 22050, out.samples.len());
        // trim one kernel radius (64 output samples would be ~3 ms) at both ends
        let trim = 110;
        let max_err = out.samples[trim..out.samples.len() - trim]
            .iter()
            .zip(&expected[trim..expected.len() - trim])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn fix_duration_pads_truncates_and_is_idempotent() {
        let two = clip(vec![0.25; 44100], 22050);
        let fixed = fix_duration(&two, 3.0);
        assert_eq!(fixed.samples.len(), CANONICAL_LEN);
        assert!(fixed.samples[44100..].iter().all(|&s| s == 0.0));
        let five: Vec<f64> = (0..110_250).map(|i| i as f64 * 1e-6).collect();
        let five = clip(five.clone(), 22050);
        let cut = fix_duration(&five, 3.0);
        assert_eq!(cut.samples[..], five.samples[..CANONICAL_LEN]);
        let exact = clip(vec![0.5; CANONICAL_LEN], 22050);
        assert_eq!(fix_duration(&exact, 3.0), exact);
        assert_eq!(fix_duration(&fixed, 3.0), fixed);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(AudioClip::new("x", vec![0.0, f64::NAN], 8000).is_err());
        assert!(AudioClip::<f64>::new("x", vec![0.0], 0).is_err());
    }
}
