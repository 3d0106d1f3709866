//! Training-time audio augmentation: phase-vocoder time stretch, additive
//! Gaussian noise, and zero-filled temporal shift.

use num_complex::Complex;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::dataset::{Example, TrainPartition};
use crate::dsp::{self, ComplexSpectrum};
use crate::error::{Error, Result};
use crate::rng::{rng_for, Rng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub stretch_factor: f64,
    pub noise_factor: f64,
    pub max_shift_frac: f64,
    pub seed: u64,
    pub stretch: bool,
    pub noise: bool,
    pub shift: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            stretch_factor: 1.1,
            noise_factor: 0.005,
            max_shift_frac: 0.10,
            seed: 42,
            stretch: true,
            noise: true,
            shift: true,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stretch_factor > 0.0) {
            return Err(Error::InvalidConfig("stretch factor must be positive".into()));
        }
        if !(self.noise_factor >= 0.0) {
            return Err(Error::InvalidConfig("noise factor must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.max_shift_frac) {
            return Err(Error::InvalidConfig("shift fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn techniques_enabled(&self) -> usize {
        usize::from(self.stretch) + usize::from(self.noise) + usize::from(self.shift)
    }
}

fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    x - two_pi * (x / two_pi).round()
}

/// Phase-vocoder time stretch. The output lasts `len / factor` samples and
/// keeps the input's pitch; callers re-apply `fix_duration` if needed.
pub fn time_stretch<T: Scalar>(clip: &AudioClip<T>, factor: f64) -> Result<AudioClip<T>> {
    if !(factor > 0.0) {
        return Err(Error::InvalidConfig("stretch factor must be positive".into()));
    }
    if clip.samples.is_empty() {
        return Ok(clip.clone());
    }
    let n_fft = dsp::N_FFT;
    let hop = dsp::HOP;
    let x: Vec<f64> = clip.samples.iter().map(|s| s.as_f64()).collect();
    let window = dsp::hann_window::<f64>(n_fft);
    let spec = dsp::stft(&x, n_fft, hop, &window, true)?;
    let out_len = (x.len() as f64 / factor).round() as usize;
    let n_out = dsp::frame_count(out_len.max(1), n_fft, hop, true);
    let last = spec.n_frames() - 1;
    let n_bins = spec.n_bins();
    let advance: Vec<f64> = (0..n_bins)
        .map(|k| 2.0 * std::f64::consts::PI * (k * hop) as f64 / n_fft as f64)
        .collect();

    let mut phase: Vec<f64> = spec.frames[0].iter().map(|c| c.arg()).collect();
    let mut frames = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let pos = j as f64 * factor;
        let i = (pos.floor() as usize).min(last);
        let next = (i + 1).min(last);
        let alpha = (pos - i as f64).clamp(0.0, 1.0);
        let (a, b) = (&spec.frames[i], &spec.frames[next]);
        let frame: Vec<Complex<f64>> = (0..n_bins)
            .map(|k| {
                let mag = (1.0 - alpha) * a[k].norm() + alpha * b[k].norm();
                Complex::from_polar(mag, phase[k])
            })
            .collect();
        frames.push(frame);
        for k in 0..n_bins {
            let dphi = wrap_phase(b[k].arg() - a[k].arg() - advance[k]);
            phase[k] += advance[k] + dphi;
        }
    }
    let stretched = ComplexSpectrum {
        frames,
        signal_len: out_len,
        ..spec
    };
    let y = dsp::istft_with_len(&stretched, out_len)?;
    Ok(clip.with_samples(y.into_iter().map(T::of).collect()))
}

/// `out[i] = in[i] + noise_factor * g_i`, `g_i` i.i.d. standard normal.
pub fn add_noise<T: Scalar>(clip: &AudioClip<T>, noise_factor: f64, rng: &mut Rng) -> AudioClip<T> {
    if noise_factor == 0.0 {
        return clip.clone();
    }
    let samples = clip
        .samples
        .iter()
        .map(|&s| {
            let g: f64 = rng.sample(StandardNormal);
            T::of(s.as_f64() + noise_factor * g)
        })
        .collect();
    clip.with_samples(samples)
}

/// Moves samples right by `shift` (left when negative); vacated samples are
/// zero and nothing wraps around.
pub fn shift_samples<T: Scalar>(clip: &AudioClip<T>, shift: isize) -> AudioClip<T> {
    let n = clip.samples.len();
    let mut out = vec![T::zero(); n];
    for (i, &s) in clip.samples.iter().enumerate() {
        let j = i as isize + shift;
        if (0..n as isize).contains(&j) {
            out[j as usize] = s;
        }
    }
    clip.with_samples(out)
}

/// Shift by an amount drawn uniformly from `[-max_frac*len, max_frac*len]`.
pub fn time_shift<T: Scalar>(clip: &AudioClip<T>, max_frac: f64, rng: &mut Rng) -> Result<AudioClip<T>> {
    if !(0.0..1.0).contains(&max_frac) {
        return Err(Error::InvalidConfig("shift fraction must be in [0, 1)".into()));
    }
    let max = (max_frac * clip.samples.len() as f64).floor() as i64;
    if max == 0 {
        return Ok(clip.clone());
    }
    let s = rng.random_range(-max..=max);
    Ok(shift_samples(clip, s as isize))
}

fn clip_rng(seed: u64, technique: &str, id: &str) -> Rng {
    rng_for(seed, &format!("augment/{technique}/{id}"))
}

/// Emits each original followed by one copy per enabled technique. Copies
/// keep the source label and transcript; each clip draws from its own
/// stream keyed by its id.
pub fn augment_dataset(train: &TrainPartition, cfg: &AugmentConfig) -> Result<TrainPartition> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(train.len() * (1 + cfg.techniques_enabled()));
    for ex in train.examples() {
        out.push(ex.clone());
        let id = ex.id();
        let derived = |clip: AudioClip<f64>, tag: &str| Example {
            clip: AudioClip {
                id: format!("{id}_aug-{tag}"),
                ..clip
            },
            label: ex.label,
            transcript: ex.transcript.clone(),
        };
        if cfg.stretch {
            out.push(derived(time_stretch(&ex.clip, cfg.stretch_factor)?, "stretch"));
        }
        if cfg.noise {
            let mut rng = clip_rng(cfg.seed, "noise", id);
            out.push(derived(add_noise(&ex.clip, cfg.noise_factor, &mut rng), "noise"));
        }
        if cfg.shift {
            let mut rng = clip_rng(cfg.seed, "shift", id);
            out.push(derived(time_shift(&ex.clip, cfg.max_shift_frac, &mut rng)?, "shift"));
        }
    }
    Ok(TrainPartition(out))
}
