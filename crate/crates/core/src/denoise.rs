//! Spectral-subtraction noise reduction.
//!
//! The noise magnitude per bin is the mean STFT magnitude over the leading
//! frames, which are assumed to hold background noise only. It is subtracted
//! from every frame (clamped at zero), the magnitudes are smoothed across
//! time, and the waveform is rebuilt with the original phases.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::dsp::{self, ComplexSpectrum};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-bin noise magnitude estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile<T> {
    pub magnitudes: Vec<T>,
    pub frames_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingOrder {
    SubtractThenSmooth,
    SmoothThenSubtract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    /// Leading frames used for the noise estimate.
    pub noise_frames: usize,
    /// Odd moving-average width in frames; 1 disables smoothing.
    pub smooth_width: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub order: SmoothingOrder,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            noise_frames: 5,
            smooth_width: 3,
            n_fft: dsp::N_FFT,
            hop: dsp::HOP,
            order: SmoothingOrder::SubtractThenSmooth,
        }
    }
}

/// Mean magnitude over the first `frames` frames.
pub fn estimate_noise_profile<T: Scalar>(
    spec: &ComplexSpectrum<T>,
    frames: usize,
) -> Result<NoiseProfile<T>> {
    if frames == 0 || frames > spec.n_frames() {
        return Err(Error::TooFewFrames {
            requested: frames,
            available: spec.n_frames(),
        });
    }
    let mut magnitudes = vec![T::zero(); spec.n_bins()];
    for frame in &spec.frames[..frames] {
        for (m, c) in magnitudes.iter_mut().zip(frame) {
            *m += c.norm();
        }
    }
    let scale = T::one() / T::of_usize(frames);
    magnitudes.iter_mut().for_each(|m| *m *= scale);
    Ok(NoiseProfile {
        magnitudes,
        frames_used: frames,
    })
}

fn check_profile<T: Scalar>(spec: &ComplexSpectrum<T>, profile: &NoiseProfile<T>) -> Result<()> {
    if profile.magnitudes.len() != spec.n_bins() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_bins(),
            actual: profile.magnitudes.len(),
        });
    }
    Ok(())
}

fn subtract_magnitudes<T: Scalar>(mags: &mut [Vec<T>], profile: &NoiseProfile<T>) {
    for frame in mags.iter_mut() {
        for (m, &n) in frame.iter_mut().zip(&profile.magnitudes) {
            *m = (*m - n).max(T::zero());
        }
    }
}

/// `|X^(t,f)| = max(|X(t,f)| - |N(f)|, 0)` with the phase of `X` kept.
pub fn spectral_subtract<T: Scalar>(
    spec: &ComplexSpectrum<T>,
    profile: &NoiseProfile<T>,
) -> Result<ComplexSpectrum<T>> {
    check_profile(spec, profile)?;
    if profile.magnitudes.iter().all(|m| m.is_zero()) {
        return Ok(spec.clone());
    }
    let mut mags = spec.magnitudes();
    subtract_magnitudes(&mut mags, profile);
    Ok(spec.from_polar_like(&mags, &spec.phases()))
}

/// Moving average over `width` frames, truncated at the clip boundaries.
pub fn smooth_frames<T: Scalar>(mags: &[Vec<T>], width: usize) -> Result<Vec<Vec<T>>> {
    if width == 0 || width % 2 == 0 {
        return Err(Error::EvenWidth(width));
    }
    let n = mags.len();
    if width == 1 || n == 0 {
        return Ok(mags.to_vec());
    }
    let half = width / 2;
    let n_bins = mags[0].len();
    Ok((0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(n - 1);
            let count = T::of_usize(hi - lo + 1);
            (0..n_bins)
                .map(|f| mags[lo..=hi].iter().fold(T::zero(), |acc, row| acc + row[f]) / count)
                .collect()
        })
        .collect())
}

/// Temporal smoothing of magnitudes; phases are left untouched.
pub fn smooth_magnitudes<T: Scalar>(
    spec: &ComplexSpectrum<T>,
    width: usize,
) -> Result<ComplexSpectrum<T>> {
    let smoothed = smooth_frames(&spec.magnitudes(), width)?;
    if width == 1 {
        return Ok(spec.clone());
    }
    Ok(spec.from_polar_like(&smoothed, &spec.phases()))
}

/// Full denoising pass; the output has the input's length and rate.
pub fn denoise<T: Scalar>(clip: &AudioClip<T>, cfg: &DenoiseConfig) -> Result<AudioClip<T>> {
    let window = dsp::hann_window(cfg.n_fft);
    let spec = dsp::stft(&clip.samples, cfg.n_fft, cfg.hop, &window, true)?;
    let frames = cfg.noise_frames.min(spec.n_frames());
    let profile = estimate_noise_profile(&spec, frames)?;
    let phases = spec.phases();
    let mut mags = spec.magnitudes();
    match cfg.order {
        SmoothingOrder::SubtractThenSmooth => {
            subtract_magnitudes(&mut mags, &profile);
            mags = smooth_frames(&mags, cfg.smooth_width)?;
        }
        SmoothingOrder::SmoothThenSubtract => {
            mags = smooth_frames(&mags, cfg.smooth_width)?;
            subtract_magnitudes(&mut mags, &profile);
        }
    }
    let cleaned = spec.from_polar_like(&mags, &phases);
    Ok(clip.with_samples(dsp::istft(&cleaned)?))
}
