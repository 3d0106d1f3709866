//! Classification of pilot radio transmissions into landing and takeoff
//! intent from two feature routes: ASR transcripts vectorized with TF-IDF,
//! and normalized (log-)Mel spectrograms.
//!
//! Signal-processing types are generic over the float type ([`Scalar`]);
//! model training runs in `f64`. The aliases below name the concrete types
//! used by the end-to-end pipeline.

pub mod audio;
pub mod augment;
pub mod dataset;
pub mod datagen;
pub mod denoise;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod feature;
pub mod label;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod text;

pub use error::{Error, ErrorClass, Result};
pub use feature::FeatureVector;
pub use label::Label;
pub use scalar::Scalar;

/// Working precision of the pipeline.
pub type Real = f64;

pub type Clip = audio::AudioClip<Real>;
pub type Clip32 = audio::AudioClip<f32>;
pub type Spectrum = dsp::ComplexSpectrum<Real>;
pub type Spectrum32 = dsp::ComplexSpectrum<f32>;
pub type MelSpectrogram = spectral::Spectrogram<Real>;
pub type MelSpectrogram32 = spectral::Spectrogram<f32>;
pub type FilterBank = spectral::MelFilterBank<Real>;
pub type NoiseProfile = denoise::NoiseProfile<Real>;
