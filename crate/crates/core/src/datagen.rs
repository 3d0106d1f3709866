//! Synthetic labeled corpus: class-specific tone motifs over pink noise,
//! with templated pilot-style transcripts.
//!
//! Landing clips carry descending tone sequences in a low band; takeoff
//! clips carry ascending sequences in a higher band. Every clip opens with
//! a noise-only lead so the denoiser can estimate the background.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, CANONICAL_RATE};
use crate::dataset::{write_corpus, Dataset, Example};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::rng::{rng_for, Rng};

pub const LANDING_PHRASES: &[&str] = &[
    "Turning crosswind for runway {NN}.",
    "Reduce speed and descend to {ALT} feet for landing.",
    "Entering left downwind for runway {NN}, full stop landing.",
    "Turning base for runway {NN}.",
    "On final for runway {NN}, landing.",
    "Ten miles south, inbound for landing runway {NN}.",
];

pub const TAKEOFF_PHRASES: &[&str] = &[
    "Departing runway {NN} and staying in the pattern.",
    "Taxi into position and hold for takeoff.",
    "Taking off runway {NN}, departing to the north.",
    "Rolling runway {NN} for takeoff.",
    "Departing upwind runway {NN}, climbing to {ALT}.",
    "Holding short runway {NN}, ready for departure.",
];

const AIRPORTS: &[&str] = &["Hillsboro", "Cedar Valley", "Lakeview", "Marion", "Sanford", "Pine Ridge"];
const AIRCRAFT: &[&str] = &["Cessna", "Skyhawk", "Piper", "Cherokee", "Bonanza", "Mooney"];
const ALTITUDES: &[u32] = &[1500, 2000, 2500, 3000, 3500, 4500];

/// Tone band and direction of one class's motif.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub start_hz: (f64, f64),
    /// Frequency ratio between consecutive tones.
    pub step_ratio: (f64, f64),
    pub band_hz: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticProfile {
    pub landing: Motif,
    pub takeoff: Motif,
    /// RMS of the pink background noise.
    pub noise_level: f64,
    pub tone_amplitude: (f64, f64),
    pub duration_secs: (f64, f64),
    pub lead_secs: (f64, f64),
    pub sample_rate: u32,
}

impl Default for AcousticProfile {
    fn default() -> Self {
        AcousticProfile {
            landing: Motif {
                start_hz: (520.0, 600.0),
                step_ratio: (0.9, 0.96),
                band_hz: (400.0, 650.0),
            },
            takeoff: Motif {
                start_hz: (1700.0, 1850.0),
                step_ratio: (1.03, 1.08),
                band_hz: (1700.0, 2300.0),
            },
            noise_level: 0.02,
            tone_amplitude: (0.15, 0.35),
            duration_secs: (2.5, 4.0),
            lead_secs: (0.25, 0.4),
            sample_rate: CANONICAL_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_clips: usize,
    /// Fraction of takeoff clips.
    pub class_balance: f64,
    pub seed: u64,
    pub profile: AcousticProfile,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_clips: 200,
            class_balance: 0.5,
            seed: 7,
            profile: AcousticProfile::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_clips < 4 {
            return Err(Error::InvalidConfig("n_clips must be at least 4".into()));
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return Err(Error::InvalidConfig("class balance must be in (0, 1)".into()));
        }
        let p = &self.profile;
        if p.sample_rate == 0 || !(p.noise_level >= 0.0) || p.duration_secs.0 <= p.lead_secs.1 + 0.5 {
            return Err(Error::InvalidConfig("acoustic profile is inconsistent".into()));
        }
        Ok(())
    }

    pub fn takeoff_count(&self) -> usize {
        ((self.n_clips as f64 * self.class_balance).round() as usize).clamp(1, self.n_clips - 1)
    }
}

pub fn clip_id(i: usize) -> String {
    format!("clip_{i:04}")
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Pink noise via Paul Kellet's three-pole filter on white noise, scaled to
/// the requested RMS.
pub fn pink_noise(len: usize, rms: f64, rng: &mut Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            b0 = 0.99765 * b0 + w * 0.099_046;
            b1 = 0.963 * b1 + w * 0.296_516_4;
            b2 = 0.57 * b2 + w * 1.052_691_3;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect();
    let mean = out.iter().sum::<f64>() / len.max(1) as f64;
    let cur = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len.max(1) as f64).sqrt();
    let k = if cur > 0.0 { rms / cur } else { 0.0 };
    for v in &mut out {
        *v = (*v - mean) * k;
    }
    out
}

fn motif_waveform(label: Label, profile: &AcousticProfile, len: usize, lead: usize, rng: &mut Rng) -> Vec<f64> {
    let motif = match label {
        Label::Landing => profile.landing,
        Label::Takeoff => profile.takeoff,
    };
    let sr = f64::from(profile.sample_rate);
    let mut out = vec![0.0; len];
    let n_tones = rng.random_range(3..=5);
    let tail = (0.1 * sr) as usize;
    let span = len.saturating_sub(lead + tail);
    let slot = span / n_tones;
    let ramp = (0.01 * sr) as usize;
    let mut freq = uniform(rng, motif.start_hz);
    for t in 0..n_tones {
        let gap = (uniform(rng, (0.02, 0.06)) * sr) as usize;
        let start = lead + t * slot;
        let n = slot.saturating_sub(gap);
        let amp = uniform(rng, profile.tone_amplitude);
        let glide = uniform(rng, (-0.05, 0.05));
        let phase0 = uniform(rng, (0.0, 2.0 * PI));
        let mut phase = phase0;
        for k in 0..n {
            let frac = k as f64 / n.max(1) as f64;
            let f = freq * (1.0 + glide * frac);
            phase += 2.0 * PI * f / sr;
            let env = if k < ramp {
                0.5 - 0.5 * (PI * k as f64 / ramp as f64).cos()
            } else if n - k <= ramp {
                0.5 - 0.5 * (PI * (n - k) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            out[start + k] += amp * env * (phase.sin() + 0.3 * (2.0 * phase).sin());
        }
        freq = (freq * uniform(rng, motif.step_ratio)).clamp(motif.band_hz.0, motif.band_hz.1);
    }
    out
}

pub fn synth_transcript(label: Label, rng: &mut Rng) -> String {
    let bank = match label {
        Label::Landing => LANDING_PHRASES,
        Label::Takeoff => TAKEOFF_PHRASES,
    };
    let phrase = bank.choose(rng).expect("non-empty bank");
    let runway = rng.random_range(1..=36);
    let alt = ALTITUDES.choose(rng).expect("non-empty");
    let airport = AIRPORTS.choose(rng).expect("non-empty");
    let aircraft = AIRCRAFT.choose(rng).expect("non-empty");
    let tail: String = format!(
        "{}{}{}",
        rng.random_range(1..=9),
        rng.random_range(10..=99),
        (b'A' + rng.random_range(0..26u8)) as char
    );
    let body = phrase
        .replace("{NN}", &format!("{runway:02}"))
        .replace("{ALT}", &alt.to_string());
    format!("{airport} traffic, {aircraft} {tail}, {body} {airport}.")
}

/// One synthetic example; all randomness comes from the clip's own stream.
pub fn synth_example(i: usize, label: Label, spec: &SynthSpec) -> Result<Example> {
    let p = &spec.profile;
    let id = clip_id(i);
    let mut rng = rng_for(spec.seed, &format!("datagen/clip/{id}"));
    let sr = f64::from(p.sample_rate);
    let len = (uniform(&mut rng, p.duration_secs) * sr).round() as usize;
    let lead = (uniform(&mut rng, p.lead_secs) * sr).round() as usize;
    let tones = motif_waveform(label, p, len, lead, &mut rng);
    let noise = pink_noise(len, p.noise_level, &mut rng);
    let samples: Vec<f64> = tones.iter().zip(&noise).map(|(a, b)| (a + b).clamp(-1.0, 1.0)).collect();
    let transcript = synth_transcript(label, &mut rng);
    Ok(Example {
        clip: AudioClip::new(id, samples, p.sample_rate)?.with_label(label),
        label,
        transcript: Some(transcript),
    })
}

/// Labels are shuffled from the seed; the first `takeoff_count` draws are
/// takeoff.
pub fn generate_dataset(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let n_takeoff = spec.takeoff_count();
    let mut labels: Vec<Label> = (0..spec.n_clips)
        .map(|i| if i < n_takeoff { Label::Takeoff } else { Label::Landing })
        .collect();
    labels.shuffle(&mut rng_for(spec.seed, "datagen/labels"));
    let examples = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| synth_example(i, l, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(examples))
}

/// Writes `<id>.wav` (16-bit PCM), `<id>.txt` and `labels.csv` under `out_dir`.
pub fn generate_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<Dataset> {
    let ds = generate_dataset(spec)?;
    write_corpus(out_dir, &ds.examples)?;
    Ok(ds)
}
