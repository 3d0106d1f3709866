//! FFT and short-time Fourier transform primitives.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const N_FFT: usize = 2048;
pub const HOP: usize = 512;

/// Relative tolerance for the constant overlap-add check.
pub const COLA_TOLERANCE: f64 = 1e-8;

/// Iterative radix-2 FFT with precomputed twiddles and bit-reversal table.
#[derive(Debug, Clone)]
pub struct Fft<T> {
    n: usize,
    twiddles: Vec<Complex<T>>,
    bitrev: Vec<usize>,
}

impl<T: Scalar> Fft<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NonPowerOfTwo(n));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Complex::new(T::of(theta.cos()), T::of(theta.sin()))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Ok(Fft {
            n,
            twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X[k] = sum_t x[t] e^{-2 pi i k t / n}`.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, false);
    }

    /// In-place unnormalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, true);
    }

    fn transform(&self, buf: &mut [Complex<T>], inverse: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n, "FFT buffer length");
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// Real-input transform returning the `n/2 + 1` non-negative bins.
    pub fn forward_real(&self, signal: &[T]) -> Result<Vec<Complex<T>>> {
        if signal.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: signal.len(),
            });
        }
        let mut buf: Vec<Complex<T>> = signal.iter().map(|&s| Complex::new(s, T::zero())).collect();
        self.forward(&mut buf);
        buf.truncate(self.n / 2 + 1);
        Ok(buf)
    }

    /// Inverse of [`Fft::forward_real`] (including the `1/n` factor); the
    /// missing bins are filled in by hermitian symmetry.
    pub fn inverse_real(&self, bins: &[Complex<T>]) -> Result<Vec<T>> {
        let n_bins = self.n / 2 + 1;
        if bins.len() != n_bins {
            return Err(Error::DimensionMismatch {
                expected: n_bins,
                actual: bins.len(),
            });
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.n];
        buf[..n_bins].copy_from_slice(bins);
        for k in 1..self.n - n_bins + 1 {
            buf[self.n - k] = bins[k].conj();
        }
        self.inverse(&mut buf);
        let scale = T::one() / T::of_usize(self.n);
        Ok(buf.into_iter().map(|c| c.re * scale).collect())
    }
}

/// One-shot real FFT of a power-of-two length signal.
pub fn fft_real<T: Scalar>(signal: &[T], n: usize) -> Result<Vec<Complex<T>>> {
    Fft::new(n)?.forward_real(signal)
}

/// Periodic Hann window, `0.5 - 0.5 cos(2 pi i / n)`.
pub fn hann_window<T: Scalar>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            T::of(0.5 - 0.5 * phase.cos())
        })
        .collect()
}

/// STFT frames, shape `(n_frames, n_fft/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum<T> {
    pub frames: Vec<Vec<Complex<T>>>,
    pub n_fft: usize,
    pub hop: usize,
    pub window: Vec<T>,
    pub centered: bool,
    /// Length of the analysed signal, used to size the inverse transform.
    pub signal_len: usize,
}

impl<T: Scalar> ComplexSpectrum<T> {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn magnitudes(&self) -> Vec<Vec<T>> {
        self.frames
            .iter()
            .map(|f| f.iter().map(|c| c.norm()).collect())
            .collect()
    }

    pub fn phases(&self) -> Vec<Vec<T>> {
        self.frames
            .iter()
            .map(|f| f.iter().map(|c| c.arg()).collect())
            .collect()
    }

    /// New spectrum with this one's geometry and the given polar values.
    pub fn from_polar_like(&self, magnitudes: &[Vec<T>], phases: &[Vec<T>]) -> Self {
        let frames = magnitudes
            .iter()
            .zip(phases)
            .map(|(m, p)| m.iter().zip(p).map(|(&r, &th)| Complex::from_polar(r, th)).collect())
            .collect();
        self.with_frames(frames)
    }

    pub fn with_frames(&self, frames: Vec<Vec<Complex<T>>>) -> Self {
        ComplexSpectrum {
            frames,
            n_fft: self.n_fft,
            hop: self.hop,
            window: self.window.clone(),
            centered: self.centered,
            signal_len: self.signal_len,
        }
    }
}

fn check_geometry<T: Scalar>(n_fft: usize, hop: usize, window: &[T]) -> Result<()> {
    if n_fft == 0 || !n_fft.is_power_of_two() {
        return Err(Error::NonPowerOfTwo(n_fft));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::InvalidStft(format!("hop {hop} must be in 1..={n_fft}")));
    }
    if window.len() != n_fft {
        return Err(Error::InvalidStft(format!(
            "window length {} differs from n_fft {n_fft}",
            window.len()
        )));
    }
    if window.iter().any(|&w| !(w >= T::zero() && w <= T::one())) {
        return Err(Error::InvalidStft("window weights must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Reflect index `i` into `0..len` without repeating the edge sample.
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Number of frames produced for a signal of `len` samples.
pub fn frame_count(len: usize, n_fft: usize, hop: usize, centered: bool) -> usize {
    if centered {
        1 + len / hop
    } else if len >= n_fft {
        1 + (len - n_fft) / hop
    } else {
        1
    }
}

/// Short-time Fourier transform.
///
/// With `centered`, the signal is reflect-padded by `n_fft/2` on both sides
/// and frame `t` covers samples `[t*hop - n_fft/2, t*hop + n_fft/2)`, giving
/// `1 + len/hop` frames. Otherwise frames start at sample 0 and the tail is
/// zero-padded to fill the last frame.
pub fn stft<T: Scalar>(
    samples: &[T],
    n_fft: usize,
    hop: usize,
    window: &[T],
    centered: bool,
) -> Result<ComplexSpectrum<T>> {
    check_geometry(n_fft, hop, window)?;
    if samples.is_empty() {
        return Err(Error::InvalidData("STFT of an empty signal".into()));
    }
    let fft = Fft::new(n_fft)?;
    let len = samples.len();
    let n_frames = frame_count(len, n_fft, hop, centered);
    let offset = if centered { (n_fft / 2) as isize } else { 0 };

    let mut frames = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_fft];
    for t in 0..n_frames {
        let start = (t * hop) as isize - offset;
        for (i, slot) in buf.iter_mut().enumerate() {
            let idx = start + i as isize;
            let v = if centered {
                samples[reflect(idx, len)]
            } else if (idx as usize) < len {
                samples[idx as usize]
            } else {
                T::zero()
            };
            *slot = Complex::new(v * window[i], T::zero());
        }
        fft.forward(&mut buf);
        frames.push(buf[..n_fft / 2 + 1].to_vec());
    }
    Ok(ComplexSpectrum {
        frames,
        n_fft,
        hop,
        window: window.to_vec(),
        centered,
        signal_len: len,
    })
}

/// Checks that the squared window overlap-adds to a constant at this hop.
pub fn is_cola<T: Scalar>(window: &[T], hop: usize) -> bool {
    if hop == 0 {
        return false;
    }
    let sums: Vec<f64> = (0..hop)
        .map(|j| {
            window
                .iter()
                .skip(j)
                .step_by(hop)
                .map(|w| w.as_f64() * w.as_f64())
                .sum()
        })
        .collect();
    let max = sums.iter().copied().fold(f64::MIN, f64::max);
    let min = sums.iter().copied().fold(f64::MAX, f64::min);
    max > 0.0 && (max - min) <= COLA_TOLERANCE * max
}

/// Inverse STFT by windowed overlap-add, normalized per sample by the
/// accumulated squared window. Output has the analysed signal's length.
pub fn istft<T: Scalar>(spec: &ComplexSpectrum<T>) -> Result<Vec<T>> {
    istft_with_len(spec, spec.signal_len)
}

/// [`istft`] with an explicit output length; missing frames leave zeros.
pub fn istft_with_len<T: Scalar>(spec: &ComplexSpectrum<T>, out_len: usize) -> Result<Vec<T>> {
    let n_fft = spec.n_fft;
    let hop = spec.hop;
    check_geometry(n_fft, hop, &spec.window)?;
    if !is_cola(&spec.window, hop) {
        return Err(Error::NonColaConfiguration { n_fft, hop });
    }
    let fft = Fft::new(n_fft)?;
    let offset = if spec.centered { n_fft / 2 } else { 0 };
    let total = (spec.frames.len().saturating_sub(1) * hop + n_fft).max(out_len + offset);
    let mut acc = vec![T::zero(); total];
    let mut wsum = vec![T::zero(); total];
    for (t, frame) in spec.frames.iter().enumerate() {
        let time = fft.inverse_real(frame)?;
        let start = t * hop;
        for i in 0..n_fft {
            let w = spec.window[i];
            acc[start + i] += w * time[i];
            wsum[start + i] += w * w;
        }
    }
    let floor = T::of(1e-10);
    Ok((0..out_len)
        .map(|i| {
            let p = i + offset;
            if wsum[p] > floor {
                acc[p] / wsum[p]
            } else {
                T::zero()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn naive_dft(x: &[f64]) -> Vec<Complex<f64>> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (t, &v)| {
                    let th = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    acc + Complex::from_polar(v, th)
                })
            })
            .collect()
    }

    #[test]
    fn zero_and_impulse() {
        let z = fft_real(&[0.0f64; 8], 8).unwrap();
        assert!(z.iter().all(|c| c.norm() == 0.0));
        let mut imp = [0.0f64; 8];
        imp[0] = 1.0;
        let bins = fft_real(&imp, 8).unwrap();
        assert_eq!(bins.len(), 5);
        for b in bins {
            assert_eq!(b, Complex::new(1.0, 0.0));
        }
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = crate::rng::rng_for(1, "dsp-test");
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = fft_real(&x, 16).unwrap();
        for (a, b) in fast.iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn f32_fft_agrees_with_f64() {
        let x: Vec<f64> = (0..32).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let a = fft_real(&x, 32).unwrap();
        let b = fft_real(&x32, 32).unwrap();
        for (p, q) in a.iter().zip(b) {
            assert!((p.re - f64::from(q.re)).abs() < 1e-4);
            assert!((p.im - f64::from(q.im)).abs() < 1e-4);
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(matches!(fft_real(&[0.0f64; 12], 12), Err(Error::NonPowerOfTwo(12))));
    }

    #[test]
    fn canonical_frame_count() {
        let x = vec![0.0f64; 66_150];
        let spec = stft(&x, N_FFT, HOP, &hann_window(N_FFT), true).unwrap();
        assert_eq!(spec.n_frames(), 130);
        assert_eq!(spec.n_bins(), 1025);
        assert!(spec.frames.iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn sine_energy_lands_in_expected_bin() {
        // period 512 samples -> bin n_fft/512 = 4
        let x: Vec<f64> = (0..8192)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / 512.0).sin())
            .collect();
        let spec = stft(&x, N_FFT, HOP, &hann_window(N_FFT), true).unwrap();
        let mid = &spec.frames[spec.n_frames() / 2];
        let peak = (0..mid.len())
            .max_by(|&a, &b| mid[a].norm().partial_cmp(&mid[b].norm()).unwrap())
            .unwrap();
        assert!((3..=5).contains(&peak), "peak at {peak}");
        let total: f64 = mid.iter().map(|c| c.norm_sqr()).sum();
        let near: f64 = mid[3..=5].iter().map(|c| c.norm_sqr()).sum();
        assert!(near / total > 0.99);
    }

    #[test]
    fn round_trip_and_zero() {
        let mut rng = crate::rng::rng_for(2, "dsp-test");
        let x: Vec<f64> = (0..5000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = hann_window(N_FFT);
        let spec = stft(&x, N_FFT, HOP, &w, true).unwrap();
        let y = istft(&spec).unwrap();
        assert_eq!(y.len(), x.len());
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");

        let zero = spec.with_frames(vec![vec![Complex::new(0.0, 0.0); 1025]; spec.n_frames()]);
        assert!(istft(&zero).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_signals_and_non_centered() {
        let w = hann_window::<f64>(16);
        let spec = stft(&[0.5], 16, 4, &w, true).unwrap();
        assert_eq!(spec.n_frames(), 1);
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let nc = stft(&x, 16, 4, &w, false).unwrap();
        assert_eq!(nc.n_frames(), 1 + (40 - 16) / 4);
    }

    #[test]
    fn cola_check() {
        assert!(is_cola(&hann_window::<f64>(2048), 512));
        assert!(!is_cola(&hann_window::<f64>(2048), 1536));
        let spec = stft(&[0.0f64; 100], 16, 12, &hann_window(16), true).unwrap();
        assert!(matches!(istft(&spec), Err(Error::NonColaConfiguration { .. })));
    }

    #[test]
    fn geometry_validation() {
        let w = hann_window::<f64>(16);
        assert!(stft(&[0.0; 32], 16, 0, &w, true).is_err());
        assert!(stft(&[0.0; 32], 16, 17, &w, true).is_err());
        assert!(stft(&[0.0; 32], 8, 4, &w, true).is_err());
        assert!(stft(&[0.0; 32], 12, 4, &w[..12], true).is_err());
        let bad = vec![1.5; 16];
        assert!(stft(&[0.0; 32], 16, 4, &bad, true).is_err());
    }
}
