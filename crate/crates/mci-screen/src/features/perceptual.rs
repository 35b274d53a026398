//! Cepstral coefficient families: MFCC, LPCC, PLP, and their Δ/ΔΔ regression
//! tracks.
//!
//! Degenerate-frame policy: MFCC and PLP floor spectral energies at 1e-10 and
//! always emit a defined row; LPCC emits an all-NaN sentinel row when the LPC
//! recursion fails (digital silence has zero autocorrelation).

use crate::audio::FrameSequence;
use crate::dsp;

pub const DEFAULT_N_MELS: usize = 26;
pub const DEFAULT_N_COEFFS: usize = 13;
pub const DEFAULT_LPC_ORDER: usize = 12;
pub const DEFAULT_PLP_ORDER: usize = 12;
pub const DEFAULT_DELTA_WIDTH: usize = 2;
pub const PRE_EMPHASIS: f64 = 0.97;
const LOG_FLOOR: f64 = 1e-10;

/// Which family a coefficient track belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffFamily {
    Mfcc,
    Lpcc,
    Plp,
    Delta,
    DeltaDelta,
}

/// A frames x n_coeffs matrix of cepstral coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTrack {
    pub family: CoeffFamily,
    /// Short name used as a feature-name prefix ("mfcc", "mfcc_d", ...).
    pub label: String,
    /// Per-coefficient names ("c00", "c01", ...).
    pub names: Vec<String>,
    /// Row per frame.
    pub data: Vec<Vec<f64>>,
}

impl CoeffTrack {
    fn new(family: CoeffFamily, label: &str, n_coeffs: usize, data: Vec<Vec<f64>>) -> Self {
        Self {
            family,
            label: label.to_string(),
            names: (0..n_coeffs).map(|i| format!("c{i:02}")).collect(),
            data,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.data.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.names.len()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().map(|row| row[j]).collect()
    }
}

/// Mel scale: `2595 log10(1 + f/700)`.
fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_inv(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank over FFT bins `0..=n_fft/2`, spanning 0..rate/2.
fn mel_filterbank(n_mels: usize, n_fft: usize, rate: u32) -> Vec<Vec<f64>> {
    let nyquist = rate as f64 / 2.0;
    let m_max = mel(nyquist);
    let points: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_inv(m_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = rate as f64 / n_fft as f64;
    let n_bins = n_fft / 2 + 1;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (points[m], points[m + 1], points[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II of `x`, first `n_out` coefficients.
fn dct2_orthonormal(x: &[f64], n_out: usize) -> Vec<f64> {
    let m = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            let acc: f64 = x
                .iter()
                .enumerate()
                .map(|(n, &v)| {
                    v * (std::f64::consts::PI * k as f64 * (2.0 * n as f64 + 1.0) / (2.0 * m)).cos()
                })
                .sum();
            scale * acc
        })
        .collect()
}

/// Mel-frequency cepstral coefficients.
///
/// Per frame: pre-emphasis (0.97) -> Hann window -> power spectrum -> mel
/// filterbank -> natural log with 1e-10 floor -> orthonormal DCT-II -> first
/// `n_coeffs` coefficients.
pub fn mfcc(frames: &FrameSequence, rate: u32, n_mels: usize, n_coeffs: usize) -> CoeffTrack {
    assert!(n_coeffs <= n_mels);
    let n_fft = dsp::next_pow2(frames.frame_len);
    let bank = mel_filterbank(n_mels, n_fft, rate);
    let window = dsp::hann(frames.frame_len);

    let data = frames
        .frames
        .iter()
        .map(|raw| {
            let mut frame = raw.clone();
            dsp::pre_emphasize(&mut frame, PRE_EMPHASIS);
            for (x, w) in frame.iter_mut().zip(&window) {
                *x *= w;
            }
            let power = dsp::power_spectrum(&frame, n_fft);
            let logmel: Vec<f64> = bank
                .iter()
                .map(|filt| {
                    let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect();
            dct2_orthonormal(&logmel, n_coeffs)
        })
        .collect();
    CoeffTrack::new(CoeffFamily::Mfcc, "mfcc", n_coeffs, data)
}

/// Cepstra from LPC coefficients by the standard recursion:
/// `c0 = ln(err)`, `cn = an + sum_{k=1}^{n-1} (k/n) ck a(n-k)`.
pub fn cepstra_from_lpc(a: &[f64], err: f64, n_coeffs: usize) -> Vec<f64> {
    let p = a.len();
    let mut c = vec![0.0; n_coeffs];
    if n_coeffs == 0 {
        return c;
    }
    c[0] = err.ln();
    for n in 1..n_coeffs {
        let mut acc = if n <= p { a[n - 1] } else { 0.0 };
        for k in 1..n {
            if n - k <= p {
                acc += (k as f64 / n as f64) * c[k] * a[n - k - 1];
            }
        }
        c[n] = acc;
    }
    c
}

/// Linear-predictive cepstral coefficients.
///
/// Frames are Hann-windowed before the autocorrelation LPC fit. A frame whose
/// Levinson recursion fails (non-positive prediction error) emits a NaN
/// sentinel row.
pub fn lpcc(frames: &FrameSequence, lpc_order: usize, n_coeffs: usize) -> CoeffTrack {
    assert!(n_coeffs >= lpc_order && n_coeffs >= 1);
    let window = dsp::hann(frames.frame_len);
    let data = frames
        .frames
        .iter()
        .map(|raw| {
            let frame: Vec<f64> = raw.iter().zip(&window).map(|(x, w)| x * w).collect();
            let r = dsp::autocorrelation(&frame, lpc_order);
            match dsp::levinson(&r, lpc_order) {
                Some((a, err)) => cepstra_from_lpc(&a, err, n_coeffs),
                None => vec![f64::NAN; n_coeffs],
            }
        })
        .collect();
    CoeffTrack::new(CoeffFamily::Lpcc, "lpcc", n_coeffs, data)
}

/// Bark scale: `6 asinh(f/600)`.
fn bark(f: f64) -> f64 {
    6.0 * (f / 600.0).asinh()
}

/// Hermansky critical-band masking curve: flat top one bark wide, steep low
/// skirt, shallow high skirt (trapezoidal in log power).
fn critical_band_weight(d: f64) -> f64 {
    if !(-1.3..=2.5).contains(&d) {
        0.0
    } else if d <= -0.5 {
        10f64.powf(2.5 * (d + 0.5))
    } else if d < 0.5 {
        1.0
    } else {
        10f64.powf(-(d - 0.5))
    }
}

/// Equal-loudness pre-emphasis weight at frequency `f` Hz.
fn equal_loudness(f: f64) -> f64 {
    let f2 = f * f;
    ((f2 + 56.8e6) * f2 * f2) / ((f2 + 6.3e6).powi(2) * (f2 + 0.38e9))
}

/// Perceptual linear prediction cepstra.
///
/// Per frame: Hann window -> power spectrum -> Bark-scale trapezoidal
/// filterbank -> equal-loudness weighting -> cube-root compression -> inverse
/// DFT back to autocorrelation -> Levinson -> cepstral recursion. Band
/// energies are floored at 1e-10 so silence produces a defined row (same
/// policy as MFCC).
pub fn plp(frames: &FrameSequence, rate: u32, model_order: usize) -> CoeffTrack {
    let n_coeffs = model_order + 1;
    let n_fft = dsp::next_pow2(frames.frame_len);
    let bin_hz = rate as f64 / n_fft as f64;
    let n_bins = n_fft / 2 + 1;
    let bark_nyq = bark(rate as f64 / 2.0);
    let n_bands = (bark_nyq.floor() as usize).max(model_order + 1);
    let centers: Vec<f64> = (0..n_bands)
        .map(|i| (i as f64 + 0.5) * bark_nyq / n_bands as f64)
        .collect();

    // Per-band FFT-bin weights and equal-loudness factors, fixed per config.
    let weights: Vec<Vec<f64>> = centers
        .iter()
        .map(|&zc| {
            (0..n_bins)
                .map(|k| critical_band_weight(bark(k as f64 * bin_hz) - zc))
                .collect()
        })
        .collect();
    let loudness: Vec<f64> = centers
        .iter()
        .map(|&zc| equal_loudness(600.0 * (zc / 6.0).sinh()))
        .collect();

    let window = dsp::hann(frames.frame_len);
    let data = frames
        .frames
        .iter()
        .map(|raw| {
            let frame: Vec<f64> = raw.iter().zip(&window).map(|(x, w)| x * w).collect();
            let power = dsp::power_spectrum(&frame, n_fft);
            let mut compressed: Vec<f64> = weights
                .iter()
                .zip(&loudness)
                .map(|(w, &el)| {
                    let e: f64 = w.iter().zip(&power).map(|(wk, p)| wk * p).sum();
                    (e.max(LOG_FLOOR) * el).powf(1.0 / 3.0)
                })
                .collect();
            // duplicate endpoints before the even-spectrum inverse transform
            compressed.insert(0, compressed[0]);
            compressed.push(*compressed.last().unwrap());

            let m = compressed.len();
            let r: Vec<f64> = (0..=model_order)
                .map(|k| {
                    let mut acc = compressed[0] + (-1f64).powi(k as i32) * compressed[m - 1];
                    for (j, &v) in compressed.iter().enumerate().take(m - 1).skip(1) {
                        acc += 2.0
                            * v
                            * (std::f64::consts::PI * j as f64 * k as f64 / (m - 1) as f64).cos();
                    }
                    acc / (2.0 * (m - 1) as f64)
                })
                .collect();
            match dsp::levinson(&r, model_order) {
                Some((a, err)) => cepstra_from_lpc(&a, err, n_coeffs),
                None => vec![f64::NAN; n_coeffs],
            }
        })
        .collect();
    CoeffTrack::new(CoeffFamily::Plp, "plp", n_coeffs, data)
}

/// First- and second-order regression (Δ and ΔΔ) tracks.
///
/// `Δ_t = Σ_{n=1..W} n (c_{t+n} - c_{t-n}) / (2 Σ n²)` with edge replication;
/// ΔΔ is Δ applied to Δ.
pub fn deltas(track: &CoeffTrack, width: usize) -> (CoeffTrack, CoeffTrack) {
    let delta_data = regression(&track.data, width);
    let delta2_data = regression(&delta_data, width);
    let delta = CoeffTrack {
        family: CoeffFamily::Delta,
        label: format!("{}_d", track.label),
        names: track.names.clone(),
        data: delta_data,
    };
    let delta2 = CoeffTrack {
        family: CoeffFamily::DeltaDelta,
        label: format!("{}_dd", track.label),
        names: track.names.clone(),
        data: delta2_data,
    };
    (delta, delta2)
}

fn regression(data: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    assert!(width >= 1);
    let t_max = data.len();
    if t_max == 0 {
        return Vec::new();
    }
    let n_coeffs = data[0].len();
    let denom: f64 = 2.0 * (1..=width).map(|n| (n * n) as f64).sum::<f64>();
    (0..t_max)
        .map(|t| {
            (0..n_coeffs)
                .map(|j| {
                    let mut acc = 0.0;
                    for n in 1..=width {
                        let fwd = data[(t + n).min(t_max - 1)][j];
                        let bwd = data[t.saturating_sub(n)][j];
                        acc += n as f64 * (fwd - bwd);
                    }
                    acc / denom
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{self, AudioSignal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const RATE: u32 = 22050;

    fn frames_of(samples: Vec<f64>) -> FrameSequence {
        audio::frame(&AudioSignal::new(samples, RATE), 25.0, 10.0).unwrap()
    }

    fn tone_plus_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                0.4 * (2.0 * PI * 440.0 * i as f64 / RATE as f64).sin()
                    + 0.02 * rng.gen_range(-1.0..1.0)
            })
            .collect()
    }

    #[test]
    fn mfcc_of_silence_is_c0_only() {
        let frames = frames_of(vec![0.0; RATE as usize]);
        let track = mfcc(&frames, RATE, DEFAULT_N_MELS, DEFAULT_N_COEFFS);
        for row in &track.data {
            // c0 determined by the log floor, the rest zero
            let expected_c0 = (DEFAULT_N_MELS as f64).sqrt() * 1e-10f64.ln();
            assert!((row[0] - expected_c0).abs() < 1e-9, "c0 = {}", row[0]);
            for &c in &row[1..] {
                assert!(c.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mfcc_gain_moves_only_c0() {
        let base = tone_plus_noise(RATE as usize, 5);
        let gained: Vec<f64> = base.iter().map(|x| x * 2.7).collect();
        let a = mfcc(&frames_of(base), RATE, DEFAULT_N_MELS, DEFAULT_N_COEFFS);
        let b = mfcc(&frames_of(gained), RATE, DEFAULT_N_MELS, DEFAULT_N_COEFFS);
        for (ra, rb) in a.data.iter().zip(&b.data) {
            assert!((rb[0] - ra[0]).abs() > 1e-3, "c0 should shift");
            for j in 1..DEFAULT_N_COEFFS {
                assert!(
                    (ra[j] - rb[j]).abs() < 1e-6,
                    "c{j}: {} vs {}",
                    ra[j],
                    rb[j]
                );
            }
        }
    }

    #[test]
    fn mfcc_shape_contract() {
        let frames = frames_of(tone_plus_noise(RATE as usize, 1));
        let track = mfcc(&frames, RATE, DEFAULT_N_MELS, DEFAULT_N_COEFFS);
        assert_eq!(track.n_frames(), 98);
        assert_eq!(track.n_coeffs(), 13);
        assert!(track.data.iter().flatten().all(|c| c.is_finite()));
    }

    #[test]
    fn lpcc_white_noise_coefficients_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise: Vec<f64> = (0..RATE as usize).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let track = lpcc(&frames_of(noise), DEFAULT_LPC_ORDER, DEFAULT_N_COEFFS);
        // flat spectrum: average |c1..| stays small
        let n = track.n_frames() as f64;
        for j in 1..track.n_coeffs() {
            let mean_abs: f64 = track.column(j).iter().map(|c| c.abs()).sum::<f64>() / n;
            assert!(mean_abs < 0.1, "c{j} mean |.| = {mean_abs}");
        }
    }

    #[test]
    fn cepstral_recursion_base_case() {
        let a = vec![0.37, -0.12, 0.05];
        let c = cepstra_from_lpc(&a, 1.0, 4);
        assert_eq!(c[0], 0.0); // ln(1)
        assert_eq!(c[1], a[0]); // c1 = a1 exactly
    }

    #[test]
    fn lpcc_is_deterministic() {
        let frames = frames_of(tone_plus_noise(RATE as usize, 2));
        let a = lpcc(&frames, DEFAULT_LPC_ORDER, DEFAULT_N_COEFFS);
        let b = lpcc(&frames, DEFAULT_LPC_ORDER, DEFAULT_N_COEFFS);
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn lpcc_silence_emits_nan_sentinel_rows() {
        let frames = frames_of(vec![0.0; RATE as usize]);
        let track = lpcc(&frames, DEFAULT_LPC_ORDER, DEFAULT_N_COEFFS);
        assert!(track.data.iter().flatten().all(|c| c.is_nan()));
    }

    #[test]
    fn plp_silence_emits_defined_rows() {
        let frames = frames_of(vec![0.0; RATE as usize]);
        let track = plp(&frames, RATE, DEFAULT_PLP_ORDER);
        assert!(track.data.iter().flatten().all(|c| c.is_finite()));
    }

    #[test]
    fn plp_gain_moves_only_c0() {
        let base = tone_plus_noise(RATE as usize, 6);
        let gained: Vec<f64> = base.iter().map(|x| x * 2.0).collect();
        let a = plp(&frames_of(base), RATE, DEFAULT_PLP_ORDER);
        let b = plp(&frames_of(gained), RATE, DEFAULT_PLP_ORDER);
        for (ra, rb) in a.data.iter().zip(&b.data) {
            assert!((rb[0] - ra[0]).abs() > 1e-4, "c0 should shift");
            for j in 1..a.n_coeffs() {
                assert!((ra[j] - rb[j]).abs() < 1e-4, "c{j}: {} vs {}", ra[j], rb[j]);
            }
        }
    }

    #[test]
    fn plp_shape_contract() {
        let frames = frames_of(tone_plus_noise(RATE as usize, 3));
        let track = plp(&frames, RATE, DEFAULT_PLP_ORDER);
        assert_eq!(track.n_frames(), 98);
        assert_eq!(track.n_coeffs(), 13);
    }

    fn toy_track(data: Vec<Vec<f64>>) -> CoeffTrack {
        let n = data[0].len();
        CoeffTrack::new(CoeffFamily::Mfcc, "mfcc", n, data)
    }

    #[test]
    fn deltas_of_constant_track_are_zero() {
        let track = toy_track(vec![vec![3.0, -1.0]; 10]);
        let (d, dd) = deltas(&track, DEFAULT_DELTA_WIDTH);
        assert!(d.data.iter().flatten().all(|&x| x == 0.0));
        assert!(dd.data.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn deltas_of_linear_ramp_are_one_inside() {
        let track = toy_track((0..20).map(|t| vec![t as f64]).collect());
        let (d, _) = deltas(&track, DEFAULT_DELTA_WIDTH);
        for t in 2..18 {
            assert!((d.data[t][0] - 1.0).abs() < 1e-12, "t={t}: {}", d.data[t][0]);
        }
    }

    #[test]
    fn deltas_of_single_frame_are_zero() {
        let track = toy_track(vec![vec![1.0, 2.0, 3.0]]);
        let (d, dd) = deltas(&track, DEFAULT_DELTA_WIDTH);
        assert_eq!(d.data, vec![vec![0.0, 0.0, 0.0]]);
        assert_eq!(dd.data, vec![vec![0.0, 0.0, 0.0]]);
    }

    #[test]
    fn deltas_are_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let (alpha, beta) = (2.5, -0.75);
        let combo: Vec<Vec<f64>> = x
            .iter()
            .zip(&y)
            .map(|(rx, ry)| {
                rx.iter()
                    .zip(ry)
                    .map(|(a, b)| alpha * a + beta * b)
                    .collect()
            })
            .collect();
        let (dx, _) = deltas(&toy_track(x), 2);
        let (dy, _) = deltas(&toy_track(y), 2);
        let (dc, _) = deltas(&toy_track(combo), 2);
        for t in 0..15 {
            for j in 0..3 {
                let expect = alpha * dx.data[t][j] + beta * dy.data[t][j];
                assert!((dc.data[t][j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_labels_chain() {
        let track = toy_track(vec![vec![0.0]; 3]);
        let (d, dd) = deltas(&track, 2);
        assert_eq!(d.label, "mfcc_d");
        assert_eq!(dd.label, "mfcc_dd");
        assert_eq!(d.family, CoeffFamily::Delta);
        assert_eq!(dd.family, CoeffFamily::DeltaDelta);
    }
}
