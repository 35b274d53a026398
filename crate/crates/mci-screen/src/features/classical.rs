//! Classical frame- and track-level descriptors: energies, ZCR, spectral
//! centroid, pitch, perturbation measures (jitter/shimmer/APQ), harmonicity,
//! formants, and voicing statistics.

use crate::audio::{AudioSignal, FrameSequence};
use crate::dsp;
use crate::segmentation::{SegmentLabel, SegmentList};

pub const DEFAULT_F0_MIN: f64 = 60.0;
pub const DEFAULT_F0_MAX: f64 = 400.0;
pub const DEFAULT_VOICING_THRESHOLD: f64 = 0.45;

/// Per-frame scalar descriptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDescriptors {
    /// Mean of squared samples.
    pub short_time_energy: f64,
    /// `10 log10(energy + 1e-12)` dB.
    pub intensity_db: f64,
    /// Sign changes per sample interval.
    pub zcr: f64,
    /// Magnitude-weighted mean frequency of the Hann-windowed spectrum, Hz.
    pub spectral_centroid: f64,
}

/// Compute energy, intensity, ZCR and spectral centroid of one frame.
pub fn frame_descriptors(frame: &[f64], rate: u32) -> FrameDescriptors {
    debug_assert!(frame.len() >= 2);
    let energy = crate::segmentation::short_time_energy(frame);
    let intensity_db = 10.0 * (energy + 1e-12).log10();
    let zcr = crate::segmentation::zero_crossing_rate(frame);

    let n_fft = dsp::next_pow2(frame.len());
    let window = dsp::hann(frame.len());
    let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
    let power = dsp::power_spectrum(&windowed, n_fft);
    let bin_hz = rate as f64 / n_fft as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &p) in power.iter().enumerate() {
        let mag = p.sqrt();
        num += k as f64 * bin_hz * mag;
        den += mag;
    }
    let spectral_centroid = if den > 0.0 { num / den } else { 0.0 };

    FrameDescriptors {
        short_time_energy: energy,
        intensity_db,
        zcr,
        spectral_centroid,
    }
}

/// Fundamental-frequency contour. `f0 = 0` encodes an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub f0: Vec<f64>,
    /// Frame center times in seconds.
    pub times: Vec<f64>,
    pub sample_rate: u32,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn is_voiced(&self, i: usize) -> bool {
        self.f0[i] > 0.0
    }

    pub fn voiced_count(&self) -> usize {
        self.f0.iter().filter(|&&f| f > 0.0).count()
    }

    /// F0 values of voiced frames only.
    pub fn voiced_f0(&self) -> Vec<f64> {
        self.f0.iter().copied().filter(|&f| f > 0.0).collect()
    }
}

/// Normalized cross-correlation of a mean-removed frame with itself at `lag`.
///
/// Unbiased in the sense that shorter overlaps do not shrink the value, so a
/// perfectly periodic frame scores ~1 at its period regardless of lag.
fn normalized_autocorr(frame: &[f64], lag: usize) -> f64 {
    let n = frame.len();
    if lag >= n {
        return 0.0;
    }
    let mut num = 0.0;
    let mut e0 = 0.0;
    let mut e1 = 0.0;
    for i in 0..n - lag {
        num += frame[i] * frame[i + lag];
        e0 += frame[i] * frame[i];
        e1 += frame[i + lag] * frame[i + lag];
    }
    let den = (e0 * e1).sqrt();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn remove_mean(frame: &[f64]) -> Vec<f64> {
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    frame.iter().map(|x| x - mean).collect()
}

/// Autocorrelation pitch tracker.
///
/// Per frame the normalized autocorrelation is scanned over lags
/// `[rate/f0_max, rate/f0_min]`; the first maximal lag wins and is refined by
/// parabolic interpolation. Peaks below `voicing_threshold` are unvoiced.
pub fn pitch_track(
    frames: &FrameSequence,
    rate: u32,
    f0_min: f64,
    f0_max: f64,
    voicing_threshold: f64,
) -> PitchTrack {
    assert!(f0_min < f0_max && f0_max <= rate as f64 / 4.0);
    let lag_min = (rate as f64 / f0_max).ceil() as usize;
    let lag_max = ((rate as f64 / f0_min).floor() as usize).min(frames.frame_len - 1);

    let mut f0 = Vec::with_capacity(frames.len());
    let mut times = Vec::with_capacity(frames.len());
    for (i, raw) in frames.frames.iter().enumerate() {
        times.push(frames.center_time(i));
        let frame = remove_mean(raw);
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        if energy <= 0.0 {
            f0.push(0.0);
            continue;
        }

        let values: Vec<f64> = (lag_min..=lag_max)
            .map(|lag| normalized_autocorr(&frame, lag))
            .collect();
        let best_val = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best_val < voicing_threshold {
            f0.push(0.0);
            continue;
        }
        // Prefer the smallest lag among numerically tied maxima so a
        // perfectly periodic frame resolves to its fundamental, not a
        // subharmonic that wins by one ulp.
        let best_lag = lag_min
            + values
                .iter()
                .position(|&v| v >= best_val - 1e-9)
                .unwrap_or(0);
        let best_val = values[best_lag - lag_min];

        // Parabolic refinement around the grid peak.
        let mut lag_est = best_lag as f64;
        if best_lag > lag_min && best_lag < lag_max {
            let lo = normalized_autocorr(&frame, best_lag - 1);
            let hi = normalized_autocorr(&frame, best_lag + 1);
            let denom = lo - 2.0 * best_val + hi;
            if denom.abs() > 1e-12 {
                let delta = 0.5 * (lo - hi) / denom;
                if delta.abs() < 1.0 {
                    lag_est += delta;
                }
            }
        }
        f0.push((rate as f64 / lag_est).clamp(f0_min, f0_max));
    }
    PitchTrack {
        f0,
        times,
        sample_rate: rate,
    }
}

/// Jitter/shimmer/APQ triple. NaN when too few voiced periods exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub jitter_local: f64,
    pub shimmer_local: f64,
    pub apq: f64,
}

impl Perturbation {
    pub const UNDEFINED: Perturbation = Perturbation {
        jitter_local: f64::NAN,
        shimmer_local: f64::NAN,
        apq: f64::NAN,
    };
}

/// Apply the defining perturbation formulas to explicit period marks.
///
/// `periods` are consecutive glottal period lengths, `amplitudes` the peak
/// amplitude of each period. jitter(local) = mean |T(i)-T(i-1)| / mean T;
/// shimmer(local) is the same on amplitudes; APQ is the 5-point amplitude
/// perturbation quotient.
pub fn perturbation_from_marks(periods: &[f64], amplitudes: &[f64]) -> Perturbation {
    if periods.len() < 2 || amplitudes.is_empty() {
        return Perturbation::UNDEFINED;
    }
    let mean_t = periods.iter().sum::<f64>() / periods.len() as f64;
    let jitter_local = if mean_t > 0.0 {
        periods.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
            / (periods.len() - 1) as f64
            / mean_t
    } else {
        f64::NAN
    };

    let mean_a = amplitudes.iter().sum::<f64>() / amplitudes.len() as f64;
    let shimmer_local = if amplitudes.len() >= 2 && mean_a.abs() > 0.0 {
        amplitudes
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .sum::<f64>()
            / (amplitudes.len() - 1) as f64
            / mean_a
    } else {
        f64::NAN
    };

    let apq = if amplitudes.len() >= 5 && mean_a.abs() > 0.0 {
        let mut acc = 0.0;
        let mut count = 0;
        for i in 2..amplitudes.len() - 2 {
            let avg = amplitudes[i - 2..=i + 2].iter().sum::<f64>() / 5.0;
            acc += (amplitudes[i] - avg).abs();
            count += 1;
        }
        acc / count as f64 / mean_a
    } else {
        f64::NAN
    };

    Perturbation {
        jitter_local,
        shimmer_local,
        apq,
    }
}

/// Pick period marks guided by the pitch track and evaluate the perturbation
/// formulas on them. Returns NaN values when fewer than 3 consecutive voiced
/// periods are found.
pub fn perturbation(sig: &AudioSignal, track: &PitchTrack) -> Perturbation {
    let (periods, amplitudes) = period_marks(sig, track);
    if periods.len() < 3 {
        return Perturbation::UNDEFINED;
    }
    perturbation_from_marks(&periods, &amplitudes)
}

/// F0-guided peak picking over voiced runs of the track.
///
/// Returns period lengths (samples, as f64) and per-period peak amplitudes,
/// concatenated over runs; differences never straddle a run boundary because
/// each run restarts the mark chain.
fn period_marks(sig: &AudioSignal, track: &PitchTrack) -> (Vec<f64>, Vec<f64>) {
    let rate = track.sample_rate as f64;
    // Reconstruct framing geometry from the time axis.
    let hop = if track.times.len() >= 2 {
        ((track.times[1] - track.times[0]) * rate).round() as usize
    } else {
        1
    }
    .max(1);
    let frame_len = if track.times.is_empty() {
        0
    } else {
        ((track.times[0] * 2.0) * rate).round() as usize
    }
    .max(hop);

    let mut periods = Vec::new();
    let mut amplitudes = Vec::new();

    let mut i = 0;
    while i < track.len() {
        if !track.is_voiced(i) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < track.len() && track.is_voiced(i) {
            i += 1;
        }
        let run_end = i; // exclusive frame index

        let span_start = run_start * hop;
        let span_end = ((run_end - 1) * hop + frame_len).min(sig.len());
        if span_start >= span_end {
            continue;
        }

        let f0_at = |pos: usize| -> f64 {
            let idx = (pos.saturating_sub(frame_len / 2)) / hop;
            let idx = idx.clamp(run_start, run_end - 1);
            track.f0[idx]
        };

        let mut t = rate / f0_at(span_start);
        let first_end = (span_start + t.round() as usize).min(span_end);
        let Some(mut mark) = argmax(&sig.samples[span_start..first_end]).map(|m| m + span_start)
        else {
            continue;
        };
        let mut run_amps = vec![sig.samples[mark]];
        let mut run_periods = Vec::new();
        loop {
            t = rate / f0_at(mark);
            let lo = mark + (0.8 * t).round() as usize;
            let hi = mark + (1.25 * t).round() as usize;
            if hi > span_end {
                // a truncated search window cannot hold a full period; stop
                // the chain instead of picking a clipped pseudo-peak
                break;
            }
            let Some(next) = argmax(&sig.samples[lo..hi]).map(|m| m + lo) else {
                break;
            };
            run_periods.push((next - mark) as f64);
            run_amps.push(sig.samples[next]);
            mark = next;
        }
        if !run_periods.is_empty() {
            periods.extend(run_periods);
            // one amplitude per period: drop the final mark's amplitude
            run_amps.pop();
            amplitudes.extend(run_amps);
        }
    }
    (periods, amplitudes)
}

fn argmax(slice: &[f64]) -> Option<usize> {
    if slice.is_empty() {
        return None;
    }
    let mut best = 0;
    for (i, &v) in slice.iter().enumerate() {
        if v > slice[best] {
            best = i;
        }
    }
    Some(best)
}

/// HNR/NHR/harmonicity summary over voiced frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonicity {
    pub hnr_db: f64,
    pub nhr: f64,
    pub harmonicity_mean: f64,
}

impl Harmonicity {
    pub const UNDEFINED: Harmonicity = Harmonicity {
        hnr_db: f64::NAN,
        nhr: f64::NAN,
        harmonicity_mean: f64::NAN,
    };
}

/// Frame HNR from the normalized autocorrelation `r` at the pitch lag:
/// `10 log10(r / (1 - r))` with `r` clamped to `[1e-6, 1-1e-6]`.
pub fn harmonicity(frames: &FrameSequence, track: &PitchTrack) -> Harmonicity {
    let rate = track.sample_rate as f64;
    let mut hnrs = Vec::new();
    let mut nhrs = Vec::new();
    let mut rs = Vec::new();
    for (i, raw) in frames.frames.iter().enumerate() {
        if i >= track.len() || !track.is_voiced(i) {
            continue;
        }
        let lag = (rate / track.f0[i]).round() as usize;
        if lag == 0 || lag >= raw.len() {
            continue;
        }
        let frame = remove_mean(raw);
        let r = normalized_autocorr(&frame, lag).clamp(1e-6, 1.0 - 1e-6);
        hnrs.push(10.0 * (r / (1.0 - r)).log10());
        nhrs.push((1.0 - r) / r);
        rs.push(r);
    }
    if rs.is_empty() {
        return Harmonicity::UNDEFINED;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Harmonicity {
        hnr_db: mean(&hnrs),
        nhr: mean(&nhrs),
        harmonicity_mean: mean(&rs),
    }
}

/// First three formant frequencies per emitted frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormantTrack {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
}

impl FormantTrack {
    pub fn len(&self) -> usize {
        self.f1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f1.is_empty()
    }
}

/// Default LPC order for formant analysis: `2 + rate/1000`, rounded.
pub fn default_formant_lpc_order(rate: u32) -> usize {
    2 + (rate as f64 / 1000.0).round() as usize
}

/// LPC root formant tracker over voiced frames.
///
/// Each voiced frame is pre-emphasized, Hann-windowed and fit with an
/// autocorrelation LPC of the given order; polynomial roots with bandwidth
/// under 400 Hz and angle in (0, pi) become formant candidates. Frames with
/// fewer than three candidates are skipped, as are frames where Levinson or
/// the root finder fails.
pub fn formant_track(frames: &FrameSequence, track: &PitchTrack, lpc_order: usize) -> FormantTrack {
    let rate = frames.sample_rate as f64;
    let window = dsp::hann(frames.frame_len);
    let mut out = FormantTrack::default();
    for (i, raw) in frames.frames.iter().enumerate() {
        if i >= track.len() || !track.is_voiced(i) {
            continue;
        }
        let mut frame: Vec<f64> = raw.clone();
        dsp::pre_emphasize(&mut frame, 0.97);
        for (x, w) in frame.iter_mut().zip(&window) {
            *x *= w;
        }
        let r = dsp::autocorrelation(&frame, lpc_order);
        let Some((a, _err)) = dsp::levinson(&r, lpc_order) else {
            continue;
        };
        // A(z) = z^p - a1 z^(p-1) - ... - ap; ascending coefficients.
        let mut coeffs: Vec<f64> = a.iter().rev().map(|c| -c).collect();
        coeffs.push(1.0);
        let Some(roots) = dsp::poly_roots(&coeffs) else {
            continue;
        };

        let mut candidates: Vec<f64> = Vec::new();
        for z in roots {
            if z.im <= 0.0 {
                continue; // keep angle in (0, pi): upper half plane only
            }
            let angle = z.im.atan2(z.re);
            if angle <= 0.0 || angle >= std::f64::consts::PI {
                continue;
            }
            let freq = angle * rate / (2.0 * std::f64::consts::PI);
            let norm = z.norm();
            if norm <= 0.0 || norm >= 1.0 {
                continue;
            }
            let bandwidth = -norm.ln() * rate / std::f64::consts::PI;
            // 50 Hz guard keeps spectral-tilt roots out of F1.
            if bandwidth < 400.0 && freq > 50.0 && freq < rate / 2.0 - 50.0 {
                candidates.push(freq);
            }
        }
        if candidates.len() < 3 {
            continue;
        }
        candidates.sort_by(f64::total_cmp);
        out.f1.push(candidates[0]);
        out.f2.push(candidates[1]);
        out.f3.push(candidates[2]);
    }
    out
}

/// Voicing and segment-duration statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoicingProfile {
    pub voiced_frames: usize,
    pub unvoiced_frames: usize,
    pub voiced_fraction: f64,
    /// Voiced-to-unvoiced transitions in the pitch track.
    pub n_breaks: usize,
    pub mean_segment_s: f64,
    pub n_segments_speech: usize,
    pub n_segments_disfluency: usize,
    pub total_pause_s: f64,
}

pub fn voicing_profile(track: &PitchTrack, segs: &SegmentList, rate: u32) -> VoicingProfile {
    let voiced = track.voiced_count();
    let total = track.len();
    let n_breaks = track
        .f0
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] == 0.0)
        .count();
    let durations: Vec<f64> = segs
        .segments
        .iter()
        .map(|s| s.len() as f64 / rate as f64)
        .collect();
    VoicingProfile {
        voiced_frames: voiced,
        unvoiced_frames: total - voiced,
        voiced_fraction: if total > 0 {
            voiced as f64 / total as f64
        } else {
            f64::NAN
        },
        n_breaks,
        mean_segment_s: if durations.is_empty() {
            f64::NAN
        } else {
            durations.iter().sum::<f64>() / durations.len() as f64
        },
        n_segments_speech: segs.count(SegmentLabel::Speech),
        n_segments_disfluency: segs.count(SegmentLabel::Disfluency),
        total_pause_s: segs.samples(SegmentLabel::Disfluency) as f64 / rate as f64,
    }
}
