//! Voice-activity detection and speech/disfluency stream splitting.
//!
//! A recording is partitioned into maximal runs labeled `Speech` or
//! `Disfluency` (pauses and other non-speech material). The two concatenated
//! streams feed the feature extractors separately.

use crate::audio::{self, AudioSignal};
use crate::error::{Error, Result};

/// Label of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLabel {
    Speech,
    Disfluency,
}

impl std::fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SegmentLabel::Speech => write!(f, "speech"),
            SegmentLabel::Disfluency => write!(f, "disfluency"),
        }
    }
}

/// Half-open sample interval `[start, end)` with a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: SegmentLabel,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// Ordered, contiguous, label-alternating partition of `[0, total_len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentList {
    pub segments: Vec<Segment>,
    pub total_len: usize,
}

impl SegmentList {
    /// Build from raw segments, checking the partition invariants.
    pub fn new(segments: Vec<Segment>, total_len: usize) -> Result<Self> {
        let list = Self {
            segments,
            total_len,
        };
        list.validate()?;
        Ok(list)
    }

    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::BadSegments("empty segment list".into()));
        }
        let mut cursor = 0;
        let mut last_label = None;
        for s in &self.segments {
            if s.start != cursor || s.is_empty() {
                return Err(Error::BadSegments(format!(
                    "segment [{}, {}) breaks contiguity at {}",
                    s.start, s.end, cursor
                )));
            }
            if last_label == Some(s.label) {
                return Err(Error::BadSegments(format!(
                    "adjacent segments share label {}",
                    s.label
                )));
            }
            last_label = Some(s.label);
            cursor = s.end;
        }
        if cursor != self.total_len {
            return Err(Error::BadSegments(format!(
                "segments cover [0, {cursor}) but signal has {} samples",
                self.total_len
            )));
        }
        Ok(())
    }

    pub fn count(&self, label: SegmentLabel) -> usize {
        self.segments.iter().filter(|s| s.label == label).count()
    }

    /// Total samples carrying `label`.
    pub fn samples(&self, label: SegmentLabel) -> usize {
        self.segments
            .iter()
            .filter(|s| s.label == label)
            .map(Segment::len)
            .sum()
    }

    /// CSV dump with columns `start_s,end_s,label`, 6-decimal seconds.
    pub fn to_csv(&self, sample_rate: u32) -> String {
        let mut out = String::from("start_s,end_s,label\n");
        for s in &self.segments {
            out.push_str(&format!(
                "{:.6},{:.6},{}\n",
                s.start as f64 / sample_rate as f64,
                s.end as f64 / sample_rate as f64,
                s.label
            ));
        }
        out
    }
}

/// Energy/ZCR VAD parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VadConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    /// A frame is active when its energy exceeds this factor times the noise
    /// floor (mean energy of the quietest decile of frames).
    pub energy_threshold_factor: f64,
    /// Active frames must stay below this zero-crossing rate.
    pub zcr_threshold: f64,
    /// Inactive gaps no longer than this many frames, flanked by active
    /// frames on both sides, are kept active (bridges short intra-word dips).
    pub hangover_frames: usize,
    /// Runs shorter than this are merged into a neighbor.
    pub min_segment_ms: f64,
    /// Low-ZCR frames above this absolute energy are active regardless of the
    /// relative threshold; without it a recording with no silence at all
    /// would be measured against its own speech as the floor.
    pub min_active_energy: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            hop_ms: 10.0,
            energy_threshold_factor: 3.0,
            zcr_threshold: 0.35,
            hangover_frames: 5,
            min_segment_ms: 100.0,
            min_active_energy: 1e-4,
        }
    }
}

/// Mean-square energy of a window.
pub fn short_time_energy(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64
}

/// Zero-crossing rate: sign changes per sample interval.
pub fn zero_crossing_rate(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    crossings as f64 / (frame.len() - 1) as f64
}

/// Partition a recording into speech and disfluency segments.
///
/// Deterministic: identical input and config yield an identical list.
pub fn vad(sig: &AudioSignal, cfg: &VadConfig) -> Result<SegmentList> {
    let frame_len = audio::ms_to_samples(cfg.frame_ms, sig.sample_rate);
    if sig.len() < frame_len {
        return Err(Error::SignalTooShort {
            len: sig.len(),
            min: frame_len,
        });
    }
    let frames = audio::frame(sig, cfg.frame_ms, cfg.hop_ms)?;
    let n_frames = frames.len();

    let energies: Vec<f64> = frames.frames.iter().map(|f| short_time_energy(f)).collect();
    let zcrs: Vec<f64> = frames.frames.iter().map(|f| zero_crossing_rate(f)).collect();

    // Noise floor: mean energy of the quietest decile (at least one frame).
    let mut sorted = energies.clone();
    sorted.sort_by(f64::total_cmp);
    let decile = (n_frames / 10).max(1);
    let noise_floor = sorted[..decile].iter().sum::<f64>() / decile as f64;

    let mut active: Vec<bool> = (0..n_frames)
        .map(|i| {
            let energetic = energies[i] > cfg.energy_threshold_factor * noise_floor
                || energies[i] > cfg.min_active_energy;
            energetic && zcrs[i] < cfg.zcr_threshold
        })
        .collect();

    bridge_gaps(&mut active, cfg.hangover_frames);

    // Frame flags -> runs in frame indices.
    let mut runs: Vec<(bool, usize, usize)> = Vec::new(); // (flag, start, end)
    for (i, &a) in active.iter().enumerate() {
        match runs.last_mut() {
            Some((flag, _, end)) if *flag == a => *end = i + 1,
            _ => runs.push((a, i, i + 1)),
        }
    }

    // A frame index run [fs, fe) spans samples [fs*hop, fe*hop), except the
    // final run which absorbs the tail.
    let span = |run: &(bool, usize, usize), last: bool| -> (usize, usize) {
        let start = run.1 * frames.hop;
        let end = if last { sig.len() } else { run.2 * frames.hop };
        (start, end)
    };

    // Merge runs shorter than min_segment_ms into a neighbor (the longer one;
    // ties and edges resolve to the earlier neighbor).
    let min_samples = audio::ms_to_samples(cfg.min_segment_ms, sig.sample_rate);
    loop {
        if runs.len() <= 1 {
            break;
        }
        let n_runs = runs.len();
        let shortest = (0..n_runs)
            .map(|i| {
                let (s, e) = span(&runs[i], i == n_runs - 1);
                (e - s, i)
            })
            .filter(|&(len, _)| len < min_samples)
            .min();
        let Some((_, idx)) = shortest else { break };

        let into_prev = if idx == 0 {
            false
        } else if idx == n_runs - 1 {
            true
        } else {
            let (ps, pe) = span(&runs[idx - 1], false);
            let (ns, ne) = span(&runs[idx + 1], idx + 1 == n_runs - 1);
            pe - ps >= ne - ns
        };
        let neighbor = if into_prev { idx - 1 } else { idx + 1 };
        runs[idx].0 = runs[neighbor].0;

        // Coalesce adjacent equal-flag runs.
        let mut merged: Vec<(bool, usize, usize)> = Vec::with_capacity(runs.len());
        for r in runs.drain(..) {
            match merged.last_mut() {
                Some((flag, _, end)) if *flag == r.0 => *end = r.2,
                _ => merged.push(r),
            }
        }
        runs = merged;
    }

    let n_runs = runs.len();
    let segments = runs
        .iter()
        .enumerate()
        .map(|(i, run)| {
            let (start, end) = span(run, i == n_runs - 1);
            Segment {
                start,
                end,
                label: if run.0 {
                    SegmentLabel::Speech
                } else {
                    SegmentLabel::Disfluency
                },
            }
        })
        .collect();
    SegmentList::new(segments, sig.len())
}

fn bridge_gaps(active: &mut [bool], max_gap: usize) {
    if max_gap == 0 {
        return;
    }
    let mut last_active: Option<usize> = None;
    for i in 0..active.len() {
        if active[i] {
            if let Some(prev) = last_active {
                if i - prev - 1 <= max_gap {
                    for slot in &mut active[prev + 1..i] {
                        *slot = true;
                    }
                }
            }
            last_active = Some(i);
        }
    }
}

/// Concatenate all speech-labeled samples and all disfluency-labeled samples
/// into two streams. Either may come back empty.
pub fn split_streams(sig: &AudioSignal, segs: &SegmentList) -> (AudioSignal, AudioSignal) {
    debug_assert_eq!(segs.total_len, sig.len());
    let mut speech = Vec::with_capacity(segs.samples(SegmentLabel::Speech));
    let mut disfluency = Vec::with_capacity(segs.samples(SegmentLabel::Disfluency));
    for s in &segs.segments {
        let slice = &sig.samples[s.start..s.end];
        match s.label {
            SegmentLabel::Speech => speech.extend_from_slice(slice),
            SegmentLabel::Disfluency => disfluency.extend_from_slice(slice),
        }
    }
    (
        AudioSignal::new(speech, sig.sample_rate),
        AudioSignal::new(disfluency, sig.sample_rate),
    )
}
