//! Statistical functionals and per-recording feature-vector assembly.
//!
//! Every frame-level track (each cepstral coefficient is its own track) is
//! summarized by six functionals; scalar features (perturbation, harmonicity,
//! voicing counts, non-linear summary) are appended directly. The two streams
//! produce parallel blocks named `<stream>.<family>.<feature>[.<functional>]`;
//! four segment-duration features live in the speech block only, which is why
//! the speech block is slightly larger.
//!
//! Undefined values are IEEE NaN sentinels here; they are imputed to the
//! per-feature training median when a dataset is built, so they never reach
//! selection or training.

use crate::audio::{self, AudioSignal};
use crate::dataset::NamedFeatureVector;
use crate::error::{Error, Result};
use crate::features::{classical, nonlinear, perceptual};
use crate::segmentation::SegmentList;

/// Feature-extraction parameters, shared by both streams.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeatureConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub lpcc_order: usize,
    pub lpcc_coeffs: usize,
    pub plp_order: usize,
    pub delta_width: usize,
    /// Δ/ΔΔ are always computed for MFCC; these extend them to the other
    /// cepstral families (off by default to keep the inventory near the
    /// canonical ~900).
    pub deltas_on_lpcc: bool,
    pub deltas_on_plp: bool,
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// LPC order for formant analysis; `None` derives 2 + rate/1000.
    pub formant_lpc_order: Option<usize>,
    pub entropy_bins: usize,
    pub higuchi_kmax: usize,
    pub pe_order: usize,
    pub pe_delay: usize,
    pub mspe_scales: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            hop_ms: 10.0,
            n_mels: perceptual::DEFAULT_N_MELS,
            n_mfcc: perceptual::DEFAULT_N_COEFFS,
            lpcc_order: perceptual::DEFAULT_LPC_ORDER,
            lpcc_coeffs: perceptual::DEFAULT_N_COEFFS,
            plp_order: perceptual::DEFAULT_PLP_ORDER,
            delta_width: perceptual::DEFAULT_DELTA_WIDTH,
            deltas_on_lpcc: false,
            deltas_on_plp: false,
            f0_min: classical::DEFAULT_F0_MIN,
            f0_max: classical::DEFAULT_F0_MAX,
            voicing_threshold: classical::DEFAULT_VOICING_THRESHOLD,
            formant_lpc_order: None,
            entropy_bins: nonlinear::DEFAULT_ENTROPY_BINS,
            higuchi_kmax: nonlinear::DEFAULT_HIGUCHI_KMAX,
            pe_order: nonlinear::DEFAULT_PE_ORDER,
            pe_delay: nonlinear::DEFAULT_PE_DELAY,
            mspe_scales: nonlinear::DEFAULT_MSPE_SCALES,
        }
    }
}

/// The six summary statistics applied to every frame-level track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub mode: f64,
    pub std: f64,
}

pub const FUNCTIONAL_NAMES: [&str; 6] = ["mean", "median", "min", "max", "mode", "std"];

impl Functionals {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.mean, self.median, self.min, self.max, self.mode, self.std,
        ]
    }

    const UNDEFINED: Functionals = Functionals {
        mean: f64::NAN,
        median: f64::NAN,
        min: f64::NAN,
        max: f64::NAN,
        mode: f64::NAN,
        std: f64::NAN,
    };
}

/// Summary statistics over the finite entries of a series.
///
/// The mode is the center of the most populated of 32 equal-width bins over
/// `[min, max]` (ties go to the lowest bin); std is the population standard
/// deviation. An empty (or all-NaN) series yields all-NaN.
pub fn functionals(series: &[f64]) -> Functionals {
    let finite: Vec<f64> = series.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Functionals::UNDEFINED;
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let mut sorted = finite.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let min = sorted[0];
    let max = *sorted.last().unwrap();
    let std = (finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();

    let mode = if min == max {
        min
    } else {
        const BINS: usize = 32;
        let width = (max - min) / BINS as f64;
        let mut counts = [0usize; BINS];
        for &v in &finite {
            let idx = (((v - min) / (max - min)) * BINS as f64) as usize;
            counts[idx.min(BINS - 1)] += 1;
        }
        let best = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))) // ties -> lowest bin
            .unwrap()
            .0;
        min + (best as f64 + 0.5) * width
    };

    Functionals {
        mean,
        median,
        min,
        max,
        mode,
        std,
    }
}

const STREAMS: [&str; 2] = ["speech", "disfluency"];
const RECORDING_FEATURES: [&str; 4] = [
    "voicing.mean_segment_s",
    "voicing.n_segments_speech",
    "voicing.n_segments_disfluency",
    "voicing.total_pause_s",
];

fn push_functional_names(names: &mut Vec<String>, prefix: &str) {
    for f in FUNCTIONAL_NAMES {
        names.push(format!("{prefix}.{f}"));
    }
}

fn cepstral_labels(cfg: &FeatureConfig) -> Vec<(String, usize)> {
    let mut labels = vec![
        ("mfcc".to_string(), cfg.n_mfcc),
        ("mfcc_d".to_string(), cfg.n_mfcc),
        ("mfcc_dd".to_string(), cfg.n_mfcc),
        ("lpcc".to_string(), cfg.lpcc_coeffs),
    ];
    if cfg.deltas_on_lpcc {
        labels.push(("lpcc_d".to_string(), cfg.lpcc_coeffs));
        labels.push(("lpcc_dd".to_string(), cfg.lpcc_coeffs));
    }
    labels.push(("plp".to_string(), cfg.plp_order + 1));
    if cfg.deltas_on_plp {
        labels.push(("plp_d".to_string(), cfg.plp_order + 1));
        labels.push(("plp_dd".to_string(), cfg.plp_order + 1));
    }
    labels
}

fn stream_names(cfg: &FeatureConfig, stream: &str) -> Vec<String> {
    let mut names = Vec::new();
    for feat in [
        "short_time_energy",
        "intensity_db",
        "zcr",
        "spectral_centroid",
    ] {
        push_functional_names(&mut names, &format!("{stream}.classical.{feat}"));
    }
    push_functional_names(&mut names, &format!("{stream}.pitch.f0"));
    names.push(format!("{stream}.voicing.voiced_frames"));
    names.push(format!("{stream}.voicing.unvoiced_frames"));
    names.push(format!("{stream}.voicing.voiced_fraction"));
    names.push(format!("{stream}.voicing.n_breaks"));
    for feat in ["f1", "f2", "f3"] {
        push_functional_names(&mut names, &format!("{stream}.formant.{feat}"));
    }
    for feat in ["jitter_local", "shimmer_local", "apq"] {
        names.push(format!("{stream}.perturbation.{feat}"));
    }
    for feat in ["hnr_db", "nhr", "harmonicity_mean"] {
        names.push(format!("{stream}.harmonicity.{feat}"));
    }
    for (label, n_coeffs) in cepstral_labels(cfg) {
        for j in 0..n_coeffs {
            push_functional_names(&mut names, &format!("{stream}.{label}.c{j:02}"));
        }
    }
    names.push(format!("{stream}.nonlinear.shannon_entropy"));
    names.push(format!("{stream}.nonlinear.higuchi_fd"));
    for s in 1..=cfg.mspe_scales {
        names.push(format!("{stream}.nonlinear.mspe_s{s}"));
    }
    names
}

/// The full feature-name inventory, a deterministic function of the config.
pub fn feature_names(cfg: &FeatureConfig) -> Vec<String> {
    let mut names = Vec::new();
    for stream in STREAMS {
        names.extend(stream_names(cfg, stream));
        if stream == "speech" {
            for feat in RECORDING_FEATURES {
                names.push(format!("speech.{feat}"));
            }
        }
    }
    names
}

/// Inventory size for a config.
pub fn inventory_size(cfg: &FeatureConfig) -> usize {
    2 * stream_names(cfg, "x").len() + RECORDING_FEATURES.len()
}

fn stream_values(cfg: &FeatureConfig, sig: &AudioSignal) -> Vec<f64> {
    let expected = stream_names(cfg, "x").len();
    match try_stream_values(cfg, sig) {
        Some(values) => {
            debug_assert_eq!(values.len(), expected);
            values
        }
        None => vec![f64::NAN; expected],
    }
}

fn try_stream_values(cfg: &FeatureConfig, sig: &AudioSignal) -> Option<Vec<f64>> {
    if sig.is_empty() {
        return None;
    }
    let frames = audio::frame(sig, cfg.frame_ms, cfg.hop_ms).ok()?;
    let rate = sig.sample_rate;
    let mut values = Vec::new();

    // classical frame descriptors
    let descs: Vec<classical::FrameDescriptors> = frames
        .frames
        .iter()
        .map(|f| classical::frame_descriptors(f, rate))
        .collect();
    for extract in [
        |d: &classical::FrameDescriptors| d.short_time_energy,
        |d: &classical::FrameDescriptors| d.intensity_db,
        |d: &classical::FrameDescriptors| d.zcr,
        |d: &classical::FrameDescriptors| d.spectral_centroid,
    ] {
        let series: Vec<f64> = descs.iter().map(extract).collect();
        values.extend(functionals(&series).as_array());
    }

    // pitch and voicing
    let track = classical::pitch_track(&frames, rate, cfg.f0_min, cfg.f0_max, cfg.voicing_threshold);
    values.extend(functionals(&track.voiced_f0()).as_array());
    let voiced = track.voiced_count();
    let total = track.len();
    values.push(voiced as f64);
    values.push((total - voiced) as f64);
    values.push(if total > 0 {
        voiced as f64 / total as f64
    } else {
        f64::NAN
    });
    values.push(
        track
            .f0
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] == 0.0)
            .count() as f64,
    );

    // formants
    let lpc_order = cfg
        .formant_lpc_order
        .unwrap_or_else(|| classical::default_formant_lpc_order(rate));
    let ft = classical::formant_track(&frames, &track, lpc_order);
    values.extend(functionals(&ft.f1).as_array());
    values.extend(functionals(&ft.f2).as_array());
    values.extend(functionals(&ft.f3).as_array());

    // perturbation and harmonicity
    let p = classical::perturbation(sig, &track);
    values.extend([p.jitter_local, p.shimmer_local, p.apq]);
    let h = classical::harmonicity(&frames, &track);
    values.extend([h.hnr_db, h.nhr, h.harmonicity_mean]);

    // cepstral families
    let mfcc = perceptual::mfcc(&frames, rate, cfg.n_mels, cfg.n_mfcc);
    let (mfcc_d, mfcc_dd) = perceptual::deltas(&mfcc, cfg.delta_width);
    let lpcc = perceptual::lpcc(&frames, cfg.lpcc_order, cfg.lpcc_coeffs);
    let plp = perceptual::plp(&frames, rate, cfg.plp_order);
    let mut tracks = vec![mfcc, mfcc_d, mfcc_dd];
    if cfg.deltas_on_lpcc {
        let (d, dd) = perceptual::deltas(&lpcc, cfg.delta_width);
        tracks.extend([lpcc, d, dd]);
    } else {
        tracks.push(lpcc);
    }
    if cfg.deltas_on_plp {
        let (d, dd) = perceptual::deltas(&plp, cfg.delta_width);
        tracks.extend([plp, d, dd]);
    } else {
        tracks.push(plp);
    }
    for t in &tracks {
        for j in 0..t.n_coeffs() {
            values.extend(functionals(&t.column(j)).as_array());
        }
    }

    // non-linear summary over the raw stream
    let nl = nonlinear::nonlinear_summary(
        &sig.samples,
        cfg.entropy_bins,
        cfg.higuchi_kmax,
        cfg.pe_order,
        cfg.pe_delay,
        cfg.mspe_scales,
    );
    values.push(nl.shannon_entropy);
    values.push(nl.higuchi_fd);
    let mut mspe = nl.mspe;
    mspe.resize(cfg.mspe_scales, f64::NAN); // truncated scales become sentinels
    values.extend(mspe);

    Some(values)
}

/// Assemble the full named feature vector for one recording.
///
/// `speech` and `disfluency` are the two concatenated streams from
/// [`crate::segmentation::split_streams`]; `segs` is the segment list of the
/// whole recording. An empty stream produces an all-NaN block; both streams
/// empty is an error. The caller fills in id and label.
pub fn assemble(
    speech: &AudioSignal,
    disfluency: &AudioSignal,
    segs: &SegmentList,
    cfg: &FeatureConfig,
) -> Result<NamedFeatureVector> {
    if speech.is_empty() && disfluency.is_empty() {
        return Err(Error::BothStreamsEmpty);
    }
    let rate = if speech.is_empty() {
        disfluency.sample_rate
    } else {
        speech.sample_rate
    };
    let names = feature_names(cfg);
    let mut values = Vec::with_capacity(names.len());

    values.extend(stream_values(cfg, speech));
    // recording-level segment statistics (speech block)
    let durations: Vec<f64> = segs
        .segments
        .iter()
        .map(|s| s.len() as f64 / rate as f64)
        .collect();
    values.push(durations.iter().sum::<f64>() / durations.len() as f64);
    values.push(segs.count(crate::segmentation::SegmentLabel::Speech) as f64);
    values.push(segs.count(crate::segmentation::SegmentLabel::Disfluency) as f64);
    values.push(
        segs.samples(crate::segmentation::SegmentLabel::Disfluency) as f64 / rate as f64,
    );
    values.extend(stream_values(cfg, disfluency));

    assert_eq!(values.len(), names.len(), "inventory/value misalignment");
    Ok(NamedFeatureVector {
        id: String::new(),
        label: None,
        names,
        values,
    })
}
