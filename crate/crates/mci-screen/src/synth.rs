//! Deterministic synthetic speech corpus with class-conditional pause
//! statistics.
//!
//! Each recording alternates harmonic "vowel" bursts (jittered sawtooth
//! source through three formant resonators) with near-silent pauses drawn
//! from per-class distributions. Ground-truth segments are emitted alongside
//! every WAV, and the whole corpus is a pure function of the spec and seed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{write_wav, AudioSignal};
use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::segmentation::{Segment, SegmentLabel, SegmentList};

/// Class-conditional generator parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClassProfile {
    /// Pauses per second, drawn uniformly per recording.
    pub pause_rate: (f64, f64),
    /// Pause duration range in seconds.
    pub pause_dur_s: (f64, f64),
    /// Vowel fundamental range in Hz (one draw per burst).
    pub f0_range: (f64, f64),
    /// Relative period jitter of the sawtooth source.
    pub f0_jitter: f64,
    /// Additive white-noise amplitude inside bursts.
    pub noise_level: f64,
}

/// Corpus layout: `n_per_class` recordings per class, ~`duration_s` each.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SynthCorpusSpec {
    pub n_per_class: usize,
    pub duration_s: f64,
    pub seed: u64,
    pub cr: ClassProfile,
    pub mci: ClassProfile,
}

impl Default for SynthCorpusSpec {
    fn default() -> Self {
        Self {
            n_per_class: 30,
            duration_s: 3.0,
            seed: 7,
            cr: ClassProfile {
                pause_rate: (0.4, 0.7),
                pause_dur_s: (0.25, 0.45),
                f0_range: (150.0, 220.0),
                f0_jitter: 0.005,
                noise_level: 0.01,
            },
            mci: ClassProfile {
                pause_rate: (0.9, 1.3),
                pause_dur_s: (0.4, 0.65),
                f0_range: (100.0, 160.0),
                f0_jitter: 0.02,
                noise_level: 0.03,
            },
        }
    }
}

const FORMANTS: [(f64, f64); 3] = [(700.0, 100.0), (1220.0, 120.0), (2600.0, 160.0)];
const DITHER_AMP: f64 = 2e-4;
const FADE_S: f64 = 0.01;
const BURST_PEAK: f64 = 0.45;
/// Pauses never exceed this share of a recording, so bursts stay long enough
/// for the VAD's minimum segment length.
const MAX_PAUSE_SHARE: f64 = 0.6;

/// Jittered sawtooth at `f0` through the formant resonator cascade.
fn vowel_burst(
    n: usize,
    rate: u32,
    f0: f64,
    jitter: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    // period-by-period sawtooth source with relative period jitter
    let mut source = Vec::with_capacity(n);
    while source.len() < n {
        let period = (rate as f64 / f0) * (1.0 + jitter * rng.gen_range(-1.0..1.0));
        let len = period.round().max(2.0) as usize;
        for i in 0..len {
            source.push(2.0 * i as f64 / len as f64 - 1.0);
            if source.len() == n {
                break;
            }
        }
    }
    // resonator cascade
    let mut x = source;
    for &(freq, bw) in &FORMANTS {
        let r = (-std::f64::consts::PI * bw / rate as f64).exp();
        let c1 = 2.0 * r * (2.0 * std::f64::consts::PI * freq / rate as f64).cos();
        let c2 = -r * r;
        let mut y = vec![0.0; x.len()];
        for i in 0..x.len() {
            let mut v = x[i];
            if i >= 1 {
                v += c1 * y[i - 1];
            }
            if i >= 2 {
                v += c2 * y[i - 2];
            }
            y[i] = v;
        }
        x = y;
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
    let fade = ((FADE_S * rate as f64) as usize).max(1).min(n / 2);
    for (i, v) in x.iter_mut().enumerate() {
        let mut g = BURST_PEAK / peak;
        if i < fade {
            g *= 0.5 - 0.5 * (std::f64::consts::PI * i as f64 / fade as f64).cos();
        }
        if i + fade >= n {
            let t = (n - 1 - i) as f64 / fade as f64;
            g *= 0.5 - 0.5 * (std::f64::consts::PI * t).cos();
        }
        *v = (*v * g + noise * rng.gen_range(-1.0..1.0)).clamp(-1.0, 1.0);
    }
    x
}

/// One synthetic recording plus its ground-truth segment list.
pub fn synth_recording(
    profile: &ClassProfile,
    duration_s: f64,
    rate: u32,
    rng: &mut ChaCha8Rng,
) -> (AudioSignal, SegmentList) {
    let total = (duration_s * rate as f64) as usize;
    let pause_rate = rng.gen_range(profile.pause_rate.0..=profile.pause_rate.1);
    let n_pauses = (duration_s * pause_rate).round().max(1.0) as usize;
    let mut pause_lens: Vec<usize> = (0..n_pauses)
        .map(|_| {
            let s = rng.gen_range(profile.pause_dur_s.0..=profile.pause_dur_s.1);
            (s * rate as f64) as usize
        })
        .collect();
    let mut pause_total: usize = pause_lens.iter().sum();
    let cap = (total as f64 * MAX_PAUSE_SHARE) as usize;
    if pause_total > cap {
        for len in &mut pause_lens {
            *len = *len * cap / pause_total;
        }
        pause_total = pause_lens.iter().sum();
    }
    let n_bursts = n_pauses + 1;
    let burst_len = (total - pause_total) / n_bursts;

    let mut samples = Vec::with_capacity(total);
    let mut segments = Vec::new();
    for i in 0..n_bursts {
        let len = if i == n_bursts - 1 {
            // last burst absorbs rounding so the recording is exactly `total`
            total - samples.len()
        } else {
            burst_len
        };
        let f0 = rng.gen_range(profile.f0_range.0..=profile.f0_range.1);
        let start = samples.len();
        samples.extend(vowel_burst(
            len,
            rate,
            f0,
            profile.f0_jitter,
            profile.noise_level,
            rng,
        ));
        segments.push(Segment {
            start,
            end: samples.len(),
            label: SegmentLabel::Speech,
        });
        if let Some(&pause_len) = pause_lens.get(i) {
            let start = samples.len();
            for _ in 0..pause_len {
                samples.push(rng.gen_range(-DITHER_AMP..DITHER_AMP));
            }
            segments.push(Segment {
                start,
                end: samples.len(),
                label: SegmentLabel::Disfluency,
            });
        }
    }
    let n = samples.len();
    (
        AudioSignal::new(samples, rate),
        SegmentList::new(segments, n).expect("generator emits a valid partition"),
    )
}

/// Generate the corpus: WAVs, per-recording ground-truth segment CSVs, and a
/// `labels.csv` manifest. Returns (filename, label) pairs in written order.
///
/// `config_hash` is embedded as a `# config=...` comment in every CSV.
pub fn synth_corpus(
    spec: &SynthCorpusSpec,
    out_dir: &Path,
    config_hash: &str,
) -> Result<Vec<(String, ClassLabel)>> {
    assert!(spec.n_per_class >= 1);
    assert!(
        spec.cr != spec.mci,
        "class profiles must differ in at least one parameter"
    );
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_owned(),
        source,
    })?;

    let rate = crate::audio::CANONICAL_RATE;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut manifest = Vec::new();
    for (class, profile) in [(ClassLabel::Cr, &spec.cr), (ClassLabel::Mci, &spec.mci)] {
        for i in 0..spec.n_per_class {
            let (sig, truth) = synth_recording(profile, spec.duration_s, rate, &mut rng);
            let stem = format!("{}_{i:03}", class.to_string().to_lowercase());
            let wav = format!("{stem}.wav");
            write_wav(&sig, &out_dir.join(&wav))?;
            let csv = format!("# config={config_hash}\n{}", truth.to_csv(rate));
            let csv_path = out_dir.join(format!("{stem}.segments.csv"));
            std::fs::write(&csv_path, csv).map_err(|source| Error::Io {
                path: csv_path.clone(),
                source,
            })?;
            manifest.push((wav, class));
        }
    }
    let mut labels = format!("# config={config_hash}\nfilename,label\n");
    for (wav, class) in &manifest {
        labels.push_str(&format!("{wav},{class}\n"));
    }
    let labels_path = out_dir.join("labels.csv");
    std::fs::write(&labels_path, labels).map_err(|source| Error::Io {
        path: labels_path.clone(),
        source,
    })?;
    Ok(manifest)
}
