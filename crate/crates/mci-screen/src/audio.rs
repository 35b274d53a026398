//! WAV loading, resampling and framing.
//!
//! All analysis runs at a single canonical rate ([`CANONICAL_RATE`], 22050 Hz);
//! inputs at other rates are resampled on load. Only RIFF/WAVE PCM 16-bit
//! files (mono or stereo) are accepted.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Canonical analysis sample rate in Hz. Filterbanks, pitch-lag ranges and
/// LPC orders are all derived from it.
pub const CANONICAL_RATE: u32 = 22050;

/// A mono audio buffer with its sample rate.
///
/// Samples are `f64` in `[-1, 1]`. A zero-length buffer is only produced by
/// [`crate::segmentation::split_streams`] when a recording contains no
/// material of one class; loading a zero-length file is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Fixed-length analysis windows cut from a signal.
///
/// Every frame has exactly `frame_len` samples; the last frame is zero-padded
/// when the signal is shorter than one frame. Offsets advance by `hop`.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop: usize,
    /// Start sample of each frame in the original signal.
    pub offsets: Vec<usize>,
    pub sample_rate: u32,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Center time of frame `i` in seconds.
    pub fn center_time(&self, i: usize) -> f64 {
        (self.offsets[i] as f64 + self.frame_len as f64 / 2.0) / self.sample_rate as f64
    }
}

/// Convert a duration in milliseconds to a whole number of samples (floor).
pub fn ms_to_samples(ms: f64, rate: u32) -> usize {
    ((ms * rate as f64) / 1000.0) as usize
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Load a RIFF/WAVE PCM 16-bit file as a mono signal.
///
/// Stereo files are averaged to mono. Integer samples are scaled by 1/32768,
/// so the PCM extreme -32768 maps to exactly -1.0.
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| Error::WavIo {
            path: path.to_owned(),
            source,
        })?;

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::WavNotRiff {
            path: path.to_owned(),
        });
    }

    let malformed = |detail: &str| Error::WavMalformed {
        path: path.to_owned(),
        detail: detail.to_string(),
    };

    // Walk the chunk list for "fmt " and "data".
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(&bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).filter(|&e| e <= bytes.len());
        match id {
            b"fmt " => {
                if size < 16 || body_end.is_none() {
                    return Err(malformed("truncated fmt chunk"));
                }
                fmt = Some((
                    read_u16(&bytes, body_start),
                    read_u16(&bytes, body_start + 2),
                    read_u32(&bytes, body_start + 4),
                    read_u16(&bytes, body_start + 14),
                ));
            }
            b"data" => {
                let end = body_end.ok_or_else(|| malformed("truncated data chunk"))?;
                data = Some(&bytes[body_start..end]);
            }
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_start + size + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| malformed("missing fmt chunk"))?;
    if format != 1 || bits != 16 {
        return Err(Error::WavUnsupportedEncoding {
            path: path.to_owned(),
            format,
            bits,
        });
    }
    if channels == 0 || channels > 2 {
        return Err(Error::WavUnsupportedChannels {
            path: path.to_owned(),
            channels,
        });
    }
    if rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    let data = data.ok_or_else(|| malformed("missing data chunk"))?;

    let bytes_per_frame = 2 * channels as usize;
    let n_frames = data.len() / bytes_per_frame;
    if n_frames == 0 {
        return Err(Error::WavZeroLength {
            path: path.to_owned(),
        });
    }

    let mut samples = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let at = i * bytes_per_frame;
        let mut acc = 0.0;
        for c in 0..channels as usize {
            let v = i16::from_le_bytes([data[at + 2 * c], data[at + 2 * c + 1]]);
            acc += v as f64 / 32768.0;
        }
        samples.push(acc / channels as f64);
    }
    Ok(AudioSignal::new(samples, rate))
}

/// Write a mono signal as RIFF/WAVE PCM 16-bit.
///
/// Samples are quantized with `round(x * 32768)` clamped to the i16 range, so
/// a read-back differs from the original by at most 1/32768 per sample.
pub fn write_wav(sig: &AudioSignal, path: &Path) -> Result<()> {
    let n = sig.samples.len();
    let data_size = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sig.sample_rate.to_le_bytes());
    out.extend_from_slice(&(sig.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &x in &sig.samples {
        let q = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

/// Resample by linear interpolation.
///
/// Duration is preserved to within one output sample. Identity when the
/// target rate equals the input rate.
pub fn resample(sig: &AudioSignal, target_rate: u32) -> AudioSignal {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == sig.sample_rate || sig.is_empty() {
        return AudioSignal::new(sig.samples.clone(), target_rate.max(1));
    }
    let n = sig.samples.len();
    let ratio = target_rate as f64 / sig.sample_rate as f64;
    let out_len = ((n as f64) * ratio).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let src = i as f64 / ratio;
        let lo = src.floor() as usize;
        if lo + 1 >= n {
            out.push(sig.samples[n - 1]);
        } else {
            let frac = src - lo as f64;
            out.push(sig.samples[lo] * (1.0 - frac) + sig.samples[lo + 1] * frac);
        }
    }
    AudioSignal::new(out, target_rate)
}

/// Cut a signal into fixed-length frames.
///
/// Frame count is `(N - frame_len) / hop + 1` (integer division) once the
/// signal spans at least one frame; a signal shorter than one frame yields a
/// single zero-padded frame. A signal shorter than one hop is an error.
pub fn frame(sig: &AudioSignal, frame_ms: f64, hop_ms: f64) -> Result<FrameSequence> {
    if !(hop_ms > 0.0 && hop_ms <= frame_ms) {
        return Err(Error::BadFraming { frame_ms, hop_ms });
    }
    let frame_len = ms_to_samples(frame_ms, sig.sample_rate).max(1);
    let hop = ms_to_samples(hop_ms, sig.sample_rate).max(1);
    let n = sig.samples.len();
    if n < hop {
        return Err(Error::SignalTooShort { len: n, min: hop });
    }

    let count = if n >= frame_len {
        (n - frame_len) / hop + 1
    } else {
        1
    };
    let mut frames = Vec::with_capacity(count);
    let mut offsets = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * hop;
        let end = (start + frame_len).min(n);
        let mut f = Vec::with_capacity(frame_len);
        f.extend_from_slice(&sig.samples[start..end]);
        f.resize(frame_len, 0.0); // zero-pad a partial final frame
        frames.push(f);
        offsets.push(start);
    }
    Ok(FrameSequence {
        frames,
        frame_len,
        hop,
        offsets,
        sample_rate: sig.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp;
    use std::f64::consts::PI;

    fn sine(freq: f64, rate: u32, n: usize, amp: f64) -> AudioSignal {
        let samples = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect();
        AudioSignal::new(samples, rate)
    }

    fn write_raw_pcm16(path: &Path, rate: u32, channels: u16, pcm: &[i16]) {
        let data_size = (pcm.len() * 2) as u32;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_size).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_size.to_le_bytes());
        for &v in pcm {
            out.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, out).unwrap();
    }

    #[test]
    fn read_silence_second() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("silence.wav");
        write_raw_pcm16(&path, 22050, 1, &vec![0i16; 22050]);
        let sig = read_wav(&path).unwrap();
        assert_eq!(sig.len(), 22050);
        assert_eq!(sig.sample_rate, 22050);
        assert!(sig.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stereo_opposite_channels_average_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        // interleaved (+0.5, -0.5)
        let mut pcm = Vec::new();
        for _ in 0..1000 {
            pcm.push(16384i16);
            pcm.push(-16384i16);
        }
        write_raw_pcm16(&path, 22050, 2, &pcm);
        let sig = read_wav(&path).unwrap();
        assert_eq!(sig.len(), 1000);
        assert!(sig.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pcm_extreme_scales_to_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extreme.wav");
        write_raw_pcm16(&path, 8000, 1, &[-32768, 32767, 0]);
        let sig = read_wav(&path).unwrap();
        assert_eq!(sig.samples[0], -1.0);
        assert_eq!(sig.samples[1], 32767.0 / 32768.0);
        assert_eq!(sig.samples[2], 0.0);
    }

    #[test]
    fn distinct_error_values() {
        let dir = tempfile::tempdir().unwrap();

        let missing = dir.path().join("missing.wav");
        assert!(matches!(read_wav(&missing), Err(Error::WavIo { .. })));

        let garbage = dir.path().join("garbage.wav");
        std::fs::write(&garbage, b"not a wav at all").unwrap();
        assert!(matches!(read_wav(&garbage), Err(Error::WavNotRiff { .. })));

        let empty = dir.path().join("empty.wav");
        write_raw_pcm16(&empty, 22050, 1, &[]);
        assert!(matches!(read_wav(&empty), Err(Error::WavZeroLength { .. })));

        // float-encoded (format code 3) refused
        let float = dir.path().join("float.wav");
        let mut bytes = std::fs::read(dir.path().join("empty.wav")).unwrap();
        bytes[20] = 3;
        std::fs::write(&float, bytes).unwrap();
        assert!(matches!(
            read_wav(&float),
            Err(Error::WavUnsupportedEncoding { format: 3, .. })
        ));
    }

    #[test]
    fn wav_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let sig = sine(220.0, 22050, 4410, 0.7);
        write_wav(&sig, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), sig.len());
        let max_err = sig
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1.0 / 32768.0, "max_err = {max_err}");
    }

    #[test]
    fn resample_identity_when_rate_matches() {
        let sig = sine(100.0, 22050, 2205, 0.5);
        let out = resample(&sig, 22050);
        assert_eq!(out, sig);
    }

    #[test]
    fn resample_constant_stays_constant() {
        let sig = AudioSignal::new(vec![0.3; 4410], 44100);
        for rate in [22050, 16000, 48000] {
            let out = resample(&sig, rate);
            assert!(out.samples.iter().all(|&x| (x - 0.3).abs() < 1e-12));
            assert!((out.duration_s() - sig.duration_s()).abs() <= 1.0 / rate as f64);
        }
    }

    #[test]
    fn resample_preserves_dominant_frequency() {
        // FFT oracle: dominant bin of a 220 Hz sine survives 44100 -> 22050.
        let sig = sine(220.0, 44100, 44100, 0.9);
        let out = resample(&sig, 22050);
        let n = 16384;
        let spec = dsp::power_spectrum(&out.samples[..n], n);
        let peak_bin = spec
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let bin_hz = 22050.0 / n as f64;
        let peak_hz = peak_bin as f64 * bin_hz;
        assert!((peak_hz - 220.0).abs() <= bin_hz, "peak at {peak_hz} Hz");
    }

    #[test]
    fn frame_count_matches_hand_oracle() {
        // 22050 samples at 25 ms / 10 ms -> 551/220 samples -> 98 frames.
        let sig = AudioSignal::new(vec![0.1; 22050], 22050);
        let fs = frame(&sig, 25.0, 10.0).unwrap();
        assert_eq!(fs.frame_len, 551);
        assert_eq!(fs.hop, 220);
        assert_eq!(fs.len(), 98);
        assert!(fs.offsets.windows(2).all(|w| w[1] - w[0] == 220));
    }

    #[test]
    fn exact_frame_length_yields_one_frame() {
        let sig = AudioSignal::new(vec![0.5; 551], 22050);
        let fs = frame(&sig, 25.0, 10.0).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs.frames[0].len(), 551);
    }

    #[test]
    fn short_signal_zero_pads_tail() {
        // longer than a hop, shorter than a frame: one frame, zero tail
        let sig = AudioSignal::new(vec![0.5; 300], 22050);
        let fs = frame(&sig, 25.0, 10.0).unwrap();
        assert_eq!(fs.len(), 1);
        let tail: f64 = fs.frames[0][300..].iter().sum();
        assert_eq!(tail, 0.0);
        assert_eq!(fs.frames[0].len(), 551);
    }

    #[test]
    fn shorter_than_hop_is_error() {
        let sig = AudioSignal::new(vec![0.5; 100], 22050);
        assert!(matches!(
            frame(&sig, 25.0, 10.0),
            Err(Error::SignalTooShort { .. })
        ));
    }

    #[test]
    fn overlap_add_reconstructs_hop_slices() {
        let sig = sine(317.0, 22050, 22050, 0.8);
        let fs = frame(&sig, 25.0, 10.0).unwrap();
        let mut rebuilt = Vec::new();
        for f in &fs.frames {
            rebuilt.extend_from_slice(&f[..fs.hop]);
        }
        for (i, &x) in rebuilt.iter().enumerate() {
            assert_eq!(x, sig.samples[i], "sample {i}");
        }
    }
}
