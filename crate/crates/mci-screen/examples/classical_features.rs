//! Classical voice descriptors on a synthetic vowel: pitch, jitter, shimmer,
//! HNR, formants and frame statistics.

use std::f64::consts::PI;

use mci_screen::audio::{self, AudioSignal, CANONICAL_RATE};
use mci_screen::features::classical;

/// Impulse train through three formant resonators, lightly jittered.
fn synthetic_vowel(n: usize, period: usize) -> Vec<f64> {
    let rate = CANONICAL_RATE as f64;
    let mut x: Vec<f64> = (0..n).map(|i| if i % period == 0 { 1.0 } else { 0.0 }).collect();
    for &(freq, bw) in &[(700.0, 100.0), (1220.0, 120.0), (2600.0, 160.0)] {
        let r = (-PI * bw / rate).exp();
        let c1 = 2.0 * r * (2.0 * PI * freq / rate).cos();
        let c2 = -r * r;
        let mut y = vec![0.0; n];
        for i in 0..n {
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
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().map(|v| 0.8 * v / peak).collect()
}

fn main() {
    let period = 210; // -> f0 = 105 Hz
    let sig = AudioSignal::new(synthetic_vowel(CANONICAL_RATE as usize, period), CANONICAL_RATE);
    let frames = audio::frame(&sig, 25.0, 10.0).unwrap();

    let track = classical::pitch_track(
        &frames,
        CANONICAL_RATE,
        classical::DEFAULT_F0_MIN,
        classical::DEFAULT_F0_MAX,
        classical::DEFAULT_VOICING_THRESHOLD,
    );
    let voiced = track.voiced_f0();
    println!(
        "pitch: {}/{} voiced frames, mean f0 {:.1} Hz (true {:.1})",
        voiced.len(),
        track.len(),
        voiced.iter().sum::<f64>() / voiced.len() as f64,
        CANONICAL_RATE as f64 / period as f64
    );

    let p = classical::perturbation(&sig, &track);
    println!(
        "perturbation: jitter {:.5}, shimmer {:.5}, APQ {:.5}",
        p.jitter_local, p.shimmer_local, p.apq
    );

    let h = classical::harmonicity(&frames, &track);
    println!(
        "harmonicity: HNR {:.1} dB, NHR {:.4}, mean r {:.4}",
        h.hnr_db, h.nhr, h.harmonicity_mean
    );

    let ft = classical::formant_track(
        &frames,
        &track,
        classical::default_formant_lpc_order(CANONICAL_RATE),
    );
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!(
        "formants ({} frames): F1 {:.0} Hz, F2 {:.0} Hz, F3 {:.0} Hz",
        ft.len(),
        mean(&ft.f1),
        mean(&ft.f2),
        mean(&ft.f3)
    );

    let d = classical::frame_descriptors(&frames.frames[10], CANONICAL_RATE);
    println!(
        "frame 10: energy {:.4}, intensity {:.1} dB, zcr {:.3}, centroid {:.0} Hz",
        d.short_time_energy, d.intensity_db, d.zcr, d.spectral_centroid
    );
}
