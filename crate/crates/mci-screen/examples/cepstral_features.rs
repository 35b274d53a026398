//! MFCC, LPCC and PLP tracks with Δ/ΔΔ regressions on a noisy tone.

use std::f64::consts::PI;

use mci_screen::audio::{self, AudioSignal, CANONICAL_RATE};
use mci_screen::features::perceptual::{self, deltas, lpcc, mfcc, plp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples: Vec<f64> = (0..CANONICAL_RATE as usize)
        .map(|i| {
            let t = i as f64 / CANONICAL_RATE as f64;
            0.4 * (2.0 * PI * 220.0 * t).sin()
                + 0.2 * (2.0 * PI * 440.0 * t).sin()
                + 0.02 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let frames = audio::frame(&AudioSignal::new(samples, CANONICAL_RATE), 25.0, 10.0).unwrap();

    let mfcc_track = mfcc(
        &frames,
        CANONICAL_RATE,
        perceptual::DEFAULT_N_MELS,
        perceptual::DEFAULT_N_COEFFS,
    );
    let (d, dd) = deltas(&mfcc_track, perceptual::DEFAULT_DELTA_WIDTH);
    let lpcc_track = lpcc(
        &frames,
        perceptual::DEFAULT_LPC_ORDER,
        perceptual::DEFAULT_N_COEFFS,
    );
    let plp_track = plp(&frames, CANONICAL_RATE, perceptual::DEFAULT_PLP_ORDER);

    for track in [&mfcc_track, &d, &dd, &lpcc_track, &plp_track] {
        println!(
            "{:<8} {:>3} frames x {:>2} coeffs",
            track.label,
            track.n_frames(),
            track.n_coeffs()
        );
    }

    println!("\nframe 10 of each track (first 6 coefficients):");
    for track in [&mfcc_track, &d, &dd, &lpcc_track, &plp_track] {
        let row: Vec<String> = track.data[10][..6].iter().map(|c| format!("{c:>8.3}")).collect();
        println!("{:<8} {}", track.label, row.join(" "));
    }
}
