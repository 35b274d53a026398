//! Voice-activity detection on a synthetic recording: generate one
//! pause-laden utterance, segment it, and print the segment table next to
//! the generator's ground truth.

use mci_screen::audio::CANONICAL_RATE;
use mci_screen::segmentation::{vad, VadConfig};
use mci_screen::synth::{synth_recording, SynthCorpusSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = SynthCorpusSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (sig, truth) = synth_recording(&spec.mci, 3.0, CANONICAL_RATE, &mut rng);

    let segs = vad(&sig, &VadConfig::default()).unwrap();

    println!("{:.1}s recording, {} detected segments:\n", sig.duration_s(), segs.segments.len());
    println!("{:>8}  {:>8}  {:<11}  truth", "start_s", "end_s", "label");
    for (i, s) in segs.segments.iter().enumerate() {
        let truth_label = truth
            .segments
            .get(i)
            .map(|t| t.label.to_string())
            .unwrap_or_default();
        println!(
            "{:>8.3}  {:>8.3}  {:<11}  {}",
            s.start as f64 / CANONICAL_RATE as f64,
            s.end as f64 / CANONICAL_RATE as f64,
            s.label.to_string(),
            truth_label
        );
    }

    let speech = segs.samples(mci_screen::segmentation::SegmentLabel::Speech);
    println!(
        "\nspeech {:.2}s / pause {:.2}s",
        speech as f64 / CANONICAL_RATE as f64,
        (sig.len() - speech) as f64 / CANONICAL_RATE as f64
    );
}
