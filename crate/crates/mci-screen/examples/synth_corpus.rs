//! Generate a small synthetic corpus and show what lands on disk.

use mci_screen::pipeline::sha256_short;
use mci_screen::synth::{synth_corpus, SynthCorpusSpec};

fn main() {
    let spec = SynthCorpusSpec {
        n_per_class: 3,
        ..SynthCorpusSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let hash = sha256_short(&serde_json::to_string(&spec).unwrap());
    let manifest = synth_corpus(&spec, dir.path(), &hash).unwrap();

    println!("wrote {} recordings to {}:", manifest.len(), dir.path().display());
    for (file, label) in &manifest {
        let bytes = std::fs::metadata(dir.path().join(file)).unwrap().len();
        println!("  {file}  ({label}, {bytes} bytes)");
    }

    let truth = std::fs::read_to_string(dir.path().join("mci_000.segments.csv")).unwrap();
    println!("\nground truth of mci_000.wav:\n{truth}");
}
