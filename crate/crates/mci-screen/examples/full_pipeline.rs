//! End-to-end run at desk scale: synthesize a labeled corpus, extract the
//! full feature set per recording, select features, and cross-validate the
//! four classifiers.
//!
//! A scaled-down version of what `mci-screen run` does (fewer recordings and
//! folds so the example finishes quickly).

use mci_screen::pipeline::{cmd_extract, cmd_run, PipelineConfig};
use mci_screen::synth::{synth_corpus, SynthCorpusSpec};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig {
        cv_folds: 4,
        seed: 1,
        ..PipelineConfig::default()
    };
    cfg.mlp.epochs = 120;
    cfg.cnn.epochs = 120;

    let corpus = SynthCorpusSpec {
        n_per_class: 8,
        ..SynthCorpusSpec::default()
    };
    println!("synthesizing {} recordings...", 2 * corpus.n_per_class);
    synth_corpus(&corpus, dir.path(), &cfg.hash()).unwrap();

    println!("extracting features...");
    let extract = cmd_extract(dir.path(), &dir.path().join("labels.csv"), &cfg, false).unwrap();
    println!(
        "dataset: {} recordings x {} features",
        extract.dataset.n_rows(),
        extract.dataset.dim()
    );

    println!("selecting and cross-validating...");
    let outcome = cmd_run(&extract.dataset, &cfg).unwrap();
    println!("{}", outcome.report.funnel_line());
    for e in &outcome.report.evaluations {
        println!(
            "{:<8} CER {:>5.2}%  (CR {:.1}%, MCI {:.1}%)",
            e.classifier.name(),
            e.overall_cer,
            e.per_class_cer[0],
            e.per_class_cer[1]
        );
    }
}
