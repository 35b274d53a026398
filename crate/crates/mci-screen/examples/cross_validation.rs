//! Stratified 10-fold cross-validation with per-fold (leakage-free) feature
//! selection, reporting CER per classifier.

use mci_screen::classifiers::ClassifierSpec;
use mci_screen::dataset::{ClassLabel, Dataset};
use mci_screen::evaluation::{cross_validate, CvConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let labels: Vec<ClassLabel> = (0..60)
        .map(|i| if i < 30 { ClassLabel::Cr } else { ClassLabel::Mci })
        .collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&label| {
            (0..80)
                .map(|j| {
                    let noise: f64 = rng.gen_range(0.0..0.4);
                    if j < 25 && label == ClassLabel::Mci {
                        noise + 0.4
                    } else {
                        noise
                    }
                })
                .collect()
        })
        .collect();
    let ds = Dataset {
        feature_names: (0..80).map(|j| format!("f{j:02}")).collect(),
        ids: (0..60).map(|i| format!("r{i}")).collect(),
        rows,
        labels,
        provenance: Vec::new(),
    };

    let cv = CvConfig::default(); // k = 10, per-fold selection, seed 42
    println!("classifier  overall   per-fold CERs");
    for spec in ClassifierSpec::default_suite() {
        let report = cross_validate(&ds, &spec, &cv).unwrap();
        let folds: Vec<String> = report.fold_cers.iter().map(|c| format!("{c:.0}")).collect();
        println!(
            "{:<10} {:>6.2}%   [{}]",
            spec.name(),
            report.overall_cer,
            folds.join(" ")
        );
    }
}
