//! Train all four classifiers (plus the majority baseline) on one toy
//! dataset and save/reload a model.

use mci_screen::classifiers::{predict, save_model, train, ClassifierSpec};
use mci_screen::dataset::{ClassLabel, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 40;
    let labels: Vec<ClassLabel> = (0..n)
        .map(|i| if i % 2 == 0 { ClassLabel::Cr } else { ClassLabel::Mci })
        .collect();
    // 25 features so the CNN sees a 5x5 grid
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&label| {
            let base = if label == ClassLabel::Cr { 0.25 } else { 0.75 };
            (0..25).map(|_| base + 0.15 * rng.gen_range(-1.0..1.0)).collect()
        })
        .collect();
    let ds = Dataset {
        feature_names: (0..25).map(|j| format!("f{j}")).collect(),
        ids: (0..n).map(|i| format!("r{i}")).collect(),
        rows,
        labels,
        provenance: Vec::new(),
    };

    let mut suite = ClassifierSpec::default_suite();
    suite.push(ClassifierSpec::Majority);
    for spec in suite {
        let model = train(&spec, &ds).unwrap();
        let errors = ds
            .rows
            .iter()
            .zip(&ds.labels)
            .filter(|(x, &y)| predict(&model, x).unwrap() != y)
            .count();
        println!(
            "{:<9} training CER {:>5.1}%",
            spec.name(),
            100.0 * errors as f64 / n as f64
        );
    }

    // save/load round trip
    let model = train(&ClassifierSpec::default_suite()[1], &ds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("svm.model");
    save_model(&model, &path).unwrap();
    let back = mci_screen::classifiers::load_model(&path).unwrap();
    println!(
        "\nsaved and reloaded a {} model ({} bytes); predictions agree: {}",
        back.kind(),
        std::fs::metadata(&path).unwrap().len(),
        ds.rows
            .iter()
            .all(|x| predict(&model, x).unwrap() == predict(&back, x).unwrap())
    );
}
