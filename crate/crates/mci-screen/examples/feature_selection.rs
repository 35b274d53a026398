//! Two-stage feature selection on a toy dataset: Mann-Whitney U filter, then
//! SVM recursive feature elimination down to a top-k set.

use mci_screen::dataset::{ClassLabel, Dataset};
use mci_screen::selection::{mann_whitney_u, two_stage_select, SelectionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    // 40 recordings, 3 informative features hidden among 57 noise columns
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40;
    let labels: Vec<ClassLabel> = (0..n)
        .map(|i| if i < 20 { ClassLabel::Cr } else { ClassLabel::Mci })
        .collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&label| {
            (0..60)
                .map(|j| {
                    let base: f64 = rng.gen_range(0.0..0.5);
                    match (j, label) {
                        (0..=2, ClassLabel::Mci) => base + 0.45,
                        _ => base,
                    }
                })
                .collect()
        })
        .collect();
    let ds = Dataset {
        feature_names: (0..60).map(|j| format!("f{j:02}")).collect(),
        ids: (0..n).map(|i| format!("r{i}")).collect(),
        rows,
        labels,
        provenance: Vec::new(),
    };

    // a single U test, spelled out
    let mw = mann_whitney_u(
        &ds.column_of_class(0, ClassLabel::Cr),
        &ds.column_of_class(0, ClassLabel::Mci),
    );
    println!("feature f00: U = {}, two-sided p = {:.2e}", mw.u, mw.p_two_sided);

    let cfg = SelectionConfig {
        alpha: 0.1,
        top_k: 10,
    };
    let outcome = two_stage_select(&ds, &cfg).unwrap();
    println!("funnel: {}", outcome.funnel);

    println!("\ntop-ranked features:");
    let mut finals: Vec<_> = outcome
        .report
        .entries
        .iter()
        .filter(|e| e.final_kept)
        .collect();
    finals.sort_by_key(|e| e.svm_rank);
    for e in finals {
        println!(
            "  rank {:>2}  {}  (p = {:.2e})",
            e.svm_rank.unwrap(),
            e.name,
            e.p_value
        );
    }
}
