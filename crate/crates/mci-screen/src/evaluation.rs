//! Stratified k-fold cross-validation and Classification Error Rate (CER).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{self, ClassifierSpec};
use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};
use crate::selection::{self, Funnel, SelectionConfig};

/// Where selection and normalization are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessPolicy {
    /// Fit on the training folds only (leakage-free default).
    PerFold,
    /// Fit once on the full dataset before splitting (mimics preprocessing
    /// the whole table in one pass).
    Global,
}

/// Cross-validation parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub policy: PreprocessPolicy,
    pub selection: SelectionConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 42,
            policy: PreprocessPolicy::PerFold,
            selection: SelectionConfig::default(),
        }
    }
}

/// Assign each sample to a test fold, preserving class proportions.
///
/// Per class, indices are shuffled by the seed and dealt round-robin; the
/// dealing pointer carries across classes so fold sizes stay within one of
/// each other. Leave-one-out (`k = n`) is allowed when every class has at
/// least two members; otherwise every class needs at least `k`.
pub fn stratified_kfold(labels: &[ClassLabel], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::BadFoldCount { k, n });
    }
    for class in ClassLabel::ALL {
        let count = labels.iter().filter(|&&l| l == class).count();
        let min = if k == n { 2 } else { k };
        if count > 0 && count < min {
            return Err(Error::ClassTooSmall {
                label: class.to_string(),
                count,
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    let mut cursor = 0usize;
    for class in ClassLabel::ALL {
        let mut idxs: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idxs.shuffle(&mut rng);
        for i in idxs {
            assignment[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(assignment)
}

/// Classification Error Rate in percent.
pub fn cer(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    assert!(!truth.is_empty(), "CER of an empty prediction set");
    let wrong = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p != t)
        .count();
    Ok(100.0 * wrong as f64 / truth.len() as f64)
}

/// Cross-validation report for one classifier.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvaluationReport {
    pub classifier: ClassifierSpec,
    pub policy: PreprocessPolicy,
    pub k_folds: usize,
    pub seed: u64,
    pub n_samples: usize,
    /// CER of each test fold.
    pub fold_cers: Vec<f64>,
    /// Pooled CER: all misclassifications over all samples.
    pub overall_cer: f64,
    /// Mean of the per-fold CERs.
    pub mean_fold_cer: f64,
    /// Errors within each class over that class's size (CR, MCI).
    pub per_class_cer: [f64; 2],
    /// Rows = truth (CR, MCI), columns = prediction.
    pub confusion: [[usize; 2]; 2],
    /// Selection funnel per preprocessing fit (one entry under the global
    /// policy, one per fold otherwise).
    pub funnels: Vec<Funnel>,
    /// Wall-clock seconds; excluded from serialized reports so reruns with
    /// equal seeds produce byte-identical files.
    #[serde(skip)]
    pub timing_s: f64,
}

/// Run stratified k-fold cross-validation of one classifier.
///
/// Per the policy, selection (U-test + SVM-RFE + top-k) and min-max
/// normalization are fitted either inside each training fold or once
/// globally; the test fold is always transformed with the fitted parameters.
/// Deterministic for a fixed dataset, spec, and seed.
pub fn cross_validate(
    ds: &Dataset,
    spec: &ClassifierSpec,
    cv: &CvConfig,
) -> Result<EvaluationReport> {
    let started = std::time::Instant::now();
    let n = ds.n_rows();
    let assignment = stratified_kfold(&ds.labels, cv.k, cv.seed)?;

    let global = match cv.policy {
        PreprocessPolicy::Global => {
            let outcome = selection::two_stage_select(ds, &cv.selection)?;
            let params = selection::fit_minmax(&outcome.dataset);
            let normalized = selection::apply_minmax(&outcome.dataset, &params);
            Some((normalized, outcome.funnel))
        }
        PreprocessPolicy::PerFold => None,
    };

    let mut funnels = Vec::new();
    if let Some((_, funnel)) = &global {
        funnels.push(*funnel);
    }
    let mut predictions: Vec<Option<ClassLabel>> = vec![None; n];
    let mut fold_cers = Vec::with_capacity(cv.k);

    for fold in 0..cv.k {
        let test_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        let train_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let fold_err = |source: Error| Error::FoldFailed {
            fold,
            source: Box::new(source),
        };

        let (train_ds, test_ds) = match &global {
            Some((normalized, _)) => (
                normalized.select_rows(&train_idx),
                normalized.select_rows(&test_idx),
            ),
            None => {
                let train_raw = ds.select_rows(&train_idx);
                let outcome =
                    selection::two_stage_select(&train_raw, &cv.selection).map_err(fold_err)?;
                let params = selection::fit_minmax(&outcome.dataset);
                let train_norm = selection::apply_minmax(&outcome.dataset, &params);
                let test_raw = ds.select_rows(&test_idx).select_columns(&outcome.kept);
                let test_norm = selection::apply_minmax(&test_raw, &params);
                funnels.push(outcome.funnel);
                (train_norm, test_norm)
            }
        };

        let model = classifiers::train(spec, &train_ds).map_err(fold_err)?;
        let mut fold_pred = Vec::with_capacity(test_idx.len());
        for (row, &global_idx) in test_ds.rows.iter().zip(&test_idx) {
            let label = classifiers::predict(&model, row).map_err(fold_err)?;
            predictions[global_idx] = Some(label);
            fold_pred.push(label);
        }
        let fold_truth: Vec<ClassLabel> = test_idx.iter().map(|&i| ds.labels[i]).collect();
        fold_cers.push(cer(&fold_pred, &fold_truth)?);
    }

    let predicted: Vec<ClassLabel> = predictions.into_iter().map(Option::unwrap).collect();
    let overall_cer = cer(&predicted, &ds.labels)?;
    let mut confusion = [[0usize; 2]; 2];
    for (p, t) in predicted.iter().zip(&ds.labels) {
        confusion[t.index()][p.index()] += 1;
    }
    let counts = ds.class_counts();
    let per_class_cer = [
        100.0 * confusion[0][1] as f64 / counts[0].max(1) as f64,
        100.0 * confusion[1][0] as f64 / counts[1].max(1) as f64,
    ];
    Ok(EvaluationReport {
        classifier: spec.clone(),
        policy: cv.policy,
        k_folds: cv.k,
        seed: cv.seed,
        n_samples: n,
        mean_fold_cer: fold_cers.iter().sum::<f64>() / fold_cers.len() as f64,
        fold_cers,
        overall_cer,
        per_class_cer,
        confusion,
        funnels,
        timing_s: started.elapsed().as_secs_f64(),
    })
}

impl EvaluationReport {
    /// Flat CSV row for batch sweeps.
    pub fn csv_header() -> &'static str {
        "classifier,policy,k_folds,seed,n_samples,d_initial,d_utest,d_final,overall_cer,mean_fold_cer,cer_cr,cer_mci"
    }

    pub fn to_csv_row(&self) -> String {
        let funnel = self.funnels.first().copied().unwrap_or(Funnel {
            d_initial: 0,
            d_utest: 0,
            d_final: 0,
        });
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.classifier.name(),
            match self.policy {
                PreprocessPolicy::PerFold => "per_fold",
                PreprocessPolicy::Global => "global",
            },
            self.k_folds,
            self.seed,
            self.n_samples,
            funnel.d_initial,
            funnel.d_utest,
            funnel.d_final,
            self.overall_cer,
            self.mean_fold_cer,
            self.per_class_cer[0],
            self.per_class_cer[1]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::KnnSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(n_cr: usize, n_mci: usize) -> Vec<ClassLabel> {
        let mut l = vec![ClassLabel::Cr; n_cr];
        l.extend(vec![ClassLabel::Mci; n_mci]);
        l
    }

    #[test]
    fn sixty_forty_with_ten_folds_is_exactly_balanced() {
        let l = labels(60, 40);
        let assignment = stratified_kfold(&l, 10, 1).unwrap();
        for fold in 0..10 {
            let cr = (0..100)
                .filter(|&i| assignment[i] == fold && l[i] == ClassLabel::Cr)
                .count();
            let mci = (0..100)
                .filter(|&i| assignment[i] == fold && l[i] == ClassLabel::Mci)
                .count();
            assert_eq!((cr, mci), (6, 4), "fold {fold}");
        }
    }

    #[test]
    fn folds_partition_all_indices() {
        let l = labels(23, 17);
        let assignment = stratified_kfold(&l, 7, 3).unwrap();
        assert_eq!(assignment.len(), 40);
        assert!(assignment.iter().all(|&f| f < 7));
        // every fold non-empty and proportions within one sample of ideal
        for fold in 0..7 {
            let size = assignment.iter().filter(|&&f| f == fold).count();
            assert!(size > 0);
            for (class, total) in [(ClassLabel::Cr, 23.0), (ClassLabel::Mci, 17.0)] {
                let got = (0..40)
                    .filter(|&i| assignment[i] == fold && l[i] == class)
                    .count() as f64;
                assert!((got - total / 7.0).abs() < 1.0, "fold {fold} {class}");
            }
        }
    }

    #[test]
    fn same_seed_same_folds_different_seed_differs() {
        let l = labels(30, 30);
        let a = stratified_kfold(&l, 10, 5).unwrap();
        let b = stratified_kfold(&l, 10, 5).unwrap();
        let c = stratified_kfold(&l, 10, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn class_smaller_than_k_is_an_error() {
        let l = labels(12, 5);
        assert!(matches!(
            stratified_kfold(&l, 10, 0),
            Err(Error::ClassTooSmall { .. })
        ));
        assert!(matches!(
            stratified_kfold(&l, 1, 0),
            Err(Error::BadFoldCount { .. })
        ));
        assert!(matches!(
            stratified_kfold(&l, 18, 0),
            Err(Error::BadFoldCount { .. })
        ));
    }

    #[test]
    fn leave_one_out_is_allowed() {
        let l = labels(4, 4);
        let assignment = stratified_kfold(&l, 8, 2).unwrap();
        let mut sorted = assignment.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn cer_examples() {
        use ClassLabel::{Cr, Mci};
        assert_eq!(cer(&[Cr, Mci], &[Cr, Mci]).unwrap(), 0.0);
        assert_eq!(cer(&[Cr, Cr, Cr, Mci], &[Cr, Cr, Cr, Cr]).unwrap(), 25.0);
        assert!(matches!(
            cer(&[Cr], &[Cr, Mci]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    /// Synthetic set where the first `informative` features separate classes.
    fn synthetic_with(
        n_cr: usize,
        n_mci: usize,
        d: usize,
        informative: usize,
        seed: u64,
    ) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = labels(n_cr, n_mci);
        let rows: Vec<Vec<f64>> = l
            .iter()
            .map(|&label| {
                (0..d)
                    .map(|j| {
                        let noise: f64 = rng.gen_range(0.0..0.3);
                        if j < informative && label == ClassLabel::Mci {
                            0.7 + noise
                        } else {
                            noise
                        }
                    })
                    .collect()
            })
            .collect();
        Dataset {
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            ids: (0..l.len()).map(|i| format!("r{i}")).collect(),
            rows,
            labels: l,
            provenance: Vec::new(),
        }
    }

    fn synthetic_dataset(n_cr: usize, n_mci: usize, d: usize, seed: u64) -> Dataset {
        synthetic_with(n_cr, n_mci, d, 5, seed)
    }

    #[test]
    fn majority_baseline_cer_is_minority_share() {
        let ds = synthetic_dataset(60, 40, 10, 9);
        let report = cross_validate(&ds, &ClassifierSpec::Majority, &CvConfig::default()).unwrap();
        assert_eq!(report.overall_cer, 40.0);
        assert_eq!(report.per_class_cer, [0.0, 100.0]);
    }

    #[test]
    fn confusion_matrix_sums_to_n() {
        let ds = synthetic_dataset(60, 40, 10, 10);
        let spec = ClassifierSpec::Knn(KnnSpec::default());
        let report = cross_validate(&ds, &spec, &CvConfig::default()).unwrap();
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, 100);
        assert_eq!(report.confusion[0][0] + report.confusion[0][1], 60);
        assert_eq!(report.confusion[1][0] + report.confusion[1][1], 40);
    }

    #[test]
    fn separable_dataset_is_easy_for_all_classifiers() {
        // enough informative columns that the selected set feeds a 5x5 grid
        let ds = synthetic_with(30, 30, 60, 20, 11);
        for spec in ClassifierSpec::default_suite() {
            let report = cross_validate(&ds, &spec, &CvConfig::default()).unwrap();
            assert!(
                report.overall_cer <= 10.0,
                "{}: CER = {}",
                spec.name(),
                report.overall_cer
            );
            for f in &report.funnels {
                assert!(f.d_initial >= f.d_utest && f.d_utest >= f.d_final);
            }
        }
    }

    #[test]
    fn relabeling_swaps_per_class_cer() {
        let ds = synthetic_dataset(24, 16, 8, 13);
        let mut swapped = ds.clone();
        for l in &mut swapped.labels {
            *l = l.flipped();
        }
        let spec = ClassifierSpec::Knn(KnnSpec::default());
        let cv = CvConfig {
            k: 8,
            ..CvConfig::default()
        };
        let a = cross_validate(&ds, &spec, &cv).unwrap();
        let b = cross_validate(&swapped, &spec, &cv).unwrap();
        assert_eq!(a.overall_cer, b.overall_cer);
        assert_eq!(a.per_class_cer[0], b.per_class_cer[1]);
        assert_eq!(a.per_class_cer[1], b.per_class_cer[0]);
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let ds = synthetic_dataset(30, 30, 12, 17);
        let spec = ClassifierSpec::Knn(KnnSpec::default());
        let a = cross_validate(&ds, &spec, &CvConfig::default()).unwrap();
        let b = cross_validate(&ds, &spec, &CvConfig::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn leave_one_out_cross_validation_runs() {
        let ds = synthetic_dataset(6, 6, 8, 19);
        let spec = ClassifierSpec::Knn(KnnSpec::default());
        let cv = CvConfig {
            k: 12,
            selection: SelectionConfig {
                alpha: 0.2,
                top_k: 8,
            },
            ..CvConfig::default()
        };
        let report = cross_validate(&ds, &spec, &cv).unwrap();
        assert_eq!(report.fold_cers.len(), 12);
        assert_eq!(
            report.confusion.iter().flatten().sum::<usize>(),
            12
        );
    }

    #[test]
    fn fold_errors_carry_the_fold_index() {
        // pure-noise features with a vanishing alpha: selection fails in fold 0
        let ds = synthetic_dataset(10, 10, 4, 23);
        let cv = CvConfig {
            k: 2,
            selection: SelectionConfig {
                alpha: 1e-12,
                top_k: 4,
            },
            ..CvConfig::default()
        };
        let spec = ClassifierSpec::Knn(KnnSpec::default());
        match cross_validate(&ds, &spec, &cv) {
            Err(Error::FoldFailed { fold: 0, source }) => {
                assert!(matches!(*source, Error::NoFeaturesSurvive { .. }));
            }
            other => panic!("expected FoldFailed, got {other:?}"),
        }
    }
}
