//! Four trainable classifiers behind one train/predict contract: k-NN,
//! linear SVM (SMO), MLP, and a small CNN, plus a majority-class baseline.
//!
//! Training is single-threaded and deterministic for a fixed spec and seed;
//! trained models are immutable.

pub mod cnn;
pub mod knn;
pub mod mlp;
mod model_io;
pub mod svm;

pub use cnn::{cnn_forward, reshape_to_grid, shape_chain, CnnModel, CnnSpec, ShapeChain};
pub use knn::{KnnModel, KnnSpec};
pub use mlp::{MlpModel, MlpSpec};
pub use model_io::{load_model, model_to_string, save_model, save_model_tagged};
pub use svm::{SvmModel, SvmSpec};

use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};

/// Which classifier to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn(KnnSpec),
    Svm(SvmSpec),
    Mlp(MlpSpec),
    Cnn(CnnSpec),
    /// Constant majority-class baseline (ZeroR).
    Majority,
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn(_) => "knn",
            ClassifierSpec::Svm(_) => "svm",
            ClassifierSpec::Mlp(_) => "mlp",
            ClassifierSpec::Cnn(_) => "cnn",
            ClassifierSpec::Majority => "majority",
        }
    }

    /// The four classifiers of the pipeline with default parameters.
    pub fn default_suite() -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec::Knn(KnnSpec::default()),
            ClassifierSpec::Svm(SvmSpec::default()),
            ClassifierSpec::Mlp(MlpSpec::default()),
            ClassifierSpec::Cnn(CnnSpec::default()),
        ]
    }
}

/// A trained, immutable model.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Knn(KnnModel),
    Svm(SvmModel),
    Mlp(MlpModel),
    Cnn(CnnModel),
    Majority(MajorityModel),
}

/// Majority-class baseline model.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityModel {
    pub label: ClassLabel,
    pub input_dim: usize,
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.input_dim(),
            TrainedModel::Svm(m) => m.input_dim(),
            TrainedModel::Mlp(m) => m.input_dim(),
            TrainedModel::Cnn(m) => m.input_dim(),
            TrainedModel::Majority(m) => m.input_dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Knn(_) => "knn",
            TrainedModel::Svm(_) => "svm",
            TrainedModel::Mlp(_) => "mlp",
            TrainedModel::Cnn(_) => "cnn",
            TrainedModel::Majority(_) => "majority",
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Train a classifier on a (normalized) two-class dataset.
pub fn train(spec: &ClassifierSpec, ds: &Dataset) -> Result<TrainedModel> {
    assert!(ds.n_rows() >= 2, "need at least two training rows");
    Ok(match spec {
        ClassifierSpec::Knn(s) => TrainedModel::Knn(knn::train(s, ds)),
        ClassifierSpec::Svm(s) => TrainedModel::Svm(svm::train(s, ds)?),
        ClassifierSpec::Mlp(s) => TrainedModel::Mlp(mlp::train(s, ds)?),
        ClassifierSpec::Cnn(s) => TrainedModel::Cnn(cnn::train(s, ds)?),
        ClassifierSpec::Majority => {
            let counts = ds.class_counts();
            let label = if counts[ClassLabel::Mci.index()] > counts[ClassLabel::Cr.index()] {
                ClassLabel::Mci
            } else {
                ClassLabel::Cr
            };
            TrainedModel::Majority(MajorityModel {
                label,
                input_dim: ds.dim(),
            })
        }
    })
}

/// Predict the class of one feature vector.
pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<ClassLabel> {
    check_dim(model.input_dim(), x.len())?;
    Ok(match model {
        TrainedModel::Knn(m) => m.predict(x),
        TrainedModel::Svm(m) => m.predict(x),
        TrainedModel::Mlp(m) => m.predict(x),
        TrainedModel::Cnn(m) => m.predict(x),
        TrainedModel::Majority(m) => m.label,
    })
}

/// Backprop-vs-finite-difference gradient verification for the MLP and CNN.
///
/// Compares the analytic full-batch gradient at the seeded initial weights
/// against central finite differences (h = 1e-5) and returns the worst
/// relative error. Only meaningful for small nets (at most ~200 parameters).
pub fn gradient_check(spec: &ClassifierSpec, ds: &Dataset) -> Result<f64> {
    match spec {
        ClassifierSpec::Mlp(s) => mlp::gradient_check(s, ds),
        ClassifierSpec::Cnn(s) => cnn::gradient_check(s, ds),
        other => panic!("gradient_check only applies to MLP/CNN, got {}", other.name()),
    }
}

/// Shared relative-error metric for gradient checks. Differences below 1e-7
/// count as zero (finite-difference noise floor).
pub(crate) fn grad_rel_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff < 1e-7 {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    pub(crate) fn toy_dataset(xs: Vec<Vec<f64>>, ys: Vec<ClassLabel>) -> Dataset {
        let d = xs[0].len();
        Dataset {
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            ids: (0..xs.len()).map(|i| format!("r{i}")).collect(),
            rows: xs,
            labels: ys,
            provenance: Vec::new(),
        }
    }

    #[test]
    fn majority_baseline_predicts_constant() {
        let ds = toy_dataset(
            vec![vec![0.0], vec![0.1], vec![0.9]],
            vec![ClassLabel::Cr, ClassLabel::Cr, ClassLabel::Mci],
        );
        let model = train(&ClassifierSpec::Majority, &ds).unwrap();
        assert_eq!(predict(&model, &[0.95]).unwrap(), ClassLabel::Cr);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ds = toy_dataset(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![ClassLabel::Cr, ClassLabel::Mci],
        );
        let model = train(&ClassifierSpec::Knn(KnnSpec::default()), &ds).unwrap();
        assert!(matches!(
            predict(&model, &[0.5]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }
}
