//! k-nearest-neighbors classifier. Training is storage.

use crate::dataset::{ClassLabel, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct KnnSpec {
    pub k: usize,
}

impl Default for KnnSpec {
    fn default() -> Self {
        Self { k: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
}

impl KnnModel {
    pub fn input_dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Majority vote among the k nearest neighbors by Euclidean distance.
    /// Distance ties break toward the lower training index; vote ties break
    /// toward the single nearest neighbor's label.
    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(dist.len());
        let mut votes = [0usize; 2];
        for &(_, i) in &dist[..k] {
            votes[self.labels[i].index()] += 1;
        }
        if votes[0] == votes[1] {
            self.labels[dist[0].1]
        } else if votes[ClassLabel::Mci.index()] > votes[ClassLabel::Cr.index()] {
            ClassLabel::Mci
        } else {
            ClassLabel::Cr
        }
    }
}

pub fn train(spec: &KnnSpec, ds: &Dataset) -> KnnModel {
    assert!(spec.k >= 1);
    KnnModel {
        k: spec.k,
        points: ds.rows.clone(),
        labels: ds.labels.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(k: usize) -> KnnModel {
        KnnModel {
            k,
            points: vec![
                vec![0.0, 0.0],
                vec![0.1, 0.0],
                vec![1.0, 1.0],
                vec![0.9, 1.0],
            ],
            labels: vec![
                ClassLabel::Cr,
                ClassLabel::Cr,
                ClassLabel::Mci,
                ClassLabel::Mci,
            ],
        }
    }

    #[test]
    fn k1_returns_exact_match_label() {
        let m = model(1);
        assert_eq!(m.predict(&[1.0, 1.0]), ClassLabel::Mci);
        assert_eq!(m.predict(&[0.0, 0.0]), ClassLabel::Cr);
    }

    #[test]
    fn k3_majority_wins() {
        let m = model(3);
        // two CR neighbors and one MCI
        assert_eq!(m.predict(&[0.05, 0.0]), ClassLabel::Cr);
    }

    #[test]
    fn vote_tie_breaks_to_nearest() {
        let m = model(2);
        // nearest is MCI, second is CR -> tie -> nearest wins
        assert_eq!(m.predict(&[0.7, 0.6]), ClassLabel::Mci);
    }

    #[test]
    fn distance_tie_breaks_to_lower_index() {
        let m = KnnModel {
            k: 1,
            points: vec![vec![0.0], vec![2.0]],
            labels: vec![ClassLabel::Mci, ClassLabel::Cr],
        };
        // equidistant from both -> index 0 wins
        assert_eq!(m.predict(&[1.0]), ClassLabel::Mci);
    }

    #[test]
    fn model_size_grows_with_training_set() {
        let ds = crate::classifiers::tests::toy_dataset(
            (0..10).map(|i| vec![i as f64]).collect(),
            (0..10)
                .map(|i| if i < 5 { ClassLabel::Cr } else { ClassLabel::Mci })
                .collect(),
        );
        let m = train(&KnnSpec::default(), &ds);
        assert_eq!(m.points.len(), 10);
    }
}
