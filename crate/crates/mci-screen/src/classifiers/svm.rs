//! Linear support-vector classifier trained by sequential minimal
//! optimization (SMO).
//!
//! Labels map to the dual problem as CR = -1, MCI = +1; the decision function
//! is `w·x + b` with MCI on the positive side. The solver keeps `w` explicit
//! (linear kernel), picks the second multiplier by the largest `|E_i - E_j|`
//! with a deterministic full-scan fallback, and stops when a full sweep finds
//! no KKT violation beyond the tolerance.

use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SvmSpec {
    /// Box constraint.
    pub c: f64,
    /// KKT tolerance.
    pub tolerance: f64,
    /// Cap on successful pair updates before giving up.
    pub max_iters: usize,
}

impl Default for SvmSpec {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_iters: 100_000,
        }
    }
}

/// Raw SMO solution on +-1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    /// Successful pair updates performed.
    pub iterations: usize,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }

    /// Largest KKT violation over the training set.
    pub fn kkt_violation(&self, x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..x.len() {
            let margin = y[i] * self.decision(&x[i]);
            let a = self.alpha[i];
            let v = if a <= 1e-9 {
                1.0 - margin // alpha = 0 requires y f >= 1
            } else if a >= c - 1e-9 {
                margin - 1.0 // alpha = C requires y f <= 1
            } else {
                (margin - 1.0).abs() // interior requires y f = 1
            };
            worst = worst.max(v.max(0.0));
        }
        worst
    }
}

/// Train a linear SVM on raw rows with labels in {-1, +1}.
pub fn train_linear(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    tolerance: f64,
    max_iters: usize,
) -> Result<LinearSvm> {
    let n = x.len();
    assert!(n >= 2, "need at least two samples");
    assert!(y.iter().all(|&v| v == 1.0 || v == -1.0), "labels must be +-1");
    let d = x[0].len();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut iterations = 0usize;

    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };

    // Try to optimize the (i, j) pair; returns true on progress.
    let step = |i: usize,
                    j: usize,
                    alpha: &mut Vec<f64>,
                    w: &mut Vec<f64>,
                    b: &mut f64|
     -> bool {
        if i == j {
            return false;
        }
        let f_i = dot(w, &x[i]) + *b;
        let f_j = dot(w, &x[j]) + *b;
        let e_i = f_i - y[i];
        let e_j = f_j - y[j];

        let (lo, hi) = if y[i] != y[j] {
            (
                (alpha[j] - alpha[i]).max(0.0),
                (c + alpha[j] - alpha[i]).min(c),
            )
        } else {
            (
                (alpha[i] + alpha[j] - c).max(0.0),
                (alpha[i] + alpha[j]).min(c),
            )
        };
        if lo >= hi {
            return false;
        }
        let k_ii = dot(&x[i], &x[i]);
        let k_jj = dot(&x[j], &x[j]);
        let k_ij = dot(&x[i], &x[j]);
        let eta = 2.0 * k_ij - k_ii - k_jj;
        if eta >= 0.0 {
            return false;
        }
        let mut a_j = alpha[j] - y[j] * (e_i - e_j) / eta;
        a_j = a_j.clamp(lo, hi);
        if (a_j - alpha[j]).abs() < 1e-9 {
            return false;
        }
        let a_i = alpha[i] + y[i] * y[j] * (alpha[j] - a_j);

        let d_i = a_i - alpha[i];
        let d_j = a_j - alpha[j];
        let b1 = *b - e_i - y[i] * d_i * k_ii - y[j] * d_j * k_ij;
        let b2 = *b - e_j - y[i] * d_i * k_ij - y[j] * d_j * k_jj;
        *b = if a_i > 0.0 && a_i < c {
            b1
        } else if a_j > 0.0 && a_j < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        for (wk, (xi, xj)) in w.iter_mut().zip(x[i].iter().zip(&x[j])) {
            *wk += y[i] * d_i * xi + y[j] * d_j * xj;
        }
        alpha[i] = a_i;
        alpha[j] = a_j;
        true
    };

    loop {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = dot(&w, &x[i]) + b - y[i];
            let violates = (y[i] * e_i < -tolerance && alpha[i] < c)
                || (y[i] * e_i > tolerance && alpha[i] > 0.0);
            if !violates {
                continue;
            }
            // second-choice heuristic: largest |E_i - E_j| first
            let mut best_j = usize::MAX;
            let mut best_gap = -1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (e_i - (dot(&w, &x[j]) + b - y[j])).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best_j = j;
                }
            }
            let mut progressed = best_j != usize::MAX && step(i, best_j, &mut alpha, &mut w, &mut b);
            if !progressed {
                for j in 0..n {
                    if j != i && j != best_j && step(i, j, &mut alpha, &mut w, &mut b) {
                        progressed = true;
                        break;
                    }
                }
            }
            if progressed {
                changed += 1;
                iterations += 1;
                if iterations > max_iters {
                    return Err(Error::SmoNonConvergence { iterations });
                }
            }
        }
        if changed == 0 {
            break;
        }
    }

    Ok(LinearSvm {
        w,
        b,
        alpha,
        iterations,
    })
}

/// Trained SVM with its class mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub svm: LinearSvm,
    pub c: f64,
}

impl SvmModel {
    pub fn input_dim(&self) -> usize {
        self.svm.w.len()
    }

    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        if self.svm.decision(x) >= 0.0 {
            ClassLabel::Mci
        } else {
            ClassLabel::Cr
        }
    }
}

/// +1 for MCI, -1 for CR.
pub fn signed_labels(ds: &Dataset) -> Vec<f64> {
    ds.labels
        .iter()
        .map(|l| match l {
            ClassLabel::Mci => 1.0,
            ClassLabel::Cr => -1.0,
        })
        .collect()
}

pub fn train(spec: &SvmSpec, ds: &Dataset) -> Result<SvmModel> {
    let y = signed_labels(ds);
    let svm = train_linear(&ds.rows, &y, spec.c, spec.tolerance, spec.max_iters)?;
    Ok(SvmModel { svm, c: spec.c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_2d() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![-1.0, -1.0, 1.0, 1.0],
        )
    }

    #[test]
    fn separable_set_reaches_zero_training_error() {
        let (x, y) = separable_2d();
        let svm = train_linear(&x, &y, 1.0, 1e-3, 100_000).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert!(yi * svm.decision(xi) > 0.0, "misclassified {xi:?}");
        }
        assert!(svm.kkt_violation(&x, &y, 1.0) <= 1e-3);
    }

    #[test]
    fn dual_constraints_hold_at_convergence() {
        let (x, y) = separable_2d();
        let svm = train_linear(&x, &y, 1.0, 1e-3, 100_000).unwrap();
        for &a in &svm.alpha {
            assert!((-1e-12..=1.0 + 1e-12).contains(&a), "alpha = {a}");
        }
        let balance: f64 = svm.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(balance.abs() < 1e-8, "sum alpha*y = {balance}");
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = separable_2d();
        let a = train_linear(&x, &y, 1.0, 1e-3, 100_000).unwrap();
        let b = train_linear(&x, &y, 1.0, 1e-3, 100_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_arithmetic_of_decision() {
        let model = SvmModel {
            svm: LinearSvm {
                w: vec![1.0, 0.0],
                b: -0.5,
                alpha: vec![],
                iterations: 0,
            },
            c: 1.0,
        };
        assert_eq!(model.predict(&[0.9, 0.2]), ClassLabel::Mci);
        assert_eq!(model.predict(&[0.1, 0.9]), ClassLabel::Cr);
    }

    #[test]
    fn iteration_cap_yields_distinct_error() {
        // overlapping classes force many updates; a tiny cap trips the error
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64 / 7.0, (i % 5) as f64 / 5.0])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let res = train_linear(&x, &y, 1.0, 1e-4, 3);
        assert!(matches!(res, Err(Error::SmoNonConvergence { iterations }) if iterations > 3));
    }
}
