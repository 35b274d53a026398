//! Two-stage feature selection — Mann-Whitney U filter then linear-SVM
//! recursive feature elimination — plus min-max normalization.

use crate::classifiers::svm;
use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};

/// U statistic and two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `min(U_a, U_b)` from midranks.
    pub u: f64,
    pub p_two_sided: f64,
}

/// Which p-value route to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// Exact when `|a| + |b| <= 16` and no ties, otherwise normal.
    Auto,
    /// Exact enumeration of the U null distribution (requires no ties).
    Exact,
    /// Normal approximation with tie and continuity corrections.
    NormalApprox,
}

/// Midranks of the pooled sample, then the two rank sums.
fn u_statistics(a: &[f64], b: &[f64]) -> (f64, f64, bool, Vec<usize>) {
    let n1 = a.len();
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sum_a = 0.0;
    let mut has_ties = false;
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0; // average of ranks i+1..=j
        if j - i > 1 {
            has_ties = true;
            tie_sizes.push(j - i);
        }
        for item in &pooled[i..j] {
            if item.1 {
                rank_sum_a += midrank;
            }
        }
        i = j;
    }
    let u_a = rank_sum_a - (n1 * (n1 + 1)) as f64 / 2.0;
    let u_b = (n1 * b.len()) as f64 - u_a;
    (u_a, u_b, has_ties, tie_sizes)
}

/// Exact null distribution of U for group sizes (n1, n2): `counts[u]` is the
/// number of rank assignments with `U_a = u`.
///
/// Recurrence on the largest rank: if it belongs to group a it beats all `j`
/// b-items, so `f(u; i, j) = f(u - j; i-1, j) + f(u; i, j-1)`.
fn u_null_counts(n1: usize, n2: usize) -> Vec<f64> {
    let u_max = n1 * n2;
    // prev[j][u] = f(u; i-1, j), rolled over i
    let mut prev: Vec<Vec<f64>> = vec![vec![0.0; u_max + 1]; n2 + 1];
    for row in &mut prev {
        row[0] = 1.0; // no a-items: U = 0
    }
    for _i in 1..=n1 {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; u_max + 1]; n2 + 1];
        cur[0][0] = 1.0; // no b-items: U = 0
        for j in 1..=n2 {
            for u in 0..=u_max {
                let from_a = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = from_a + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev[n2].clone()
}

/// Exact two-sided p-value: `min(1, 2 P(U <= u))` under the null.
pub fn exact_p_two_sided(n1: usize, n2: usize, u: f64) -> f64 {
    let counts = u_null_counts(n1, n2);
    let total: f64 = counts.iter().sum();
    let cutoff = u.floor() as usize;
    let cdf: f64 = counts.iter().take(cutoff.min(n1 * n2) + 1).sum();
    (2.0 * cdf / total).min(1.0)
}

/// Abramowitz-Stegun 7.1.26 erf approximation (|error| < 1.5e-7).
fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Normal-approximation two-sided p with tie, continuity, and kurtosis
/// corrections.
///
/// The plain continuity-corrected normal misses the exact distribution by up
/// to ~0.011 at 8x8; adding the symmetric Edgeworth term with the exact
/// excess kurtosis of the tie-free null,
/// `gamma2 = -(6/5)(n1^2 + n2^2 + n1 n2 + n1 + n2) / (n1 n2 (n1 + n2 + 1))`,
/// brings it under 6e-4 there.
pub fn normal_approx_p(n1: usize, n2: usize, u: f64, tie_sizes: &[usize]) -> f64 {
    let n = (n1 + n2) as f64;
    let prod = (n1 * n2) as f64;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum::<f64>()
        / (n * (n - 1.0));
    let var = prod / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0; // everything tied
    }
    let z = (u - prod / 2.0 + 0.5) / var.sqrt();
    let plain = normal_cdf(z);
    let gamma2 = -(6.0 / 5.0) * ((n1 * n1 + n2 * n2 + n1 * n2 + n1 + n2) as f64)
        / (prod * (n + 1.0));
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let corrected = plain - density * (gamma2 / 24.0) * (z * z * z - 3.0 * z);
    // Edgeworth expansions overshoot deep in the tails (the corrected CDF can
    // go non-positive); the plain normal is already adequate out there.
    let cdf = if corrected > 0.0 { corrected } else { plain };
    (2.0 * cdf).clamp(0.0, 1.0)
}

/// Two-sided Mann-Whitney U test from midranks.
///
/// `U = min(U_a, U_b)`; the exact route enumerates the U null distribution
/// when both groups fit (`|a| + |b| <= 16`) and there are no ties, otherwise
/// the normal approximation with tie and continuity corrections is used.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    mann_whitney_u_with(a, b, PValueMethod::Auto)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: PValueMethod) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both groups must be non-empty");
    let (u_a, u_b, has_ties, tie_sizes) = u_statistics(a, b);
    let u = u_a.min(u_b);
    let exact_ok = !has_ties && a.len() + b.len() <= 16;
    let p = match method {
        PValueMethod::Exact => {
            assert!(!has_ties, "exact p-value requires tie-free samples");
            exact_p_two_sided(a.len(), b.len(), u)
        }
        PValueMethod::NormalApprox => normal_approx_p(a.len(), b.len(), u, &tie_sizes),
        PValueMethod::Auto => {
            if exact_ok {
                exact_p_two_sided(a.len(), b.len(), u)
            } else {
                normal_approx_p(a.len(), b.len(), u, &tie_sizes)
            }
        }
    };
    MannWhitney { u, p_two_sided: p }
}

/// Per-feature record of both selection stages.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeatureReport {
    pub name: String,
    pub u: f64,
    pub p_value: f64,
    pub u_kept: bool,
    pub svm_rank: Option<usize>,
    pub final_kept: bool,
}

/// Full selection report: one entry per original feature.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SelectionReport {
    pub alpha: f64,
    pub target_k: usize,
    pub entries: Vec<FeatureReport>,
}

impl SelectionReport {
    /// CSV dump: `feature,u,p,u_kept,svm_rank,final_kept`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,u,p,u_kept,svm_rank,final_kept\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.name,
                e.u,
                e.p_value,
                e.u_kept,
                e.svm_rank.map(|r| r.to_string()).unwrap_or_default(),
                e.final_kept
            ));
        }
        out
    }
}

/// Stage parameters for the two-stage selection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SelectionConfig {
    /// U-test significance threshold (keep p < alpha).
    pub alpha: f64,
    /// Features kept after SVM ranking.
    pub top_k: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            top_k: 80,
        }
    }
}

/// Mann-Whitney U filter: keep features whose two-sided p is below alpha.
pub fn u_test_filter(ds: &Dataset, alpha: f64) -> Result<(Dataset, SelectionReport)> {
    let mut entries = Vec::with_capacity(ds.dim());
    let mut kept = Vec::new();
    for j in 0..ds.dim() {
        let a = ds.column_of_class(j, ClassLabel::Cr);
        let b = ds.column_of_class(j, ClassLabel::Mci);
        let mw = mann_whitney_u(&a, &b);
        let keep = mw.p_two_sided < alpha;
        if keep {
            kept.push(j);
        }
        entries.push(FeatureReport {
            name: ds.feature_names[j].clone(),
            u: mw.u,
            p_value: mw.p_two_sided,
            u_kept: keep,
            svm_rank: None,
            final_kept: false,
        });
    }
    if kept.is_empty() {
        return Err(Error::NoFeaturesSurvive { alpha });
    }
    Ok((
        ds.select_columns(&kept),
        SelectionReport {
            alpha,
            target_k: 0,
            entries,
        },
    ))
}

/// Recursive feature elimination driven by linear-SVM weights.
///
/// Repeatedly trains an SMO linear SVM (C = 1) on the surviving features and
/// drops those with the smallest `w^2`; eliminations run in batches of 10% of
/// the survivors until 20 remain, then one at a time. Returns `rank[j]` for
/// every column of `ds` (1 = last survivor). Expects features normalized to
/// [0, 1].
pub fn svm_attribute_rank(ds: &Dataset) -> Result<Vec<usize>> {
    let d = ds.dim();
    let y = svm::signed_labels(ds);
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut eliminated: Vec<usize> = Vec::with_capacity(d); // worst first

    while !remaining.is_empty() {
        if remaining.len() == 1 {
            eliminated.push(remaining.pop().unwrap());
            break;
        }
        let view = ds.select_columns(&remaining);
        let model = svm::train_linear(&view.rows, &y, 1.0, 1e-3, 1_000_000)?;
        let mut scored: Vec<(f64, usize)> = model
            .w
            .iter()
            .enumerate()
            .map(|(pos, w)| (w * w, pos))
            .collect();
        // smallest weight first; position index breaks ties deterministically
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let batch = if remaining.len() > 20 {
            (remaining.len() / 10).max(1).min(remaining.len() - 20)
        } else {
            1
        };
        let drop_positions: Vec<usize> = scored[..batch].iter().map(|&(_, pos)| pos).collect();
        for &pos in &drop_positions {
            eliminated.push(remaining[pos]);
        }
        let drop_set: std::collections::HashSet<usize> = drop_positions.into_iter().collect();
        remaining = remaining
            .iter()
            .enumerate()
            .filter(|(pos, _)| !drop_set.contains(pos))
            .map(|(_, &col)| col)
            .collect();
    }

    // reverse elimination order: last eliminated = rank 1
    let mut rank = vec![0usize; d];
    for (pos, &col) in eliminated.iter().enumerate() {
        rank[col] = d - pos;
    }
    Ok(rank)
}

/// Keep the k best-ranked features, preserving original column order.
pub fn select_top(ds: &Dataset, ranking: &[usize], k: usize) -> Result<Dataset> {
    assert_eq!(ranking.len(), ds.dim());
    if k > ds.dim() {
        return Err(Error::TopKTooLarge { k, d: ds.dim() });
    }
    let keep: Vec<usize> = (0..ds.dim()).filter(|&j| ranking[j] <= k).collect();
    Ok(ds.select_columns(&keep))
}

/// Per-feature min/max fitted on training data.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NormalizationParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

pub fn fit_minmax(ds: &Dataset) -> NormalizationParams {
    let mut mins = vec![f64::INFINITY; ds.dim()];
    let mut maxs = vec![f64::NEG_INFINITY; ds.dim()];
    for row in &ds.rows {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    NormalizationParams { mins, maxs }
}

/// Map to [0, 1]: `x' = (x - min) / (max - min)`, constant features map to 0,
/// out-of-range values (test data under training params) clamp to [0, 1].
pub fn apply_minmax(ds: &Dataset, params: &NormalizationParams) -> Dataset {
    let mut out = ds.clone();
    for row in &mut out.rows {
        for (j, v) in row.iter_mut().enumerate() {
            let range = params.maxs[j] - params.mins[j];
            *v = if range > 0.0 {
                ((*v - params.mins[j]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    out
}

/// Funnel of dataset dimensions through the selection stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Funnel {
    pub d_initial: usize,
    pub d_utest: usize,
    pub d_final: usize,
}

impl std::fmt::Display for Funnel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -> {} -> {}", self.d_initial, self.d_utest, self.d_final)
    }
}

/// Result of running both selection stages on a training set.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    /// The selected columns of the input dataset (original values).
    pub dataset: Dataset,
    /// Indices of the kept columns in the input dataset.
    pub kept: Vec<usize>,
    pub report: SelectionReport,
    pub funnel: Funnel,
}

/// U-test filter, min-max normalization, SVM-RFE ranking, then top-k cut.
///
/// `top_k` is capped at the number of U-test survivors. The returned dataset
/// carries original (un-normalized) values; fit normalization on it before
/// training.
pub fn two_stage_select(ds: &Dataset, cfg: &SelectionConfig) -> Result<SelectionOutcome> {
    let (filtered, mut report) = u_test_filter(ds, cfg.alpha)?;
    report.target_k = cfg.top_k;
    let u_kept: Vec<usize> = (0..ds.dim()).filter(|&j| report.entries[j].u_kept).collect();

    let params = fit_minmax(&filtered);
    let normalized = apply_minmax(&filtered, &params);
    let ranking = svm_attribute_rank(&normalized)?;
    for (pos, &col) in u_kept.iter().enumerate() {
        report.entries[col].svm_rank = Some(ranking[pos]);
    }

    let k = cfg.top_k.min(filtered.dim());
    let selected = select_top(&filtered, &ranking, k)?;
    let kept: Vec<usize> = u_kept
        .iter()
        .enumerate()
        .filter(|(pos, _)| ranking[*pos] <= k)
        .map(|(_, &col)| col)
        .collect();
    for &col in &kept {
        report.entries[col].final_kept = true;
    }
    let funnel = Funnel {
        d_initial: ds.dim(),
        d_utest: filtered.dim(),
        d_final: selected.dim(),
    };
    Ok(SelectionOutcome {
        dataset: selected,
        kept,
        report,
        funnel,
    })
}
