//! Non-linear dynamics measures: Shannon entropy of the amplitude
//! distribution, Higuchi fractal dimension, and (multiscale) permutation
//! entropy.
//!
//! All estimators return NaN sentinels on inputs that are too short instead
//! of failing; the assembly stage imputes sentinels later.

use crate::dsp;

pub const DEFAULT_ENTROPY_BINS: usize = 64;
pub const DEFAULT_HIGUCHI_KMAX: usize = 10;
pub const DEFAULT_PE_ORDER: usize = 3;
pub const DEFAULT_PE_DELAY: usize = 1;
pub const DEFAULT_MSPE_SCALES: usize = 5;

/// Per-stream non-linear summary; `mspe` holds one entry per realized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSummary {
    pub shannon_entropy: f64,
    pub higuchi_fd: f64,
    pub mspe: Vec<f64>,
}

/// Shannon entropy (bits) of the amplitude histogram.
///
/// The histogram spans `[min, max]` with `n_bins` equal bins; a constant
/// signal is defined as 0 bits. Empty input yields NaN. Terms are summed over
/// sorted counts, so any amplitude map that permutes bin occupancies (affine
/// maps in particular) leaves the result bit-identical.
pub fn shannon_entropy(x: &[f64], n_bins: usize) -> f64 {
    assert!(n_bins >= 2, "need at least two bins");
    if x.is_empty() {
        return f64::NAN;
    }
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return f64::NAN;
    }
    if min == max {
        return 0.0;
    }
    let mut counts = vec![0usize; n_bins];
    let width = max - min;
    for &v in x {
        let idx = (((v - min) / width) * n_bins as f64) as usize;
        counts[idx.min(n_bins - 1)] += 1;
    }
    counts.sort_unstable();
    let n = x.len() as f64;
    let h = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// Higuchi fractal dimension.
///
/// Curve lengths `L(k)` for `k = 1..=k_max` are averaged over the `k`
/// decimation offsets with the standard normalization
/// `(N-1) / (floor((N-m)/k) * k)`; the dimension is the negative slope of
/// `ln L(k)` against `ln k`. A constant signal (zero curve length) is defined
/// as 1.0. Inputs shorter than `10 * k_max` yield NaN.
pub fn higuchi_fd(x: &[f64], k_max: usize) -> f64 {
    assert!(k_max >= 2);
    let n = x.len();
    if n < 10 * k_max {
        return f64::NAN;
    }
    let mut ln_k = Vec::with_capacity(k_max);
    let mut ln_l = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut total = 0.0;
        let mut valid = 0usize;
        for m in 0..k {
            let n_pts = (n - 1 - m) / k;
            if n_pts == 0 {
                continue;
            }
            let mut length = 0.0;
            for i in 1..=n_pts {
                length += (x[m + i * k] - x[m + (i - 1) * k]).abs();
            }
            total += length * (n - 1) as f64 / (n_pts * k) as f64 / k as f64;
            valid += 1;
        }
        if valid == 0 {
            continue;
        }
        let l_k = total / valid as f64;
        if l_k > 0.0 {
            ln_k.push((k as f64).ln());
            ln_l.push(l_k.ln());
        }
    }
    if ln_k.len() < 2 {
        return 1.0; // constant or near-constant signal
    }
    -dsp::ls_slope(&ln_k, &ln_l)
}

/// Encode the ordinal pattern of `window` (ties broken by earlier index) as a
/// Lehmer-style index in `0..order!`.
fn ordinal_pattern(window: &[f64]) -> usize {
    let order = window.len();
    let mut idx: Vec<usize> = (0..order).collect();
    idx.sort_by(|&a, &b| window[a].total_cmp(&window[b]).then(a.cmp(&b)));
    // Lehmer code of the permutation.
    let mut code = 0usize;
    for i in 0..order {
        let smaller = idx[i + 1..].iter().filter(|&&j| j < idx[i]).count();
        code = code * (order - i) + smaller;
    }
    code
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Normalized permutation entropy in `[0, 1]`.
///
/// Ordinal patterns of the `(order, delay)` embedding are counted (ties break
/// toward the earlier index) and their entropy is normalized by `ln(order!)`.
/// Too-short inputs yield NaN.
pub fn permutation_entropy(x: &[f64], order: usize, delay: usize) -> f64 {
    assert!((3..=5).contains(&order), "order must be in [3, 5]");
    assert!(delay >= 1);
    let span = (order - 1) * delay;
    if x.len() <= order * delay {
        return f64::NAN;
    }
    let n_patterns = factorial(order);
    let mut counts = vec![0usize; n_patterns];
    let n_windows = x.len() - span;
    let mut window = vec![0.0; order];
    for t in 0..n_windows {
        for (j, slot) in window.iter_mut().enumerate() {
            *slot = x[t + j * delay];
        }
        counts[ordinal_pattern(&window)] += 1;
    }
    let total = n_windows as f64;
    let h: f64 = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>();
    let normalized = h / (n_patterns as f64).ln();
    if normalized == 0.0 {
        0.0 // avoid -0.0 from a single pattern
    } else {
        normalized
    }
}

/// Multiscale permutation entropy.
///
/// Scale `s` coarse-grains the series by non-overlapping means of `s` samples
/// and applies [`permutation_entropy`]. Scales whose coarse-grained series
/// becomes too short are dropped, so the result may have fewer than
/// `n_scales` entries.
pub fn multiscale_pe(x: &[f64], order: usize, delay: usize, n_scales: usize) -> Vec<f64> {
    assert!(n_scales >= 1);
    let mut out = Vec::with_capacity(n_scales);
    for s in 1..=n_scales {
        let coarse: Vec<f64> = x
            .chunks_exact(s)
            .map(|c| c.iter().sum::<f64>() / s as f64)
            .collect();
        if coarse.len() <= order * delay {
            break;
        }
        out.push(permutation_entropy(&coarse, order, delay));
    }
    out
}

/// All three non-linear measures with the given parameters.
pub fn nonlinear_summary(
    x: &[f64],
    n_bins: usize,
    k_max: usize,
    order: usize,
    delay: usize,
    n_scales: usize,
) -> NonlinearSummary {
    NonlinearSummary {
        shannon_entropy: shannon_entropy(x, n_bins),
        higuchi_fd: higuchi_fd(x, k_max),
        mspe: multiscale_pe(x, order, delay, n_scales),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    fn gaussian_noise(n: usize, seed: u64) -> Vec<f64> {
        // Box-Muller on a seeded stream.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect()
    }

    #[test]
    fn entropy_of_constant_is_zero() {
        assert_eq!(shannon_entropy(&[0.42; 1000], 64), 0.0);
    }

    #[test]
    fn entropy_of_eight_uniform_bins_is_three_bits() {
        // values 0..7 hit the 8 bins exactly once each
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(shannon_entropy(&x, 8), 3.0);
    }

    #[test]
    fn entropy_of_seeded_uniform_noise() {
        let h = shannon_entropy(&uniform_noise(100_000, 42), 64);
        assert!((h - 6.0).abs() <= 0.05, "H = {h}");
    }

    #[test]
    fn entropy_invariant_under_affine_maps() {
        // dyadic values with power-of-two affine maps keep the transform
        // exact in binary floating point, so the invariance is exact; pinning
        // min=0 and max=4095/4096 puts no value on an interior bin edge
        // (gcd(64, 4095) = 1), so mirrored binning cannot shift counts
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x: Vec<f64> = (0..5000)
            .map(|_| rng.gen_range(0..4096) as f64 / 4096.0)
            .collect();
        x.push(0.0);
        x.push(4095.0 / 4096.0);
        let h = shannon_entropy(&x, 64);
        for (a, b) in [(2.0, 1.0), (0.5, -3.0), (-1.0, 0.0), (-4.0, 8.0)] {
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            assert_eq!(shannon_entropy(&y, 64), h, "a={a}, b={b}");
        }
    }

    #[test]
    fn entropy_of_empty_is_nan() {
        assert!(shannon_entropy(&[], 64).is_nan());
    }

    #[test]
    fn higuchi_of_line_is_one() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let fd = higuchi_fd(&x, DEFAULT_HIGUCHI_KMAX);
        assert!((fd - 1.0).abs() <= 0.05, "FD = {fd}");
    }

    #[test]
    fn higuchi_of_gaussian_noise_is_two() {
        let fd = higuchi_fd(&gaussian_noise(10_000, 17), DEFAULT_HIGUCHI_KMAX);
        assert!((fd - 2.0).abs() <= 0.1, "FD = {fd}");
    }

    #[test]
    fn higuchi_of_constant_is_exactly_one() {
        assert_eq!(higuchi_fd(&[3.0; 500], DEFAULT_HIGUCHI_KMAX), 1.0);
    }

    #[test]
    fn higuchi_too_short_is_nan() {
        assert!(higuchi_fd(&[1.0; 50], 10).is_nan());
    }

    #[test]
    fn higuchi_invariant_under_positive_scaling() {
        let x = gaussian_noise(2000, 5);
        let fd = higuchi_fd(&x, 10);
        for g in [0.01, 3.0, 1e6] {
            let y: Vec<f64> = x.iter().map(|v| g * v).collect();
            assert!((higuchi_fd(&y, 10) - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn pe_of_ramp_is_zero() {
        let x: Vec<f64> = (0..500).map(|i| i as f64 * 0.1).collect();
        assert_eq!(permutation_entropy(&x, 3, 1), 0.0);
    }

    #[test]
    fn pe_uniform_patterns_is_one() {
        // search for a short sequence whose 6 overlapping windows realize all
        // 6 ordinal patterns exactly once
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut values: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let found = (0..100_000).find_map(|_| {
            values.shuffle(&mut rng);
            let mut seen = [false; 6];
            for w in values.windows(3) {
                seen[ordinal_pattern(w)] = true;
            }
            seen.iter().all(|&s| s).then(|| values.clone())
        });
        let seq = found.expect("no uniform-pattern sequence found");
        let pe = permutation_entropy(&seq, 3, 1);
        assert!((pe - 1.0).abs() < 1e-12, "pe = {pe}");
    }

    #[test]
    fn pe_of_seeded_noise_is_near_one() {
        let pe = permutation_entropy(&uniform_noise(10_000, 11), 3, 1);
        assert!(pe >= 0.998, "pe = {pe}");
    }

    #[test]
    fn pe_too_short_is_nan() {
        assert!(permutation_entropy(&[1.0, 2.0, 3.0], 3, 1).is_nan());
    }

    #[test]
    fn pe_invariant_under_monotone_transforms() {
        let x = uniform_noise(2000, 23);
        let pe = permutation_entropy(&x, 3, 1);
        let cubed: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let exped: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert_eq!(permutation_entropy(&cubed, 3, 1), pe);
        assert_eq!(permutation_entropy(&exped, 3, 1), pe);
    }

    #[test]
    fn pe_tie_handling_is_deterministic() {
        // quantized signal with many ties
        let x: Vec<f64> = uniform_noise(1000, 7)
            .iter()
            .map(|v| (v * 4.0).floor())
            .collect();
        let a = permutation_entropy(&x, 3, 1);
        let b = permutation_entropy(&x, 3, 1);
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn mspe_scale_one_equals_raw_pe() {
        let x = uniform_noise(3000, 29);
        let ms = multiscale_pe(&x, 3, 1, 5);
        assert_eq!(ms.len(), 5);
        assert_eq!(ms[0], permutation_entropy(&x, 3, 1));
    }

    #[test]
    fn mspe_of_ramp_is_all_zero() {
        let x: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let ms = multiscale_pe(&x, 3, 1, 5);
        assert!(ms.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn mspe_of_noise_stays_high_and_flat() {
        let ms = multiscale_pe(&uniform_noise(50_000, 31), 3, 1, 5);
        assert_eq!(ms.len(), 5);
        assert!(ms[4] <= ms[0] + 0.01);
        assert!(ms.iter().all(|&h| h >= 0.95), "{ms:?}");
    }

    #[test]
    fn mspe_truncates_when_too_short() {
        // 40 samples: scale 5 leaves 8 points (> 3), scale > 13 would not;
        // with n_scales=20 the tail is dropped
        let x = uniform_noise(40, 2);
        let ms = multiscale_pe(&x, 3, 1, 20);
        assert!(ms.len() < 20);
        assert!(!ms.is_empty());
    }
}
