//! Shared signal-processing primitives used by the feature extractors:
//! windows, FFT power spectra, autocorrelation, Levinson-Durbin, polynomial
//! roots and least-squares slopes.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            x.sin().powi(2)
        })
        .collect()
}

/// In-place first-order pre-emphasis `y[i] = x[i] - alpha * x[i-1]`.
pub fn pre_emphasize(frame: &mut [f64], alpha: f64) {
    for i in (1..frame.len()).rev() {
        frame[i] -= alpha * frame[i - 1];
    }
}

/// Smallest power of two >= `n`.
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// One-sided power spectrum `|X[k]|^2` for `k = 0..=n_fft/2`.
///
/// The input is zero-padded (or truncated) to `n_fft`.
pub fn power_spectrum(x: &[f64], n_fft: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .take(n_fft)
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf[..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Raw (biased) autocorrelation `r[lag] = sum_i x[i] * x[i+lag]` for
/// `lag = 0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mut r = vec![0.0; max_lag + 1];
    for (lag, slot) in r.iter_mut().enumerate() {
        if lag >= n {
            break;
        }
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += x[i] * x[i + lag];
        }
        *slot = acc;
    }
    r
}

/// Levinson-Durbin recursion.
///
/// Solves for LPC coefficients `a[1..=order]` (sign convention:
/// `x[n] ~ sum_k a[k] * x[n-k]`) from autocorrelation `r[0..=order]`.
/// Returns `(a, prediction_error)`, or `None` when the recursion is unstable:
/// non-positive or collapsed prediction error, or a reflection coefficient
/// reaching magnitude 1 (perfectly predictable input such as a noiseless
/// sinusoid). All-zero input is also `None`.
pub fn levinson(r: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    debug_assert!(r.len() > order);
    let mut err = r[0];
    if err <= 0.0 || !err.is_finite() {
        return None;
    }
    // a prediction error collapsing below this is a deterministic input
    // (noiseless sinusoid, digital silence) rather than a speech-like frame
    let floor = r[0] * 1e-8;
    let mut a = vec![0.0; order + 1]; // a[0] unused
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        if k.abs() >= 1.0 || !k.is_finite() {
            return None;
        }
        let mut new_a = a.clone();
        new_a[i] = k;
        for j in 1..i {
            new_a[j] = a[j] - k * a[i - j];
        }
        a = new_a;
        err *= 1.0 - k * k;
        if err <= floor || !err.is_finite() {
            return None;
        }
    }
    Some((a[1..].to_vec(), err))
}

/// Slope of the least-squares line through `(x, y)` pairs.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Roots of the real polynomial `c[0] + c[1] z + ... + c[d] z^d` via the
/// Durand-Kerner iteration.
///
/// Returns `None` when the iteration fails to settle, which the callers treat
/// as "skip this frame".
pub fn poly_roots(coeffs: &[f64]) -> Option<Vec<Complex<f64>>> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Some(Vec::new());
    }
    let lead = coeffs[d];
    if lead == 0.0 || coeffs.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    let eval = |z: Complex<f64>| -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };

    // Standard non-real starting points spread around the unit circle.
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..d).map(|i| seed.powu(i as u32 + 1)).collect();

    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..d {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..d {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm_sqr() == 0.0 {
                return None;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-10 {
            return Some(roots);
        }
    }
    None
}
