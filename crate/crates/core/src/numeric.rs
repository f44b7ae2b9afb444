//! Stable elementary kernels shared by the closed forms and the oracle.

/// Exponents above this are treated as overflowing; energies are then only
/// meaningful in the log domain.
pub(crate) const EXP_LIMIT: f64 = 700.0;

/// `ln(e^x - 1)` for `x >= 0`, finite for arguments far beyond `EXP_LIMIT`.
pub(crate) fn ln_expm1(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x > 1.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `ln(e^a + e^b)`.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi.is_infinite() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `n` evenly spaced samples on `[lo, hi]`, both ends exact.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let last = n - 1;
    (0..n)
        .map(|i| {
            if i == last {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / (last as f64)
            }
        })
        .collect()
}
