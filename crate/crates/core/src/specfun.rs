//! Scalar special functions: Laguerre polynomials, the confluent
//! hypergeometric function `Φ(1; 1/2; z)` and oscillator eigenfunctions.

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use crate::error::{Error, Result};

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Returns `t^n L_n(x)` for `n = 0..=nmax`.
///
/// The product `t·x` is passed instead of `x` so that the sequence stays finite
/// when `t → 0` with `t·x` fixed: the recurrence
/// `(n+1) q_{n+1} = (t(2n+1) − tx) q_n − n t² q_{n−1}` never forms `x` itself.
/// At `t = 0` it yields `(−tx)^n / n!`.
pub fn scaled_laguerre_sequence(nmax: usize, t: f64, tx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax == 0 {
        return out;
    }
    out.push(t - tx);
    for k in 1..nmax {
        let kf = k as f64;
        let next = ((t * (2.0 * kf + 1.0) - tx) * out[k] - kf * t * t * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

const KUMMER_SERIES_LIMIT: f64 = 1.0;
const KUMMER_ASYMPTOTIC_FROM: f64 = 40.0;

/// Confluent hypergeometric function `Φ(1; 1/2; z)`.
///
/// Negative arguments (the regime of the tomographic kernel) are split in
/// three: the Maclaurin series for `|z| ≤ 1`, the Kummer-transformed series
/// `e^z Φ(−1/2; 1/2; −z)` (all terms of one sign) up to `|z| = 40`, and the
/// asymptotic expansion `−Σ_{k≥1} (2k−1)!! / (2|z|)^k` beyond, where its
/// optimally truncated error is below double precision.
pub fn kummer_1_half(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("kummer_1_half argument {z}")));
    }
    if z >= 0.0 {
        return kummer_positive(z);
    }
    Ok(kummer_negative(-z))
}

/// `Φ(1; 1/2; −y)` for `y ≥ 0`. Total; used on the hot path of the kernel.
pub fn kummer_1_half_neg(y: f64) -> f64 {
    kummer_negative(y)
}

fn kummer_positive(z: f64) -> Result<f64> {
    // Terms are all positive, so the plain series is stable; the sum grows
    // like sqrt(pi z) e^z.
    if z > 700.0 {
        return Err(Error::Overflow("kummer_1_half"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= z / (k + 0.5);
        sum += term;
        k += 1.0;
        if term <= sum * 1e-17 {
            break;
        }
    }
    if sum.is_finite() {
        Ok(sum)
    } else {
        Err(Error::Overflow("kummer_1_half"))
    }
}

fn kummer_negative(y: f64) -> f64 {
    if y <= KUMMER_SERIES_LIMIT {
        let mut term: f64 = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        while term.abs() > 1e-18 {
            term *= -y / (k + 0.5);
            sum += term;
            k += 1.0;
        }
        sum
    } else if y <= KUMMER_ASYMPTOTIC_FROM {
        // Φ(−1/2; 1/2; y) = 1 − Σ_{k≥1} y^k / ((2k−1) k!)
        let mut power = 1.0;
        let mut tail = 0.0;
        let mut k = 1.0;
        loop {
            power *= y / k;
            let term = power / (2.0 * k - 1.0);
            tail += term;
            if term < tail * 1e-17 {
                break;
            }
            k += 1.0;
        }
        (-y).exp() * (1.0 - tail)
    } else {
        let inv = 1.0 / (2.0 * y);
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * inv;
            if next > term && k > 1.0 {
                break;
            }
            sum += next;
            term = next;
            if term < sum.abs() * 1e-17 {
                break;
            }
            k += 1.0;
        }
        -sum
    }
}

/// Oscillator eigenfunctions `ψ_0(x) … ψ_nmax(x)` in the convention with vacuum
/// quadrature variance 1/4: `ψ_0(x) = (2/π)^{1/4} e^{−x²}`.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    fill_hermite_functions(nmax, x, &mut out);
    out
}

/// Same as [`hermite_functions`] but reuses `out`.
pub fn fill_hermite_functions(nmax: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    // The recurrence runs on unnormalised values with a separately tracked
    // log scale, so that e^{−x²} underflowing does not zero out high orders.
    const RESCALE: f64 = 1e200;
    let u = std::f64::consts::SQRT_2 * x;
    let mut log_scale = 0.25 * FRAC_2_PI.ln() - x * x;
    let mut scale = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(cur * scale);
    for n in 0..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * u * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
            scale = log_scale.exp();
        }
        out.push(cur * scale);
    }
}

/// Oscillator eigenfunction `ψ_n(x)`, see [`hermite_functions`].
pub fn hermite_function(n: usize, x: f64) -> f64 {
    hermite_functions(n, x)[n]
}

/// `ln k!` for `k = 0..=nmax`.
pub fn ln_factorials(nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..=nmax {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Peak value of the vacuum wavefunction, `(2/π)^{1/4}`.
pub fn vacuum_peak() -> f64 {
    (0.25 * (LN_2 - PI.ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn laguerre_low_orders() {
        assert_eq!(laguerre(0, 7.3), 1.0);
        assert_eq!(laguerre(1, 2.0), -1.0);
        for n in 0..40 {
            assert_eq!(laguerre(n, 0.0), 1.0);
        }
    }

    #[test]
    fn laguerre_matches_explicit_sum() {
        // L_5(x) = Σ_k C(5,k) (−x)^k / k!
        let x: f64 = -3.0;
        let binom = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        let mut fact = 1.0;
        let mut expected = 0.0;
        for (k, c) in binom.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            expected += c * (-x).powi(k as i32) / fact;
        }
        assert_relative_eq!(laguerre(5, x), expected, max_relative = 1e-14);
    }

    #[test]
    fn scaled_sequence_matches_plain_laguerre() {
        let t = 0.3;
        let x = -2.5;
        let seq = scaled_laguerre_sequence(30, t, t * x);
        for (n, q) in seq.iter().enumerate() {
            assert_relative_eq!(*q, t.powi(n as i32) * laguerre(n, x), max_relative = 1e-12);
        }
    }

    #[test]
    fn scaled_sequence_limit_at_zero_t() {
        let seq = scaled_laguerre_sequence(10, 0.0, -0.08);
        let mut expected = 1.0;
        for (n, q) in seq.iter().enumerate() {
            if n > 0 {
                expected *= 0.08 / n as f64;
            }
            assert_relative_eq!(*q, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn kummer_at_origin() {
        assert_eq!(kummer_1_half(0.0).unwrap(), 1.0);
    }

    #[test]
    fn kummer_continuous_across_regimes() {
        for y in [KUMMER_SERIES_LIMIT, KUMMER_ASYMPTOTIC_FROM] {
            let below = kummer_negative(y * (1.0 - 1e-12));
            let above = kummer_negative(y * (1.0 + 1e-12));
            assert_relative_eq!(below, above, max_relative = 1e-10);
        }
    }

    #[test]
    fn kummer_overflow_signalled() {
        assert!(matches!(kummer_1_half(800.0), Err(Error::Overflow(_))));
        assert!(kummer_1_half(f64::NAN).is_err());
    }

    #[test]
    fn kummer_large_negative_tends_to_minus_half_over_y() {
        let y = 1e6;
        assert_relative_eq!(kummer_negative(y), -0.5 / y, max_relative = 1e-5);
    }

    #[test]
    fn hermite_special_values() {
        assert_relative_eq!(hermite_function(0, 0.0), (2.0 / PI).powf(0.25), max_relative = 1e-15);
        assert_relative_eq!(vacuum_peak(), (2.0 / PI).powf(0.25), max_relative = 1e-15);
        assert_eq!(hermite_function(1, 0.0), 0.0);
    }

    #[test]
    fn hermite_high_order_survives_large_x() {
        // e^{-x^2} underflows at x = 28 but ψ_400 is still representable there
        let v = hermite_functions(400, 28.0);
        assert!(v[400].is_finite());
        assert!(v[400].abs() > 0.0);
    }

    #[test]
    fn ln_factorial_values() {
        let lf = ln_factorials(10);
        assert_eq!(lf[0], 0.0);
        assert_relative_eq!(lf[10], 3628800f64.ln(), max_relative = 1e-14);
    }
}
