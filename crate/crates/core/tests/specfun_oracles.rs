use approx::assert_relative_eq;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use twinbeam::specfun::{hermite_function, hermite_functions, kummer_1_half, laguerre, scaled_laguerre_sequence};

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact partial sums of Σ z^k / (1/2)_k until the term is below 1e-40.
fn kummer_exact(z: &BigRational) -> f64 {
    let eps = rat(1, 1) / BigRational::from_integer(BigInt::from(10).pow(40));
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    let half = rat(1, 2);
    let mut k = 0i64;
    loop {
        sum += &term;
        // term_{k+1} = term_k · z / (k + 1/2)
        term = term * z / (BigRational::from_integer(BigInt::from(k)) + &half);
        k += 1;
        if k > 60 && term.abs() < eps {
            break;
        }
    }
    sum.to_f64().unwrap()
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn laguerre_exact(n: u64, x: &BigRational) -> f64 {
    let mut sum = BigRational::zero();
    let mut fact = BigInt::one();
    let mut pow = BigRational::one();
    for k in 0..=n {
        if k > 0 {
            fact *= BigInt::from(k);
            pow *= x;
        }
        let term = BigRational::from_integer(binomial(n, k)) * &pow / BigRational::from_integer(fact.clone());
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum.to_f64().unwrap()
}

#[test]
fn kummer_matches_exact_series_at_reference_points() {
    for (num, den) in [(1, 1), (-4, 1), (0, 1), (-1, 2), (5, 2), (-30, 1), (-41, 4), (30, 1), (-3, 100)] {
        let z = rat(num, den);
        let exact = kummer_exact(&z);
        let got = kummer_1_half(num as f64 / den as f64).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-12);
    }
}

#[test]
fn kummer_across_regime_switches() {
    // dense scan around the series / Kummer-transform / asymptotic switch points
    for i in (-3000..=300).step_by(7) {
        let z = rat(i, 100);
        let exact = kummer_exact(&z);
        let got = kummer_1_half(i as f64 / 100.0).unwrap();
        assert!(
            ((got - exact) / exact).abs() < 1e-12,
            "z = {}: {got} vs {exact}",
            i as f64 / 100.0
        );
    }
}

#[test]
fn laguerre_matches_explicit_sum() {
    for n in [0u64, 1, 2, 5, 10, 20] {
        for (num, den) in [(0, 1), (1, 2), (-3, 1), (7, 4), (-25, 2)] {
            let x = rat(num, den);
            let exact = laguerre_exact(n, &x);
            let got = laguerre(n as usize, num as f64 / den as f64);
            assert_relative_eq!(got, exact, max_relative = 1e-12, epsilon = 1e-12);
        }
    }
}

#[test]
fn scaled_laguerre_matches_definition() {
    // q_n = t^n L_n(x) with tx = t·x
    let (t, x) = (0.3, -0.08 * 0.7 / 0.3);
    let seq = scaled_laguerre_sequence(30, t, t * x);
    for (n, q) in seq.iter().enumerate() {
        assert_relative_eq!(*q, t.powi(n as i32) * laguerre(n, x), max_relative = 1e-12);
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn hermite_functions_orthonormal() {
    let nmax = 40;
    let half_width = (nmax as f64).sqrt() + 6.0;
    let intervals = 8000;
    let h = 2.0 * half_width / intervals as f64;
    let grid: Vec<Vec<f64>> = (0..=intervals)
        .map(|i| hermite_functions(nmax, -half_width + i as f64 * h))
        .collect();
    let integral = |n: usize, m: usize| {
        let mut sum = 0.0;
        for (i, psi) in grid.iter().enumerate() {
            let w = if i == 0 || i == intervals { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * psi[n] * psi[m];
        }
        sum * h / 3.0
    };
    for n in 0..=nmax {
        assert!((integral(n, n) - 1.0).abs() < 1e-8, "norm of psi_{n}");
    }
    for n in 0..=10 {
        for m in 0..n {
            assert!(integral(n, m).abs() < 1e-8, "<psi_{n}|psi_{m}>");
        }
    }
}

#[test]
fn psi4_reference_value() {
    let x: f64 = 0.7;
    let u = 2f64.sqrt() * x;
    let h4 = 16.0 * u.powi(4) - 48.0 * u * u + 12.0;
    let expected = (2.0 / std::f64::consts::PI).powf(0.25) / (16.0f64 * 24.0).sqrt() * h4 * (-x * x).exp();
    assert_relative_eq!(hermite_function(4, x), expected, max_relative = 1e-13);
    // and its square integrates to one on its own
    let norm = simpson(|y| hermite_function(4, y).powi(2), -8.0, 8.0, 4000);
    assert!((norm - 1.0).abs() < 1e-10);
}

#[test]
fn high_order_hermite_stays_finite() {
    for x in [0.0, 3.0, 10.0, 25.0] {
        let psi = hermite_functions(500, x);
        assert!(psi.iter().all(|v| v.is_finite()));
        assert!(psi.iter().all(|v| v.abs() < 1.0));
    }
}

proptest! {
    #[test]
    fn laguerre_at_zero_is_one(n in 0usize..400) {
        prop_assert_eq!(laguerre(n, 0.0), 1.0);
    }

    #[test]
    fn kummer_positive_and_bounded_for_negative_argument(y in 0.0f64..1e6) {
        // Φ(1;1/2;−y) = 1 − 2√y·D(√y) with Dawson's D, so it lies in [−1, 1]
        let v = kummer_1_half(-y).unwrap();
        prop_assert!(v.is_finite());
        prop_assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn kummer_derivative_identity(z in -50.0f64..20.0) {
        // Kummer's equation z Φ'' + (1/2 − z) Φ' − Φ = 0, by central differences
        let h = 1e-3 * (1.0 + z.abs());
        let f = |t: f64| kummer_1_half(t).unwrap();
        let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
        let d2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
        let residual = z * d2 + (0.5 - z) * d1 - f(z);
        let scale = f(z).abs().max(z.abs() * d2.abs()).max(1.0);
        prop_assert!(residual.abs() / scale < 1e-3, "residual {residual} at z={z}");
    }
}
