//! Minimal statistics kit: chi-square and normal tail probabilities plus
//! Welch's t, enough to run the sampler-vs-oracle comparisons without an
//! external dependency.

/// ln Γ(x) via the Lanczos approximation (g = 7, n = 9), |err| < 1e-10
/// for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x), series expansion.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = a;
    for _ in 0..500 {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x), continued fraction
/// (Lentz's method).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom: P(X > x).
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    assert!(dof >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Standard normal survival function P(Z > z). Uses erfc via the upper
/// incomplete gamma: erfc(t) = Q(1/2, t²) for t ≥ 0.
pub fn normal_sf(z: f64) -> f64 {
    let half_erfc = |t: f64| 0.5 * gamma_q(0.5, t * t);
    if z >= 0.0 {
        half_erfc(z / std::f64::consts::SQRT_2)
    } else {
        1.0 - half_erfc(-z / std::f64::consts::SQRT_2)
    }
}

/// Summary statistics of one sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn summarize(values: &[f64]) -> SampleSummary {
    let n = values.len();
    assert!(n >= 2, "need at least two observations");
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    SampleSummary { n, mean, variance }
}

/// One-sided Welch test that `a` has smaller mean than `b`.
/// Returns `(t, p)` where p = P(T > t) under the null, using the normal
/// approximation (fine at the sample sizes used here).
pub fn welch_one_sided(a: &SampleSummary, b: &SampleSummary) -> (f64, f64) {
    let se = (a.variance / a.n as f64 + b.variance / b.n as f64).sqrt();
    let t = (b.mean - a.mean) / se;
    (t, normal_sf(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        for n in 1..10u64 {
            let fact: u64 = (1..n).product();
            assert!((ln_gamma(n as f64) - (fact as f64).ln()).abs() < 1e-9, "n={n}");
        }
        // Γ(1/2) = sqrt(pi)
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }

    #[test]
    fn chi_square_dof2_is_exponential() {
        // With 2 degrees of freedom the survival function is exp(-x/2).
        for &x in &[0.1, 1.0, 3.7, 10.0, 25.0] {
            let expected = (-x / 2.0f64).exp();
            assert!((chi_square_sf(x, 2) - expected).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn chi_square_textbook_quantiles() {
        assert!((chi_square_sf(3.841, 1) - 0.05).abs() < 5e-4);
        assert!((chi_square_sf(10.828, 1) - 0.001).abs() < 5e-5);
        assert!((chi_square_sf(16.919, 9) - 0.05).abs() < 5e-4);
    }

    #[test]
    fn normal_textbook_quantiles() {
        assert!((normal_sf(1.6449) - 0.05).abs() < 1e-4);
        assert!((normal_sf(2.3263) - 0.01).abs() < 1e-4);
        assert!((normal_sf(0.0) - 0.5).abs() < 1e-12);
        assert!((normal_sf(-1.6449) - 0.95).abs() < 1e-4);
    }

    #[test]
    fn welch_detects_separated_means() {
        let a = summarize(&[1.0, 1.1, 0.9, 1.05, 0.95, 1.0, 1.02, 0.98]);
        let b = summarize(&[2.0, 2.1, 1.9, 2.05, 1.95, 2.0, 2.02, 1.98]);
        let (t, p) = welch_one_sided(&a, &b);
        assert!(t > 10.0);
        assert!(p < 1e-6);
    }
}
