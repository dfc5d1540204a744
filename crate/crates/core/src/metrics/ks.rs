use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
}

/// Two-sided two-sample Kolmogorov–Smirnov test.
///
/// D is the largest gap between the empirical CDFs. The p-value uses the
/// asymptotic Kolmogorov distribution at λ = (√nₑ + 0.12 + 0.11/√nₑ)·D with
/// nₑ = nm/(n+m), clamped to (0, 1].
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Metric("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Metric("KS test samples contain NaN".into()));
    }
    let d = ks_statistic(a, b);
    let (n, m) = (a.len(), b.len());
    let ne = (n * m) as f64 / (n + m) as f64;
    let s = ne.sqrt();
    let lambda = (s + 0.12 + 0.11 / s) * d;
    let p = kolmogorov_q(lambda).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(KsResult { statistic: d, p_value: p, n, m })
}

/// sup_x |F_a(x) − F_b(x)|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²), the Kolmogorov survival function.
/// For small λ the equivalent theta-function form 1 − (√(2π)/λ) Σ exp(−(2k−1)²π²/(8λ²))
/// is used because the alternating series converges slowly there.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut k_sum = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            k_sum += (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
        }
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * k_sum;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    2.0 * sum
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn identical_samples() {
        let r = ks_two_sample(&[0.3, 0.1, 0.7], &[0.7, 0.3, 0.1]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn disjoint_triples() {
        let r = ks_two_sample(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        // λ = (√1.5 + 0.12 + 0.11/√1.5); Q = 2(e^{−2λ²} − e^{−8λ²} + …)
        let s = 1.5f64.sqrt();
        let lam = s + 0.12 + 0.11 / s;
        let q = 2.0 * ((-2.0 * lam * lam).exp() - (-8.0 * lam * lam).exp() + (-18.0 * lam * lam).exp());
        assert!((r.p_value - q).abs() < 1e-12);
        assert!((r.p_value - 0.0326).abs() < 5e-5, "{}", r.p_value);
    }

    #[test]
    fn both_series_forms_agree_where_they_overlap() {
        for lam in [0.6, 0.8, 1.0, 1.2] {
            let theta = {
                let pi2 = std::f64::consts::PI.powi(2);
                let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * pi2 / (8.0 * lam * lam)).exp()).sum();
                1.0 - (2.0 * std::f64::consts::PI).sqrt() / lam * s
            };
            let alt: f64 = 2.0 * (1..=100).map(|k| (if k % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * (k * k) as f64 * lam * lam).exp()).sum::<f64>();
            assert!((theta - alt).abs() < 1e-12, "λ={lam}");
            assert!((kolmogorov_q(lam) - alt).abs() < 1e-12);
        }
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(0.05) <= 1.0 && kolmogorov_q(0.05) > 0.999_999);
        assert!(kolmogorov_q(40.0) >= 0.0);
    }

    #[test]
    fn errors() {
        assert!(ks_two_sample(&[], &[1.0]).is_err());
        assert!(ks_two_sample(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn p_value_floor_is_positive() {
        let a: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..2000).map(|i| 1e6 + i as f64).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!(r.p_value > 0.0 && r.p_value < 1e-300);
    }

    fn brute_force_d(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn statistic_matches_brute_force(
            a in prop::collection::vec(-3i32..3, 1..25),
            b in prop::collection::vec(-3i32..3, 1..25),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            prop_assert_eq!(ks_statistic(&a, &b), brute_force_d(&a, &b));
        }

        #[test]
        fn invariant_under_monotone_transform(
            a in prop::collection::vec(-5.0f64..5.0, 1..20),
            b in prop::collection::vec(-5.0f64..5.0, 1..20),
        ) {
            let r1 = ks_two_sample(&a, &b).unwrap();
            let t = |v: &Vec<f64>| v.iter().map(|x| x.exp() * 3.0 + 1.0).collect::<Vec<_>>();
            let r2 = ks_two_sample(&t(&a), &t(&b)).unwrap();
            prop_assert_eq!(r1.statistic, r2.statistic);
            prop_assert_eq!(r1.p_value, r2.p_value);
            prop_assert!(r1.p_value > 0.0 && r1.p_value <= 1.0);
        }
    }
}
