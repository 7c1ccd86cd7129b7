//! Small statistics helpers for the benchmarks.

use alloc::vec::Vec;
use core::cmp::Ordering;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / (xs.len() - 1) as f64)
}

/// 1-based ranks with ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    let mut r = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / libm::sqrt(sxx * syy)
}

/// Pearson correlation of the tie-averaged ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&ranks(xs), &ranks(ys))
}

/// Normal-approximation 95% interval for a success proportion, clamped to [0, 1].
pub fn binomial_ci95(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let p = successes as f64 / n as f64;
    let half = 1.96 * libm::sqrt(p * (1.0 - p) / n as f64);
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Pooled two-proportion z statistic for p1 − p2.
pub fn two_proportion_z(s1: usize, n1: usize, s2: usize, n2: usize) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let (p1, p2) = (s1 as f64 / n1f, s2 as f64 / n2f);
    let p = (s1 + s2) as f64 / (n1f + n2f);
    let se = libm::sqrt(p * (1.0 - p) * (1.0 / n1f + 1.0 / n2f));
    if se == 0.0 {
        return if p1 > p2 {
            f64::INFINITY
        } else if p1 < p2 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
    }
    (p1 - p2) / se
}

/// Welch t statistic for mean(a) − mean(b).
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let (va, vb) = (sample_std(a), sample_std(b));
    let se = libm::sqrt(va * va / a.len() as f64 + vb * vb / b.len() as f64);
    let d = mean(a) - mean(b);
    if se == 0.0 {
        return if d > 0.0 {
            f64::INFINITY
        } else if d < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
    }
    d / se
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_of_monotone_map_is_one() {
        let xs = [1.0, 5.0, 2.0, 9.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        assert!((spearman(&xs, &ys) - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((spearman(&xs, &rev) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_share_rank() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), alloc::vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn std_matches_hand_value() {
        // 2, 4, 4, 4, 5, 5, 7, 9: sample variance 32 / 7.
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((sample_std(&xs) - libm::sqrt(32.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn z_of_equal_rates_is_zero() {
        assert_eq!(two_proportion_z(10, 100, 10, 100), 0.0);
        assert!(two_proportion_z(60, 100, 40, 100) > 1.96);
    }
}
