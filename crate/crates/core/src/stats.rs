//! Goodness-of-fit helpers used by the Monte Carlo checks.

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples`
/// (sorted ascending) and `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Treat runs of ties as one jump.
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        let f_left = cdf_left_limit(&cdf, x);
        d = d.max((j as f64 / n - f).abs());
        d = d.max((i as f64 / n - f_left).abs());
        i = j;
    }
    d
}

fn cdf_left_limit<F: Fn(f64) -> f64>(cdf: &F, x: f64) -> f64 {
    cdf(x - x.abs().max(1.0) * 1e-12)
}

/// Two-sample Kolmogorov–Smirnov distance; both inputs sorted ascending.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
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
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() * 0.5).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// Pearson chi-square statistic of a `k × 2` table of (successes, trials)
/// rows against homogeneity. Returns `(statistic, degrees of freedom)`.
pub fn chi_square_homogeneity(rows: &[(u64, u64)]) -> (f64, usize) {
    let total_success: u64 = rows.iter().map(|r| r.0).sum();
    let total: u64 = rows.iter().map(|r| r.1).sum();
    let p = total_success as f64 / total as f64;
    let mut chi2 = 0.0;
    for &(s, n) in rows {
        let n = n as f64;
        let s = s as f64;
        let (es, ef) = (n * p, n * (1.0 - p));
        if es > 0.0 {
            chi2 += (s - es).powi(2) / es;
        }
        if ef > 0.0 {
            chi2 += (n - s - ef).powi(2) / ef;
        }
    }
    (chi2, rows.len() - 1)
}

/// Upper-tail probability of a chi-square variable.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(dof as f64 / 2.0, x / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_grid_is_one_over_n() {
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) / n as f64).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.0).abs() < 1e-9 || d <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_two_sample_disjoint_is_one() {
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn chi_square_two_dof_tail_is_exponential() {
        for x in [0.5, 2.0, 9.0] {
            assert!((chi_square_sf(x, 2) - (-x / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_rows_give_zero() {
        let (c, dof) = chi_square_homogeneity(&[(50, 100), (100, 200), (25, 50)]);
        assert_eq!(dof, 2);
        assert!(c.abs() < 1e-12);
    }
}
