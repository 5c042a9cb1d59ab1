//! Small hypothesis tests with explicit statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

use super::AuditError;

/// Above this many events `two_rate_test` switches to the normal approximation.
pub const EXACT_BINOMIAL_MAX: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub chi2: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Two-sided normal tail `P(|Z| ≥ |z|)`.
pub fn normal_two_sided(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).clamp(0.0, 1.0)
}

pub fn chi2_sf(chi2: f64, df: u32) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).expect("positive df").sf(chi2.max(0.0)).clamp(0.0, 1.0)
}

/// Conditional test of equal rates given `n1 + n2` events.
///
/// Under the null `n1 ~ Binomial(n1 + n2, ½)`. The statistic is
/// `z = (n1 − n2)/√(n1 + n2)`; the p-value is the exact two-sided binomial
/// tail up to [`EXACT_BINOMIAL_MAX`] events and the continuity-corrected
/// normal tail above.
pub fn two_rate_test(n1: u64, n2: u64) -> Result<ZTest, AuditError> {
    let n = n1 + n2;
    if n == 0 {
        return Err(AuditError::NoEvents);
    }
    let z = (n1 as f64 - n2 as f64) / (n as f64).sqrt();
    let p_value = if n <= EXACT_BINOMIAL_MAX {
        exact_binomial_two_sided(n1, n)
    } else {
        rate_normal_p(n1, n)
    };
    Ok(ZTest { z, p_value })
}

/// Two-sided exact binomial p-value for `k` of `n` at success rate ½.
pub fn exact_binomial_two_sided(k: u64, n: u64) -> f64 {
    let hi = k.max(n - k);
    if 2 * hi == n {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("valid binomial");
    // P(X ≥ hi) = sf(hi − 1)
    (2.0 * b.sf(hi - 1)).clamp(0.0, 1.0)
}

/// Continuity-corrected normal p-value for the rate comparison.
pub fn rate_normal_p(k: u64, n: u64) -> f64 {
    let diff = (2.0 * k as f64 - n as f64).abs();
    normal_two_sided((diff - 1.0).max(0.0) / (n as f64).sqrt())
}

/// Pooled two-proportion z test.
pub fn two_proportion_test(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<ZTest, AuditError> {
    if n1 == 0 || n2 == 0 {
        return Err(AuditError::EmptyArm);
    }
    if k1 > n1 || k2 > n2 {
        return Err(AuditError::CountExceedsTotal);
    }
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let var = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    let z = if var > 0.0 { (p1 - p2) / var.sqrt() } else { 0.0 };
    Ok(ZTest { z, p_value: normal_two_sided(z) })
}

/// Pearson χ² on an `r × c` table, skipping all-zero rows and columns.
pub fn chi_square_contingency(table: &[Vec<u64>]) -> Result<ChiSquareTest, AuditError> {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().any(|&x| x > 0)).collect();
    let ncols = table.first().map_or(0, Vec::len);
    let cols: Vec<usize> = (0..ncols).filter(|&j| rows.iter().any(|r| r[j] > 0)).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return Err(AuditError::Degenerate("fewer than two non-empty rows or columns".into()));
    }
    let row_sum: Vec<f64> = rows.iter().map(|r| cols.iter().map(|&j| r[j] as f64).sum()).collect();
    let col_sum: Vec<f64> = cols.iter().map(|&j| rows.iter().map(|r| r[j] as f64).sum()).collect();
    let total: f64 = row_sum.iter().sum();
    let mut chi2 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            let e = row_sum[i] * col_sum[jj] / total;
            chi2 += (r[j] as f64 - e).powi(2) / e;
        }
    }
    let df = ((rows.len() - 1) * (cols.len() - 1)) as u32;
    Ok(ChiSquareTest { chi2, df, p_value: chi2_sf(chi2, df) })
}

/// χ² goodness of fit of counts against equal rates.
pub fn chi_square_equal_rates(counts: &[u64]) -> Result<ChiSquareTest, AuditError> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return Err(AuditError::Degenerate("need at least two cells with events".into()));
    }
    let e = total as f64 / counts.len() as f64;
    let chi2 = counts.iter().map(|&k| (k as f64 - e).powi(2) / e).sum();
    let df = counts.len() as u32 - 1;
    Ok(ChiSquareTest { chi2, df, p_value: chi2_sf(chi2, df) })
}

/// Inverse-variance weighted homogeneity of estimates.
pub fn chi_square_weighted(values: &[(f64, f64)]) -> Result<ChiSquareTest, AuditError> {
    if values.len() < 2 {
        return Err(AuditError::Degenerate("need at least two estimates".into()));
    }
    if values.iter().any(|&(_, se)| se <= 0.0) {
        return Err(AuditError::Degenerate("zero standard error".into()));
    }
    let w: Vec<f64> = values.iter().map(|&(_, se)| 1.0 / (se * se)).collect();
    let mean = values.iter().zip(&w).map(|(&(v, _), w)| v * w).sum::<f64>() / w.iter().sum::<f64>();
    let chi2 = values.iter().zip(&w).map(|(&(v, _), w)| w * (v - mean).powi(2)).sum();
    let df = values.len() as u32 - 1;
    Ok(ChiSquareTest { chi2, df, p_value: chi2_sf(chi2, df) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_test_reference_values() {
        let t = two_rate_test(79, 51).unwrap();
        assert!((t.z - 2.455_763).abs() < 1e-5);
        assert!((t.p_value - 0.017_542).abs() < 1e-5);
        let t = two_rate_test(218, 159).unwrap();
        assert!((t.z - 3.038_650).abs() < 1e-5);
        let t = two_rate_test(50, 50).unwrap();
        assert_eq!((t.z, t.p_value), (0.0, 1.0));
        assert!(matches!(two_rate_test(0, 0), Err(AuditError::NoEvents)));
    }

    #[test]
    fn rate_test_antisymmetric() {
        for (a, b) in [(3, 9), (79, 51), (700, 650), (0, 4)] {
            let x = two_rate_test(a, b).unwrap();
            let y = two_rate_test(b, a).unwrap();
            assert_eq!(x.z, -y.z);
            assert_eq!(x.p_value, y.p_value);
        }
    }

    #[test]
    fn branches_agree_at_switchover() {
        let n = EXACT_BINOMIAL_MAX;
        let worst = (0..=n)
            .map(|k| (exact_binomial_two_sided(k, n) - rate_normal_p(k, n)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.005, "{worst}");
    }

    #[test]
    fn proportion_test() {
        assert_eq!(two_proportion_test(30, 100, 30, 100).unwrap().z, 0.0);
        assert!(two_proportion_test(1, 0, 1, 2).is_err());
        assert!(two_proportion_test(3, 2, 1, 2).is_err());
        // pooled p = 0.5, se = √(0.5·0.5·0.02) = 0.070711
        let t = two_proportion_test(60, 100, 40, 100).unwrap();
        assert!((t.z - 2.828_427).abs() < 1e-5);
    }

    #[test]
    fn chi_square_examples() {
        let t = chi_square_contingency(&[vec![10, 20], vec![10, 20]]).unwrap();
        assert!(t.chi2.abs() < 1e-12 && t.df == 1 && (t.p_value - 1.0).abs() < 1e-12);
        // 2×2 with 30/10 vs 10/30: χ² = 20
        let t = chi_square_contingency(&[vec![30, 10], vec![10, 30]]).unwrap();
        assert!((t.chi2 - 20.0).abs() < 1e-9);
        assert!((chi_square_equal_rates(&[10, 10, 10]).unwrap().chi2).abs() < 1e-12);
        let t = chi_square_weighted(&[(0.5, 0.1), (0.5, 0.2)]).unwrap();
        assert!(t.chi2.abs() < 1e-12);
    }
}
