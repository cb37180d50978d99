//! Rank correlation and chance-corrected agreement.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::corpus::AnalyticsError;

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_pairs(x: &[f64], y: &[f64]) -> Result<(), AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(AnalyticsError::InvalidInput(format!(
            "need at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalyticsError::InvalidInput("non-finite value".into()));
    }
    Ok(())
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    check_pairs(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| AnalyticsError::Undefined("zero rank variance".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanTest {
    pub rho: f64,
    /// Two-sided, from `t = rho * sqrt((n - 2) / (1 - rho^2))` on n - 2
    /// degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn spearman_test(x: &[f64], y: &[f64]) -> Result<SpearmanTest, AnalyticsError> {
    let rho = spearman(x, y)?;
    let n = x.len();
    Ok(SpearmanTest {
        rho,
        p_value: spearman_p_value(rho, n),
        n,
    })
}

pub fn spearman_p_value(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Linear,
    #[default]
    Quadratic,
}

/// Number of ordinal categories accepted by [`weighted_kappa`].
pub const KAPPA_CATEGORIES: usize = 5;

/// Weighted Cohen's kappa for two raters on a 1-5 scale:
/// `1 - sum(w * observed) / sum(w * expected)`.
pub fn weighted_kappa(a: &[u8], b: &[u8], weighting: Weighting) -> Result<f64, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(AnalyticsError::InvalidInput(format!(
            "need at least 2 ratings, got {}",
            a.len()
        )));
    }
    if let Some(&r) = a
        .iter()
        .chain(b)
        .find(|&&r| !(1..=KAPPA_CATEGORIES as u8).contains(&r))
    {
        return Err(AnalyticsError::InvalidInput(format!(
            "rating {r} outside 1..5"
        )));
    }
    const K: usize = KAPPA_CATEGORIES;
    let n = a.len() as f64;
    let mut observed = [[0.0; K]; K];
    let mut row = [0.0; K];
    let mut col = [0.0; K];
    for (&x, &y) in a.iter().zip(b) {
        let (i, j) = (x as usize - 1, y as usize - 1);
        observed[i][j] += 1.0 / n;
        row[i] += 1.0 / n;
        col[j] += 1.0 / n;
    }
    let (mut wo, mut we) = (0.0, 0.0);
    for i in 0..K {
        for j in 0..K {
            let d = i.abs_diff(j) as f64 / (K - 1) as f64;
            let w = match weighting {
                Weighting::Linear => d,
                Weighting::Quadratic => d * d,
            };
            wo += w * observed[i][j];
            we += w * row[i] * col[j];
        }
    }
    if we == 0.0 {
        return Err(AnalyticsError::Undefined(
            "expected disagreement is zero".into(),
        ));
    }
    Ok(1.0 - wo / we)
}
