//! Classical conditional independence tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use super::{CriteriaError, Prepared, Reference, TestResult};
use crate::model::Dataset;
use crate::stats;

/// Counts `n_ijk` stratified by the conditioning configuration `k`; each
/// stratum is an `r × c` row-major block. Only observed strata are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Table3 {
    pub r: usize,
    pub c: usize,
    pub strata: Vec<Vec<usize>>,
    /// Number of conditioning configurations `L` implied by the declared levels.
    pub declared_strata: f64,
}

impl Table3 {
    /// Single-stratum table from rows of counts.
    pub fn from_rows(rows: &[Vec<usize>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Table3 {
            r,
            c,
            strata: vec![rows.iter().flatten().copied().collect()],
            declared_strata: 1.0,
        }
    }

    pub fn dof(&self) -> f64 {
        (self.r.saturating_sub(1) * self.c.saturating_sub(1)) as f64 * self.declared_strata
    }

    fn margins(&self, s: &[usize]) -> (Vec<usize>, Vec<usize>, usize) {
        let mut rows = vec![0; self.r];
        let mut cols = vec![0; self.c];
        for i in 0..self.r {
            for j in 0..self.c {
                let v = s[i * self.c + j];
                rows[i] += v;
                cols[j] += v;
            }
        }
        let total = rows.iter().sum();
        (rows, cols, total)
    }
}

/// `2 Σ n_ijk log(n_ijk n_++k / (n_i+k n_+jk))`; empty cells contribute 0.
pub fn g2_statistic(t: &Table3) -> f64 {
    let mut g = 0.0;
    for s in &t.strata {
        let (rows, cols, tot) = t.margins(s);
        for i in 0..t.r {
            for j in 0..t.c {
                let n = s[i * t.c + j];
                if n > 0 {
                    g += n as f64 * ((n as f64 * tot as f64) / (rows[i] as f64 * cols[j] as f64)).ln();
                }
            }
        }
    }
    2.0 * g
}

/// Pearson `Σ (n_ijk - m_ijk)² / m_ijk`; cells with `m_ijk = 0` are skipped.
pub fn x2_statistic(t: &Table3) -> f64 {
    let mut x = 0.0;
    for s in &t.strata {
        let (rows, cols, tot) = t.margins(s);
        if tot == 0 {
            continue;
        }
        for i in 0..t.r {
            for j in 0..t.c {
                let m = rows[i] as f64 * cols[j] as f64 / tot as f64;
                if m > 0.0 {
                    let d = s[i * t.c + j] as f64 - m;
                    x += d * d / m;
                }
            }
        }
    }
    x
}

/// `-n log(1 - ρ²)`.
pub fn gaussian_g2_statistic(rho: f64, n: usize) -> f64 {
    -(n as f64) * (1.0 - rho * rho).ln()
}

/// `ρ √((n - |Z| - 2) / (1 - ρ²))`.
pub fn t_statistic(rho: f64, n: usize, z_len: usize) -> f64 {
    rho * ((n as f64 - z_len as f64 - 2.0) / (1.0 - rho * rho)).sqrt()
}

/// `log((1 + ρ) / (1 - ρ)) √(n - |Z| - 3) / 2`.
pub fn fisher_z_statistic(rho: f64, n: usize, z_len: usize) -> f64 {
    ((1.0 + rho) / (1.0 - rho)).ln() * (n as f64 - z_len as f64 - 3.0).sqrt() / 2.0
}

pub(crate) fn chi2_quantile(dof: f64, alpha: f64) -> f64 {
    if dof <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(dof).expect("positive dof").inverse_cdf(1.0 - alpha)
}

pub(crate) fn stratified_table(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize]) -> Result<Table3, CriteriaError> {
    let cols = prep.discrete_columns(d, &[x, y])?;
    let (r, c) = (prep.cards[x], prep.cards[y]);
    let cells = r * c;
    let (keys, declared) = prep.config_keys(d, z)?;
    let (cx, cy) = (cols[0], cols[1]);
    let mut strata: std::collections::BTreeMap<u128, Vec<usize>> = std::collections::BTreeMap::new();
    for (t, key) in keys.iter().enumerate() {
        let block = strata.entry(*key).or_insert_with(|| vec![0; cells]);
        block[cx[t] as usize * c + cy[t] as usize] += 1;
    }
    Ok(Table3 {
        r,
        c,
        strata: strata.into_values().collect(),
        declared_strata: declared,
    })
}

fn chi2_result(stat: f64, dof: f64, alpha: f64) -> TestResult {
    let threshold = chi2_quantile(dof, alpha);
    TestResult {
        statistic: stat,
        threshold,
        independent: stat <= threshold,
        reference: Reference::ChiSquared { dof },
    }
}

pub(crate) fn g2_discrete_with(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    let t = stratified_table(d, prep, x, y, z)?;
    Ok(chi2_result(g2_statistic(&t), t.dof(), alpha))
}

pub(crate) fn x2_discrete_with(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    let t = stratified_table(d, prep, x, y, z)?;
    Ok(chi2_result(x2_statistic(&t), t.dof(), alpha))
}

fn rho(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize], min_extra: usize) -> Result<f64, CriteriaError> {
    let cov = prep.covariance(d)?;
    if d.n_rows() <= z.len() + min_extra {
        return Err(CriteriaError::TooFewRows { n: d.n_rows(), needed: z.len() + min_extra + 1 });
    }
    if let Some(r) = stats::partial_correlation(cov, x, y, z) {
        return Ok(r);
    }
    // x and y individually well-conditioned given z but jointly collinear:
    // perfect partial correlation, reported as an infinite statistic.
    let vx = stats::conditional_variance(cov, x, z).map(|v| v.0);
    let vy = stats::conditional_variance(cov, y, z).map(|v| v.0);
    let scale = cov[(x, x)].max(cov[(y, y)]);
    match (vx, vy) {
        (Some(a), Some(b)) if a > 1e-12 * scale && b > 1e-12 * scale => Ok(1.0),
        _ => Err(CriteriaError::Singular),
    }
}

pub(crate) fn g2_gaussian_with(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    let r = rho(d, prep, x, y, z, 2)?;
    Ok(chi2_result(gaussian_g2_statistic(r, d.n_rows()), 1.0, alpha))
}

pub(crate) fn t_partial_with(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    let r = rho(d, prep, x, y, z, 2)?;
    let dof = (d.n_rows() - z.len() - 2) as f64;
    let stat = t_statistic(r, d.n_rows(), z.len());
    let threshold = StudentsT::new(0.0, 1.0, dof).expect("positive dof").inverse_cdf(1.0 - alpha / 2.0);
    Ok(TestResult {
        statistic: stat,
        threshold,
        independent: stat.abs() <= threshold,
        reference: Reference::StudentT { dof },
    })
}

pub(crate) fn z_fisher_with(d: &Dataset, prep: &Prepared, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    let r = rho(d, prep, x, y, z, 3)?;
    let stat = fisher_z_statistic(r, d.n_rows(), z.len());
    let threshold = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    Ok(TestResult {
        statistic: stat,
        threshold,
        independent: stat.abs() <= threshold,
        reference: Reference::StandardNormal,
    })
}
