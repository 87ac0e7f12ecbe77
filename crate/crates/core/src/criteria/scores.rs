//! Decomposable network scores: BIC, BIC_γ, BDeu and BGe.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::{CriteriaError, Prepared};
use crate::model::Dataset;
use crate::stats;

/// Hyperparameters of the BGe score. `None` fields take the smallest valid
/// defaults: `α_w = N + 2`, `t = α_μ(α_w − N − 1)/(α_μ + 1)`, `ν = x̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct BgeHyper {
    pub alpha_mu: f64,
    pub alpha_w: Option<f64>,
    pub t: Option<f64>,
    pub nu: Option<Vec<f64>>,
}

impl Default for BgeHyper {
    fn default() -> Self {
        BgeHyper { alpha_mu: 1.0, alpha_w: None, t: None, nu: None }
    }
}

/// BGe posterior quantities shared by every local evaluation.
#[derive(Debug, Clone)]
pub(crate) struct BgeState {
    pub alpha_mu: f64,
    pub alpha_w: f64,
    pub t: f64,
    pub r: nalgebra::DMatrix<f64>,
}

impl BgeState {
    pub(crate) fn new(d: &Dataset, h: &BgeHyper) -> Result<Self, CriteriaError> {
        let p = d.n_vars();
        let n = d.n_rows() as f64;
        let alpha_w = h.alpha_w.unwrap_or(p as f64 + 2.0);
        if !(h.alpha_mu > 0.0) || !(alpha_w > p as f64 - 1.0) {
            return Err(CriteriaError::Hyper(format!(
                "BGe needs alpha_mu > 0 and alpha_w > N - 1, got {} and {alpha_w}",
                h.alpha_mu
            )));
        }
        let t = h.t.unwrap_or(h.alpha_mu * (alpha_w - p as f64 - 1.0) / (h.alpha_mu + 1.0));
        if !(t > 0.0) {
            return Err(CriteriaError::Hyper(format!("BGe needs t > 0, got {t}")));
        }
        let cols: Vec<&[f64]> = (0..p)
            .map(|i| d.continuous(i).ok_or(CriteriaError::NeedsContinuous))
            .collect::<Result<_, _>>()?;
        let (cov, means) = stats::covariance(&cols);
        let mut r = cov * n;
        for i in 0..p {
            r[(i, i)] += t;
        }
        if let Some(nu) = &h.nu {
            if nu.len() != p {
                return Err(CriteriaError::Hyper(format!("nu has {} entries for {p} variables", nu.len())));
            }
            let w = n * h.alpha_mu / (n + h.alpha_mu);
            for a in 0..p {
                for b in 0..p {
                    r[(a, b)] += w * (means[a] - nu[a]) * (means[b] - nu[b]);
                }
            }
        }
        Ok(BgeState { alpha_mu: h.alpha_mu, alpha_w, t, r })
    }

    /// Log marginal likelihood of the columns `vars` under the normal-Wishart
    /// prior restricted to those columns.
    fn log_marginal(&self, vars: &[usize], n: usize, n_total: usize) -> Result<f64, CriteriaError> {
        let l = vars.len() as f64;
        if vars.is_empty() {
            return Ok(0.0);
        }
        let n = n as f64;
        let shape = self.alpha_w - n_total as f64 + l;
        let log_det_r = stats::log_det(&stats::submatrix(&self.r, vars, vars)).ok_or(CriteriaError::Singular)?;
        let log_det_t = l * self.t.ln();
        Ok(l / 2.0 * (self.alpha_mu / (n + self.alpha_mu)).ln()
            + ln_multigamma(vars.len(), (n + shape) / 2.0)
            - ln_multigamma(vars.len(), shape / 2.0)
            - l * n / 2.0 * PI.ln()
            + shape / 2.0 * log_det_t
            - (n + shape) / 2.0 * log_det_r)
    }
}

/// `log Γ_p(a)`, the multivariate Gamma function.
pub(crate) fn ln_multigamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    pf * (pf - 1.0) / 4.0 * PI.ln() + (0..p).map(|j| ln_gamma(a - j as f64 / 2.0)).sum::<f64>()
}

/// Observed parent configurations of `node`, each with its per-level counts,
/// plus the declared number of configurations `q`.
pub(crate) fn family_counts(d: &Dataset, prep: &Prepared, node: usize, parents: &[usize]) -> Result<(Vec<Vec<usize>>, f64), CriteriaError> {
    let x = prep.discrete_columns(d, &[node])?[0];
    let r = prep.cards[node];
    let (keys, q) = prep.config_keys(d, parents)?;
    if q * r as f64 <= (1u64 << 20) as f64 {
        let mut dense = vec![0usize; q as usize * r];
        for (t, &k) in keys.iter().enumerate() {
            dense[k as usize * r + x[t] as usize] += 1;
        }
        let rows = dense
            .chunks(r.max(1))
            .filter(|c| c.iter().any(|&v| v > 0))
            .map(<[usize]>::to_vec)
            .collect();
        return Ok((rows, q));
    }
    let mut map: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
    for (t, &k) in keys.iter().enumerate() {
        map.entry(k).or_insert_with(|| vec![0; r])[x[t] as usize] += 1;
    }
    Ok((map.into_values().collect(), q))
}

/// Maximised log-likelihood of `node` given `parents` and its free parameter count.
pub(crate) fn local_loglik(d: &Dataset, prep: &Prepared, node: usize, parents: &[usize]) -> Result<(f64, f64), CriteriaError> {
    if d.is_discrete() {
        let (rows, q) = family_counts(d, prep, node, parents)?;
        let mut ll = 0.0;
        for row in &rows {
            let nj: usize = row.iter().sum();
            for &c in row {
                if c > 0 {
                    ll += c as f64 * (c as f64 / nj as f64).ln();
                }
            }
        }
        Ok((ll, (prep.cards[node] as f64 - 1.0) * q))
    } else {
        let cov = prep.covariance(d)?;
        let n = d.n_rows() as f64;
        let (var, _) = stats::conditional_variance(cov, node, parents).ok_or(CriteriaError::Singular)?;
        if !(var > 0.0) {
            return Err(CriteriaError::Degenerate(d.var(node).name.clone()));
        }
        let ll = -n / 2.0 * ((2.0 * PI * var).ln() + 1.0);
        Ok((ll, parents.len() as f64 + 2.0))
    }
}

/// BIC_γ local term; `gamma = 0` is plain BIC.
pub(crate) fn local_bic(d: &Dataset, prep: &Prepared, node: usize, parents: &[usize], gamma: f64) -> Result<f64, CriteriaError> {
    let (ll, k) = local_loglik(d, prep, node, parents)?;
    Ok(ll - k * penalty_per_param(d.n_rows(), d.n_vars(), gamma))
}

/// `(log n)/2 + γ log N`.
pub(crate) fn penalty_per_param(n: usize, n_vars: usize, gamma: f64) -> f64 {
    let extra = if gamma == 0.0 { 0.0 } else { gamma * (n_vars as f64).ln() };
    (n.max(1) as f64).ln() / 2.0 + extra
}

pub(crate) fn local_bdeu(d: &Dataset, prep: &Prepared, node: usize, parents: &[usize], iss: f64) -> Result<f64, CriteriaError> {
    let (rows, q) = family_counts(d, prep, node, parents)?;
    let r = prep.cards[node] as f64;
    let a_j = iss / q;
    let a_jk = iss / (r * q);
    let (lg_aj, lg_ajk) = (ln_gamma(a_j), ln_gamma(a_jk));
    let mut s = 0.0;
    for row in &rows {
        let nj: usize = row.iter().sum();
        s += lg_aj - ln_gamma(a_j + nj as f64);
        for &c in row {
            if c > 0 {
                s += ln_gamma(a_jk + c as f64) - lg_ajk;
            }
        }
    }
    Ok(s)
}

pub(crate) fn local_bge(d: &Dataset, prep: &Prepared, node: usize, parents: &[usize]) -> Result<f64, CriteriaError> {
    let st = prep.bge.as_ref().ok_or(CriteriaError::NeedsContinuous)?;
    let mut family = parents.to_vec();
    family.push(node);
    let (n, p) = (d.n_rows(), d.n_vars());
    Ok(st.log_marginal(&family, n, p)? - st.log_marginal(parents, n, p)?)
}
