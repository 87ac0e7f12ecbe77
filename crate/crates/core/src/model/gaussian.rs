//! Exact evidence propagation in linear-Gaussian networks.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{BayesNet, Local, ModelError, NetKind};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

/// Mean vector and covariance matrix of the joint normal implied by the
/// network, built recursively along a topological order.
pub fn implied_joint(net: &BayesNet) -> Result<(DVector<f64>, DMatrix<f64>), ModelError> {
    if net.kind() != NetKind::Gaussian {
        return Err(ModelError::NotGaussian);
    }
    let n = net.n_nodes();
    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);
    let order = net.dag().topological_order();
    for (pos, &i) in order.iter().enumerate() {
        let Local::Gaussian(g) = &net.locals()[i] else { unreachable!() };
        mean[i] = g.intercept + g.parents.iter().zip(&g.betas).map(|(&p, b)| b * mean[p]).sum::<f64>();
        // cov(i, j) for every j placed before i
        for &j in &order[..pos] {
            let c: f64 = g.parents.iter().zip(&g.betas).map(|(&p, b)| b * cov[(p, j)]).sum();
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
        let mut v = g.sd * g.sd;
        for (a, &p) in g.parents.iter().enumerate() {
            for (b, &q) in g.parents.iter().enumerate() {
                v += g.betas[a] * g.betas[b] * cov[(p, q)];
            }
        }
        cov[(i, i)] = v;
    }
    Ok((mean, cov))
}

/// Posterior mean and variance of every node given `evidence` (node index to
/// observed value). Evidence nodes report their value with zero variance.
pub fn gaussian_condition(net: &BayesNet, evidence: &BTreeMap<usize, f64>) -> Result<Vec<Posterior>, ModelError> {
    let (mean, cov) = implied_joint(net)?;
    let n = net.n_nodes();
    if let Some(&bad) = evidence.keys().find(|&&k| k >= n) {
        return Err(ModelError::Shape(format!("evidence node index {bad} out of range")));
    }
    let obs: Vec<usize> = evidence.keys().copied().collect();
    let free: Vec<usize> = (0..n).filter(|i| !evidence.contains_key(i)).collect();
    let mut out: Vec<Posterior> = (0..n)
        .map(|i| Posterior { mean: mean[i], variance: cov[(i, i)] })
        .collect();
    for (&k, &v) in evidence {
        out[k] = Posterior { mean: v, variance: 0.0 };
    }
    if obs.is_empty() {
        return Ok(out);
    }
    let s_bb = stats::submatrix(&cov, &obs, &obs);
    let chol = stats::checked_cholesky(&s_bb).ok_or(ModelError::SingularCovariance)?;
    let resid = DVector::from_iterator(obs.len(), obs.iter().map(|&k| evidence[&k] - mean[k]));
    let s_ab = stats::submatrix(&cov, &free, &obs);
    let shift = &s_ab * chol.solve(&resid);
    let reduce = &s_ab * chol.solve(&s_ab.transpose());
    for (a, &i) in free.iter().enumerate() {
        out[i] = Posterior {
            mean: mean[i] + shift[a],
            variance: cov[(i, i)] - reduce[(a, a)],
        };
    }
    Ok(out)
}
