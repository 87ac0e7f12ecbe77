//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use bnarena::graph::Dag;
use bnarena::model::{implied_joint, BayesNet, Local, Posterior};
use nalgebra::{DMatrix, DVector};

pub fn networks_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("networks")
}

/// One result line, written past the test harness's output capture.
pub fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[criterion {id:>2}] {verdict} {title}: {detail}");
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

/// Every DAG on `n` labelled nodes.
pub fn all_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    'next: for code in 0..3usize.pow(pairs.len() as u32) {
        let mut g = Dag::new(&names(n)).unwrap();
        let mut c = code;
        for &(a, b) in &pairs {
            let r = match c % 3 {
                0 => Ok(()),
                1 => g.add_arc(a, b),
                _ => g.add_arc(b, a),
            };
            c /= 3;
            if r.is_err() {
                continue 'next;
            }
        }
        out.push(g);
    }
    out
}

/// Joint covariance of a linear-Gaussian network as `(I − B)⁻¹ D (I − B)⁻ᵀ`,
/// and the mean as `(I − B)⁻¹ c`.
pub fn structural_joint(net: &BayesNet) -> (DVector<f64>, DMatrix<f64>) {
    let n = net.n_nodes();
    let mut b = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut d = DMatrix::zeros(n, n);
    for (i, local) in net.locals().iter().enumerate() {
        let Local::Gaussian(g) = local else { panic!("gaussian network expected") };
        for (&p, beta) in g.parents.iter().zip(&g.betas) {
            b[(i, p)] = *beta;
        }
        c[i] = g.intercept;
        d[(i, i)] = g.sd * g.sd;
    }
    let inv = (DMatrix::identity(n, n) - b).try_inverse().unwrap();
    (&inv * c, &inv * d * inv.transpose())
}

/// Conditional normal by the textbook formula, with an explicit inverse of the
/// evidence block.
pub fn brute_force_condition(net: &BayesNet, evidence: &BTreeMap<usize, f64>) -> Vec<Posterior> {
    let (mu, sigma) = structural_joint(net);
    let n = net.n_nodes();
    let obs: Vec<usize> = evidence.keys().copied().collect();
    let mut out = Vec::with_capacity(n);
    if obs.is_empty() {
        return (0..n).map(|i| Posterior { mean: mu[i], variance: sigma[(i, i)] }).collect();
    }
    let soo = DMatrix::from_fn(obs.len(), obs.len(), |a, b| sigma[(obs[a], obs[b])]);
    let soo_inv = soo.try_inverse().unwrap();
    let resid = DVector::from_iterator(obs.len(), obs.iter().map(|&o| evidence[&o] - mu[o]));
    for i in 0..n {
        if let Some(&v) = evidence.get(&i) {
            out.push(Posterior { mean: v, variance: 0.0 });
            continue;
        }
        let sio = DVector::from_iterator(obs.len(), obs.iter().map(|&o| sigma[(i, o)]));
        let w = &soo_inv * &sio;
        out.push(Posterior { mean: mu[i] + w.dot(&resid), variance: sigma[(i, i)] - sio.dot(&w) });
    }
    out
}

/// Sanity check that the recursive joint and the structural one agree.
pub fn joints_agree(net: &BayesNet, tol: f64) -> bool {
    let (m1, s1) = implied_joint(net).unwrap();
    let (m2, s2) = structural_joint(net);
    (m1 - m2).amax() < tol && (s1 - s2).amax() < tol
}
