//! Random parameterisations of a fixed structure, for fixtures and benchmarks.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{BayesNet, DiscreteLocal, GaussianLocal, Local, Variable};
use crate::graph::Dag;

/// Discrete network on `dag` whose CPT rows are drawn from a symmetric
/// Dirichlet with the given concentration, floored at `1e-3` and
/// renormalised so every probability is positive. Small concentrations give
/// strong effects. Levels are named `s0, s1, ...`.
pub fn random_discrete_net<R: Rng + ?Sized>(name: &str, dag: &Dag, cards: &[usize], concentration: f64, rng: &mut R) -> BayesNet {
    assert_eq!(cards.len(), dag.n_nodes(), "one cardinality per node");
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    let vars: Vec<Variable> = (0..dag.n_nodes())
        .map(|i| {
            let levels: Vec<String> = (0..cards[i]).map(|k| format!("s{k}")).collect();
            Variable::categorical(dag.name(i), &levels)
        })
        .collect();
    let locals = (0..dag.n_nodes())
        .map(|i| {
            let parents: Vec<usize> = dag.parents(i).iter().copied().collect();
            let q: usize = parents.iter().map(|&p| cards[p]).product();
            let probs = (0..q)
                .map(|_| {
                    let raw: Vec<f64> = (0..cards[i]).map(|_| gamma.sample(rng).max(1e-3)).collect();
                    normalise(raw)
                })
                .collect();
            Local::Discrete(DiscreteLocal { parents, probs })
        })
        .collect();
    BayesNet::new(name, dag.clone(), vars, locals).expect("well-formed random network")
}

/// Rows sum to exactly 1 in floating point: the last entry absorbs rounding.
pub(crate) fn normalise(mut row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    for v in row.iter_mut() {
        *v /= s;
    }
    let k = row.len() - 1;
    let head: f64 = row[..k].iter().sum();
    row[k] = 1.0 - head;
    row
}

/// Linear-Gaussian network on `dag` with coefficients of magnitude in
/// `[0.5, 1.5]` and random sign, intercepts in `[-1, 1]` and noise standard
/// deviations in `[0.5, 1]`.
pub fn random_gaussian_net<R: Rng + ?Sized>(name: &str, dag: &Dag, rng: &mut R) -> BayesNet {
    let vars = (0..dag.n_nodes()).map(|i| Variable::continuous(dag.name(i))).collect();
    let locals = (0..dag.n_nodes())
        .map(|i| {
            let parents: Vec<usize> = dag.parents(i).iter().copied().collect();
            let betas = parents
                .iter()
                .map(|_| {
                    let m: f64 = rng.random_range(0.5..1.5);
                    if rng.random_bool(0.5) { m } else { -m }
                })
                .collect();
            Local::Gaussian(GaussianLocal {
                parents,
                intercept: rng.random_range(-1.0..1.0),
                betas,
                sd: rng.random_range(0.5..1.0),
            })
        })
        .collect();
    BayesNet::new(name, dag.clone(), vars, locals).expect("well-formed random network")
}
