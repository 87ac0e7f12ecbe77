//! Parameterised Bayesian networks: discrete CPTs and linear-Gaussian locals.

mod data;
mod gaussian;
mod random;

pub use data::{Column, Dataset, VarKind, Variable};
pub use gaussian::{gaussian_condition, implied_joint, Posterior};
pub use random::{random_discrete_net, random_gaussian_net};

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::graph::{Dag, GraphError};
use crate::stats;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset shape: {0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node `{0}`: {1}")]
    Local(String, String),
    #[error("networks must be all-discrete or all-gaussian")]
    MixedKinds,
    #[error("node `{0}` has no declared levels")]
    UnknownLevels(String),
    #[error("node `{0}`: design matrix is rank deficient")]
    RankDeficient(String),
    #[error("node `{0}`: degenerate fit (residual standard deviation {1:e})")]
    Degenerate(String, f64),
    #[error("cannot fit parameters from an empty dataset")]
    NoRows,
    #[error("node `{node}` has probability zero at row {row}")]
    ZeroProbability { node: String, row: usize },
    #[error("implied covariance of the evidence is singular")]
    SingularCovariance,
    #[error("operation needs a gaussian network")]
    NotGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Discrete,
    Gaussian,
}

/// Conditional probability table. Row `j` is a parent configuration, with the
/// first parent varying fastest; column `k` is a level of the node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLocal {
    pub parents: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
}

impl DiscreteLocal {
    pub fn levels(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    pub fn parent_configs(&self) -> usize {
        self.probs.len()
    }
}

/// `X = intercept + Σ betas[k]·parents[k] + N(0, sd²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLocal {
    pub parents: Vec<usize>,
    pub intercept: f64,
    pub betas: Vec<f64>,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Local {
    Discrete(DiscreteLocal),
    Gaussian(GaussianLocal),
}

impl Local {
    pub fn parents(&self) -> &[usize] {
        match self {
            Local::Discrete(d) => &d.parents,
            Local::Gaussian(g) => &g.parents,
        }
    }
}

/// Row index of a parent configuration, first parent fastest.
pub(crate) fn config_index(parents: &[usize], cards: &[usize], row: &[u32]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for &p in parents {
        idx += row[p] as usize * stride;
        stride *= cards[p];
    }
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    name: String,
    dag: Dag,
    vars: Vec<Variable>,
    locals: Vec<Local>,
    kind: NetKind,
}

impl BayesNet {
    pub fn new(name: &str, dag: Dag, vars: Vec<Variable>, locals: Vec<Local>) -> Result<Self, ModelError> {
        if vars.len() != dag.n_nodes() || locals.len() != dag.n_nodes() {
            return Err(ModelError::Shape("variables, locals and nodes differ in number".into()));
        }
        for (i, v) in vars.iter().enumerate() {
            if v.name != dag.name(i) {
                return Err(ModelError::Shape(format!("variable `{}` out of node order", v.name)));
            }
        }
        let kind = match (&vars[..], &locals[..]) {
            ([], _) => NetKind::Discrete,
            (_, [Local::Discrete(_), ..]) => NetKind::Discrete,
            _ => NetKind::Gaussian,
        };
        let cards: Vec<usize> = vars.iter().map(|v| v.n_levels().unwrap_or(0)).collect();
        for (i, (v, local)) in vars.iter().zip(&locals).enumerate() {
            let err = |msg: String| ModelError::Local(v.name.clone(), msg);
            let declared: BTreeSet<usize> = local.parents().iter().copied().collect();
            if declared.len() != local.parents().len() || &declared != dag.parents(i) {
                return Err(err("parent list does not match the graph".into()));
            }
            match (local, &v.kind, kind) {
                (Local::Discrete(d), VarKind::Categorical(levels), NetKind::Discrete) => {
                    let q: usize = d.parents.iter().map(|&p| cards[p]).product();
                    if d.probs.len() != q {
                        return Err(err(format!("{} CPT rows, expected {q}", d.probs.len())));
                    }
                    for row in &d.probs {
                        if row.len() != levels.len() {
                            return Err(err("CPT row length differs from level count".into()));
                        }
                        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                            return Err(err("negative or non-finite probability".into()));
                        }
                        let s: f64 = row.iter().sum();
                        if (s - 1.0).abs() > 1e-9 {
                            return Err(err(format!("CPT row sums to {s}")));
                        }
                    }
                }
                (Local::Gaussian(g), VarKind::Continuous, NetKind::Gaussian) => {
                    if g.betas.len() != g.parents.len() {
                        return Err(err("one coefficient per parent expected".into()));
                    }
                    if !(g.sd > 0.0) || !g.sd.is_finite() {
                        return Err(err("standard deviation must be positive".into()));
                    }
                    if !g.intercept.is_finite() || g.betas.iter().any(|b| !b.is_finite()) {
                        return Err(err("non-finite coefficient".into()));
                    }
                }
                _ => return Err(ModelError::MixedKinds),
            }
        }
        Ok(BayesNet {
            name: name.to_string(),
            dag,
            vars,
            locals,
            kind,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn locals(&self) -> &[Local] {
        &self.locals
    }

    pub fn kind(&self) -> NetKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.dag.n_nodes()
    }

    pub fn n_arcs(&self) -> usize {
        self.dag.n_arcs()
    }

    /// `|Θ|`: free parameters summed over the local distributions.
    pub fn param_count(&self) -> usize {
        param_count(&self.dag, &self.vars).expect("validated network")
    }

    /// Sum of per-node log-likelihoods over the rows of `d`.
    pub fn log_likelihood(&self, d: &Dataset) -> Result<f64, ModelError> {
        (0..self.n_nodes()).map(|i| self.node_log_likelihood(d, i)).sum()
    }

    pub fn node_log_likelihood(&self, d: &Dataset, i: usize) -> Result<f64, ModelError> {
        self.check_dataset(d)?;
        match &self.locals[i] {
            Local::Discrete(local) => {
                let cards: Vec<usize> = self.vars.iter().map(|v| v.n_levels().unwrap_or(0)).collect();
                let cols: Vec<&[u32]> = (0..d.n_vars()).map(|j| d.categorical(j).expect("checked")).collect();
                let mut row = vec![0u32; cols.len()];
                let mut total = 0.0;
                for r in 0..d.n_rows() {
                    for &p in &local.parents {
                        row[p] = cols[p][r];
                    }
                    let j = config_index(&local.parents, &cards, &row);
                    let prob = local.probs[j][cols[i][r] as usize];
                    if prob <= 0.0 {
                        return Err(ModelError::ZeroProbability {
                            node: self.vars[i].name.clone(),
                            row: r,
                        });
                    }
                    total += prob.ln();
                }
                Ok(total)
            }
            Local::Gaussian(g) => {
                let x = d.continuous(i).expect("checked");
                let pcols: Vec<&[f64]> = g.parents.iter().map(|&p| d.continuous(p).expect("checked")).collect();
                let norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - g.sd.ln();
                let mut total = 0.0;
                for r in 0..d.n_rows() {
                    let mean = g.intercept + g.betas.iter().zip(&pcols).map(|(b, c)| b * c[r]).sum::<f64>();
                    let z = (x[r] - mean) / g.sd;
                    total += norm - 0.5 * z * z;
                }
                Ok(total)
            }
        }
    }

    fn check_dataset(&self, d: &Dataset) -> Result<(), ModelError> {
        if d.vars() != self.vars.as_slice() {
            return Err(ModelError::Shape("dataset variables differ from the network".into()));
        }
        Ok(())
    }

    /// `n` rows by ancestral sampling; identical `(n, seed)` gives identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = self.dag.topological_order();
        let p = self.n_nodes();
        match self.kind {
            NetKind::Discrete => {
                let cards: Vec<usize> = self.vars.iter().map(|v| v.n_levels().unwrap_or(0)).collect();
                let mut cols = vec![Vec::with_capacity(n); p];
                let mut row = vec![0u32; p];
                for _ in 0..n {
                    for &i in &order {
                        let Local::Discrete(local) = &self.locals[i] else { unreachable!() };
                        let probs = &local.probs[config_index(&local.parents, &cards, &row)];
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut level = probs.len() - 1;
                        for (k, &pk) in probs.iter().enumerate() {
                            acc += pk;
                            if u < acc {
                                level = k;
                                break;
                            }
                        }
                        row[i] = level as u32;
                        cols[i].push(level as u32);
                    }
                }
                Dataset::new(self.vars.clone(), cols.into_iter().map(Column::Categorical).collect())
                    .expect("sampled levels are declared")
            }
            NetKind::Gaussian => {
                let mut cols = vec![Vec::with_capacity(n); p];
                let mut row = vec![0f64; p];
                for _ in 0..n {
                    for &i in &order {
                        let Local::Gaussian(g) = &self.locals[i] else { unreachable!() };
                        let eps: f64 = rng.sample(StandardNormal);
                        let mean = g.intercept + g.parents.iter().zip(&g.betas).map(|(&q, b)| b * row[q]).sum::<f64>();
                        row[i] = mean + g.sd * eps;
                        cols[i].push(row[i]);
                    }
                }
                Dataset::new(self.vars.clone(), cols.into_iter().map(Column::Continuous).collect())
                    .expect("sampled values are finite")
            }
        }
    }
}

/// `|Θ|` for a graph over the given variables: `(r_i - 1)·q_i` per discrete
/// node, `|Π_i| + 2` per gaussian node.
pub fn param_count(dag: &Dag, vars: &[Variable]) -> Result<usize, ModelError> {
    let mut total = 0;
    for (i, v) in vars.iter().enumerate() {
        total += match &v.kind {
            VarKind::Continuous => dag.parents(i).len() + 2,
            VarKind::Categorical(levels) => {
                if levels.is_empty() {
                    return Err(ModelError::UnknownLevels(v.name.clone()));
                }
                let mut q = 1usize;
                for &p in dag.parents(i) {
                    q *= vars[p]
                        .n_levels()
                        .filter(|&l| l > 0)
                        .ok_or_else(|| ModelError::UnknownLevels(vars[p].name.clone()))?;
                }
                (levels.len() - 1) * q
            }
        };
    }
    Ok(total)
}

/// Maximum-likelihood CPTs, or per-node least squares for continuous data.
/// Unobserved parent configurations get a uniform row; the gaussian residual
/// standard deviation uses denominator `n - |Π_i| - 1`.
pub fn fit_parameters(dag: &Dag, d: &Dataset) -> Result<BayesNet, ModelError> {
    if d.n_rows() == 0 {
        return Err(ModelError::NoRows);
    }
    if d.names() != dag.nodes().names() {
        return Err(ModelError::Shape("dataset columns differ from graph nodes".into()));
    }
    let n = d.n_rows();
    let mut locals = Vec::with_capacity(d.n_vars());
    if d.is_discrete() {
        let cards: Vec<usize> = d.vars().iter().map(|v| v.n_levels().unwrap_or(0)).collect();
        let cols: Vec<&[u32]> = (0..d.n_vars()).map(|j| d.categorical(j).expect("discrete")).collect();
        let mut row = vec![0u32; cols.len()];
        for i in 0..d.n_vars() {
            let parents: Vec<usize> = dag.parents(i).iter().copied().collect();
            let q: usize = parents.iter().map(|&p| cards[p]).product();
            let r = cards[i];
            let mut counts = vec![vec![0usize; r]; q];
            for t in 0..n {
                for &p in &parents {
                    row[p] = cols[p][t];
                }
                counts[config_index(&parents, &cards, &row)][cols[i][t] as usize] += 1;
            }
            let probs = counts
                .into_iter()
                .map(|c| {
                    let tot: usize = c.iter().sum();
                    if tot == 0 {
                        vec![1.0 / r as f64; r]
                    } else {
                        c.into_iter().map(|x| x as f64 / tot as f64).collect()
                    }
                })
                .collect();
            locals.push(Local::Discrete(DiscreteLocal { parents, probs }));
        }
    } else if d.is_continuous() {
        let cols: Vec<&[f64]> = (0..d.n_vars()).map(|j| d.continuous(j).expect("continuous")).collect();
        for i in 0..d.n_vars() {
            let name = || d.var(i).name.clone();
            let parents: Vec<usize> = dag.parents(i).iter().copied().collect();
            let dof = n as isize - parents.len() as isize - 1;
            if dof <= 0 {
                return Err(ModelError::RankDeficient(name()));
            }
            let mut idx = vec![i];
            idx.extend(&parents);
            let sub: Vec<&[f64]> = idx.iter().map(|&j| cols[j]).collect();
            let (cov, means) = stats::covariance(&sub);
            let xs: Vec<usize> = (1..idx.len()).collect();
            let (_, betas) =
                stats::conditional_variance(&cov, 0, &xs).ok_or_else(|| ModelError::RankDeficient(name()))?;
            let intercept = means[0] - betas.iter().zip(&means[1..]).map(|(b, m)| b * m).sum::<f64>();
            let rss: f64 = (0..n)
                .map(|t| {
                    let fit = intercept + betas.iter().zip(&sub[1..]).map(|(b, c)| b * c[t]).sum::<f64>();
                    (sub[0][t] - fit).powi(2)
                })
                .sum();
            let sd = (rss / dof as f64).sqrt();
            if sd < 1e-12 {
                return Err(ModelError::Degenerate(name(), sd));
            }
            locals.push(Local::Gaussian(GaussianLocal { parents, intercept, betas, sd }));
        }
    } else {
        return Err(ModelError::MixedKinds);
    }
    BayesNet::new("fitted", dag.clone(), d.vars().to_vec(), locals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn binary_root(p1: f64) -> BayesNet {
        let dag = Dag::new(&["A"]).unwrap();
        BayesNet::new(
            "root",
            dag,
            vec![Variable::categorical("A", &["a1", "a2"])],
            vec![Local::Discrete(DiscreteLocal { parents: vec![], probs: vec![vec![1.0 - p1, p1]] })],
        )
        .unwrap()
    }

    fn gauss_chain() -> BayesNet {
        let dag = Dag::from_named_arcs(&["X", "Y"], &[("X", "Y")]).unwrap();
        BayesNet::new(
            "xy",
            dag,
            vec![Variable::continuous("X"), Variable::continuous("Y")],
            vec![
                Local::Gaussian(GaussianLocal { parents: vec![], intercept: 0.0, betas: vec![], sd: 1.0 }),
                Local::Gaussian(GaussianLocal { parents: vec![0], intercept: 1.0, betas: vec![0.5], sd: 1.0 }),
            ],
        )
        .unwrap()
    }

    #[test]
    fn param_counts() {
        assert_eq!(binary_root(0.5).param_count(), 1);
        let dag = Dag::from_named_arcs(&["A", "B", "C"], &[("A", "C"), ("B", "C")]).unwrap();
        let vars: Vec<Variable> = ["A", "B", "C"].iter().map(|n| Variable::continuous(n)).collect();
        assert_eq!(param_count(&dag, &vars).unwrap(), 2 + 2 + 4);
        let bad = vec![Variable::categorical::<&str>("A", &[]), Variable::continuous("B"), Variable::continuous("C")];
        assert!(matches!(param_count(&dag, &bad), Err(ModelError::UnknownLevels(_))));
    }

    #[test]
    fn frequency_fit_of_a_binary_root() {
        let d = Dataset::new(
            vec![Variable::categorical("A", &["0", "1"])],
            vec![Column::Categorical(vec![1, 1, 1, 1, 1, 1, 0, 0, 0, 0])],
        )
        .unwrap();
        let net = fit_parameters(&Dag::new(&["A"]).unwrap(), &d).unwrap();
        let Local::Discrete(l) = &net.locals()[0] else { panic!() };
        assert_eq!(l.probs, vec![vec![0.4, 0.6]]);
    }

    #[test]
    fn unobserved_parent_configuration_is_uniform() {
        let vars = vec![Variable::categorical("A", &["0", "1"]), Variable::categorical("B", &["0", "1", "2"])];
        let d = Dataset::new(vars, vec![Column::Categorical(vec![0, 0]), Column::Categorical(vec![2, 1])]).unwrap();
        let dag = Dag::from_named_arcs(&["A", "B"], &[("A", "B")]).unwrap();
        let net = fit_parameters(&dag, &d).unwrap();
        let Local::Discrete(l) = &net.locals()[1] else { panic!() };
        assert_eq!(l.probs[1], vec![1.0 / 3.0; 3]);
        assert_eq!(l.probs[0], vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn exact_linear_relation_is_degenerate() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 3.0 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let d = Dataset::from_continuous(&["X", "Y"], vec![x, y]).unwrap();
        let dag = Dag::from_named_arcs(&["X", "Y"], &[("X", "Y")]).unwrap();
        assert!(matches!(fit_parameters(&dag, &d), Err(ModelError::Degenerate(..))));
    }

    #[test]
    fn constant_column_is_rejected() {
        let d = Dataset::from_continuous(&["X"], vec![vec![3.0; 10]]).unwrap();
        assert!(fit_parameters(&Dag::new(&["X"]).unwrap(), &d).is_err());
        let empty = Dataset::empty(vec![Variable::continuous("X")]);
        assert!(matches!(fit_parameters(&Dag::new(&["X"]).unwrap(), &empty), Err(ModelError::NoRows)));
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let e: Vec<f64> = (0..50).map(|i| (i as f64 * 1.91).cos() * 0.1).collect();
        let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| 1.5 - 0.7 * a + b).collect();
        let d = Dataset::from_continuous(&["X", "Y"], vec![x, y]).unwrap();
        let dag = Dag::from_named_arcs(&["X", "Y"], &[("X", "Y")]).unwrap();
        let net = fit_parameters(&dag, &d).unwrap();
        let Local::Gaussian(g) = &net.locals()[1] else { panic!() };
        assert_abs_diff_eq!(g.betas[0], -0.7, epsilon = 0.05);
        assert_abs_diff_eq!(g.intercept, 1.5, epsilon = 0.05);
    }

    #[test]
    fn sampling_is_deterministic_and_handles_zero_rows() {
        let net = gauss_chain();
        assert_eq!(net.sample(0, 1).n_rows(), 0);
        assert_eq!(net.sample(0, 1).n_vars(), 2);
        assert_eq!(net.sample(100, 9), net.sample(100, 9));
        assert_ne!(net.sample(100, 9), net.sample(100, 10));
    }

    #[test]
    fn binary_root_frequency_concentrates() {
        let d = binary_root(0.7).sample(100_000, 5);
        let ones = d.categorical(0).unwrap().iter().filter(|&&x| x == 1).count();
        assert!((ones as f64 / 1e5 - 0.7).abs() < 0.01);
    }

    #[test]
    fn log_likelihood_values() {
        let net = binary_root(0.5);
        let d = net.sample(10, 2);
        assert_abs_diff_eq!(net.log_likelihood(&d).unwrap(), 10.0 * 0.5f64.ln(), epsilon = 1e-12);

        let dag = Dag::new(&["X"]).unwrap();
        let single = BayesNet::new(
            "x",
            dag,
            vec![Variable::continuous("X")],
            vec![Local::Gaussian(GaussianLocal { parents: vec![], intercept: 0.0, betas: vec![], sd: 1.0 })],
        )
        .unwrap();
        let d = Dataset::from_continuous(&["X"], vec![vec![0.0]]).unwrap();
        let want = (1.0 / (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert_abs_diff_eq!(single.log_likelihood(&d).unwrap(), want, epsilon = 1e-12);

        let chain = gauss_chain();
        let d = chain.sample(30, 4);
        let parts: f64 = (0..2).map(|i| chain.node_log_likelihood(&d, i).unwrap()).sum();
        assert_abs_diff_eq!(chain.log_likelihood(&d).unwrap(), parts, epsilon = 1e-9);
    }

    #[test]
    fn zero_probability_is_reported() {
        let net = binary_root(1.0);
        let d = Dataset::new(net.vars().to_vec(), vec![Column::Categorical(vec![1, 0])]).unwrap();
        assert!(matches!(net.log_likelihood(&d), Err(ModelError::ZeroProbability { row: 1, .. })));
    }

    #[test]
    fn invalid_locals_are_rejected() {
        let dag = Dag::new(&["A"]).unwrap();
        let vars = vec![Variable::categorical("A", &["0", "1"])];
        let bad_sum = Local::Discrete(DiscreteLocal { parents: vec![], probs: vec![vec![0.5, 0.6]] });
        assert!(BayesNet::new("x", dag.clone(), vars.clone(), vec![bad_sum]).is_err());
        let wrong_parents = Local::Discrete(DiscreteLocal { parents: vec![0], probs: vec![vec![0.5, 0.5]] });
        assert!(BayesNet::new("x", dag, vars, vec![wrong_parents]).is_err());
    }
}
