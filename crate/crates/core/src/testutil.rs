//! Shared helpers for unit tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{cpdag_from_dag, Dag};
use crate::model::{random_discrete_net, random_gaussian_net, Dataset};

pub(crate) fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
}

/// Every DAG on `n` labelled nodes.
pub(crate) fn all_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    'outer: for code in 0..3usize.pow(pairs.len() as u32) {
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
                continue 'outer;
            }
        }
        out.push(g);
    }
    out
}

pub(crate) fn class_text(g: &Dag) -> String {
    cpdag_from_dag(g).to_text()
}

pub(crate) fn dag(n: usize, arcs: &[(usize, usize)]) -> Dag {
    let mut g = Dag::new(&names(n)).unwrap();
    for &(a, b) in arcs {
        g.add_arc(a, b).unwrap();
    }
    g
}

pub(crate) fn discrete_sample(g: &Dag, cards: &[usize], n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_discrete_net("t", g, cards, 0.5, &mut rng).sample(n, seed + 1)
}

pub(crate) fn gaussian_sample(g: &Dag, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_gaussian_net("t", g, &mut rng).sample(n, seed + 1)
}
