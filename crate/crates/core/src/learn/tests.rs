use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::constraint::for_each_subset;
use super::*;
use crate::criteria::CriterionKind;
use crate::graph::{cpdag_from_dag, NodeSet, PairState};
use crate::model::Dataset;
use crate::testutil::{all_dags, dag, discrete_sample, gaussian_sample, names};

fn crit(d: Dataset, key: &str) -> Criterion {
    Criterion::from_key(Arc::new(d), key).unwrap()
}

#[test]
fn subsets_in_lexicographic_order() {
    let mut seen = Vec::new();
    for_each_subset(&[2, 5, 7, 9], 2, |s| {
        seen.push(s.to_vec());
        Ok::<_, ()>(false)
    })
    .unwrap();
    assert_eq!(seen, vec![vec![2, 5], vec![2, 7], vec![2, 9], vec![5, 7], vec![5, 9], vec![7, 9]]);
    let mut empty = 0;
    for_each_subset(&[1, 2], 0, |s| {
        assert!(s.is_empty());
        empty += 1;
        Ok::<_, ()>(false)
    })
    .unwrap();
    assert_eq!(empty, 1);
    assert!(!for_each_subset(&[1], 2, |_| Ok::<_, ()>(true)).unwrap());
}

#[test]
fn two_variable_hill_climbing_call_trace() {
    let d = discrete_sample(&dag(2, &[(0, 1)]), &[2, 2], 500, 3);
    let c = crit(d, "bic");
    let out = greedy_search(&c, &GreedyOptions::hill_climbing(), None).unwrap();
    // 2 initial locals + 2 toggled entries + 1 refreshed entry after the add
    assert_eq!(out.calls, 5);
    assert_eq!(out.graph.n_edges(), 1);
}

#[test]
fn greedy_reaches_exhaustive_optimum_on_three_nodes() {
    let mut hits = 0;
    let total = 20;
    for seed in 0..total {
        let truth = dag(3, &[(0, 1), (2, 1)]);
        let d = discrete_sample(&truth, &[2, 3, 2], 500, seed);
        let c = crit(d.clone(), "bic");
        let opts = GreedyOptions { tabu_steps: 10, tabu_memory: 5, restarts: 2, ..GreedyOptions::default() };
        let out = greedy_search(&c, &opts, None).unwrap();
        let got = crate::criteria::bic(&out.graph.dag().unwrap(), &d).unwrap().total;
        let best = all_dags(3).iter().map(|g| crate::criteria::bic(g, &d).unwrap().total).fold(f64::NEG_INFINITY, f64::max);
        assert!(got <= best + 1e-9);
        hits += (got >= best - 1e-7) as usize;
    }
    assert!(hits >= 19, "{hits}/{total}");
}

#[test]
fn hill_climbing_incumbent_strictly_increases() {
    let truth = dag(5, &[(0, 1), (1, 2), (3, 2), (2, 4)]);
    let d = gaussian_sample(&truth, 200, 8);
    let c = crit(d.clone(), "bic");
    let names = d.names();
    let mut s = greedy::Search::new(&c, None, None, crate::graph::Dag::new(&names).unwrap()).unwrap();
    let start = s.total();
    s.hill_climb().unwrap();
    assert!(!s.trace.is_empty());
    let mut last = start;
    for &v in &s.trace {
        assert!(v > last);
        last = v;
    }
    let bic = crate::criteria::bic(&s.dag, &d).unwrap().total;
    assert!((bic - s.total()).abs() < 1e-8);
}

#[test]
fn greedy_runs_are_reproducible() {
    let d = discrete_sample(&dag(4, &[(0, 1), (1, 2), (3, 2)]), &[2, 2, 3, 2], 300, 5);
    let opts = GreedyOptions { tabu_steps: 5, tabu_memory: 5, restarts: 3, perturbation: 2, max_parents: None, seed: 9 };
    let a = greedy_search(&crit(d.clone(), "bic"), &opts, None).unwrap();
    let b = greedy_search(&crit(d.clone(), "bic"), &opts, None).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.calls, b.calls);
    let empty = crate::criteria::bic(&crate::graph::Dag::new(&d.names()).unwrap(), &d).unwrap().total;
    assert!(crate::criteria::bic(&a.graph.dag().unwrap(), &d).unwrap().total >= empty);
}

#[test]
fn max_parents_is_respected() {
    let truth = dag(5, &[(0, 4), (1, 4), (2, 4), (3, 4)]);
    let d = gaussian_sample(&truth, 500, 1);
    let opts = GreedyOptions { max_parents: Some(2), ..GreedyOptions::default() };
    let out = greedy_search(&crit(d, "bic"), &opts, None).unwrap();
    let g = out.graph.dag().unwrap();
    assert!((0..5).all(|i| g.parents(i).len() <= 2));
}

#[test]
fn pc_recovers_collider() {
    let truth = dag(3, &[(0, 1), (2, 1)]);
    let d = discrete_sample(&truth, &[2, 2, 2], 2000, 17);
    let out = pc_stable(&crit(d, "bic"), None).unwrap();
    assert!(out.valid);
    assert_eq!(out.graph.cpdag(), cpdag_from_dag(&truth));
}

#[test]
fn pc_on_independent_data_is_empty() {
    let d = gaussian_sample(&dag(3, &[]), 2000, 4);
    for key in ["bic", "zf", "g2"] {
        let out = pc_stable(&crit(d.clone(), key), None).unwrap();
        assert_eq!(out.graph.n_edges(), 0, "{key}");
        assert!(out.valid);
    }
}

#[test]
fn pc_call_counts_reproducible() {
    let d = discrete_sample(&dag(4, &[(0, 1), (1, 2), (3, 2)]), &[2, 2, 3, 2], 400, 2);
    let a = pc_stable(&crit(d.clone(), "g2"), None).unwrap();
    let b = pc_stable(&crit(d, "g2"), None).unwrap();
    assert_eq!(a.calls, b.calls);
    assert!(a.calls > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn pc_skeleton_invariant_under_column_permutation(seed in 0u64..1000, perm_seed in 0u64..1000) {
        let truth = dag(5, &[(0, 1), (1, 2), (3, 2), (2, 4)]);
        let d = gaussian_sample(&truth, 60, seed);
        let mut order: Vec<usize> = (0..5).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(perm_seed));
        let p = d.permute_columns(&order);
        for key in ["bic", "zf"] {
            let a = pc_skeleton(&crit(d.clone(), key), None).unwrap();
            let b = pc_skeleton(&crit(p.clone(), key), None).unwrap();
            let edges_a: BTreeSet<(String, String)> = named_edges(&d, &a);
            let edges_b: BTreeSet<(String, String)> = named_edges(&p, &b);
            prop_assert_eq!(edges_a, edges_b);
        }
    }
}

fn named_edges(d: &Dataset, sk: &Skeleton) -> BTreeSet<(String, String)> {
    let names = d.names();
    let mut out = BTreeSet::new();
    for (a, nb) in sk.adjacency.iter().enumerate() {
        for &b in nb {
            let (x, y) = (names[a].clone(), names[b].clone());
            out.insert(if x < y { (x, y) } else { (y, x) });
        }
    }
    out
}

#[test]
fn gs_blankets_on_chain_and_collider() {
    let chain = dag(3, &[(0, 1), (1, 2)]);
    let d = gaussian_sample(&chain, 3000, 6);
    let c = crit(d, "bic");
    let mb = gs_blankets(&c).unwrap();
    assert_eq!(mb[0], BTreeSet::from([1]));
    let out = grow_shrink(&c).unwrap();
    assert_eq!(out.graph.cpdag(), cpdag_from_dag(&chain));

    let collider = dag(3, &[(0, 1), (2, 1)]);
    let d = gaussian_sample(&collider, 3000, 6);
    let c = crit(d, "bic");
    let mb = gs_blankets(&c).unwrap();
    assert_eq!(mb[0], BTreeSet::from([1, 2]));
    let out = grow_shrink(&c).unwrap();
    assert!(out.valid);
    assert_eq!(out.graph.cpdag(), cpdag_from_dag(&collider));
}

#[test]
fn gs_on_independent_data_is_empty() {
    let d = discrete_sample(&dag(4, &[]), &[2, 3, 2, 2], 1000, 3);
    let out = grow_shrink(&crit(d, "bic")).unwrap();
    assert_eq!(out.graph.n_edges(), 0);
}

/// Zero-mean Gaussian sample with precision matrix `omega`.
fn gmrf_sample(omega: &DMatrix<f64>, n: usize, seed: u64) -> Dataset {
    let p = omega.nrows();
    let sigma = omega.clone().try_inverse().unwrap();
    let l = sigma.cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let z = nalgebra::DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let x = &l * z;
        for (c, v) in cols.iter_mut().zip(x.iter()) {
            c.push(*v);
        }
    }
    Dataset::from_continuous(&names(p), cols).unwrap()
}

#[test]
fn chordless_four_cycle_is_not_a_valid_class() {
    // A - B - C - D - A with no chords
    let mut omega = DMatrix::identity(4, 4);
    for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
        omega[(a, b)] = 0.4;
        omega[(b, a)] = 0.4;
    }
    let d = gmrf_sample(&omega, 5000, 12);
    let out = pc_stable(&crit(d, "bic"), None).unwrap();
    assert!(!out.valid);
    let LearnedGraph::Pdag(p) = &out.graph else { panic!("constraint learner returns a PDAG") };
    assert_eq!(p.n_edges(), 4);
    assert_eq!(p.pair_state(0, 2), PairState::Absent);
}

#[test]
fn orient_keeps_stronger_collider() {
    // chain A - B - C - D where both (A, C) and (B, D) separations exclude the
    // middle node: B and C are each demanded as colliders, conflicting on B - C
    let nodes = NodeSet::new(&names(4)).unwrap();
    let mut adjacency = vec![BTreeSet::new(); 4];
    for (a, b) in [(0, 1), (1, 2), (2, 3)] {
        adjacency[a].insert(b);
        adjacency[b].insert(a);
    }
    let mut separations = std::collections::BTreeMap::new();
    separations.insert((0, 2), Separation { set: vec![], margin: 5.0 });
    separations.insert((1, 3), Separation { set: vec![], margin: 2.0 });
    separations.insert((0, 3), Separation { set: vec![1, 2], margin: 1.0 });
    let (p, valid) = orient_skeleton(&nodes, &Skeleton { adjacency: adjacency.clone(), separations: separations.clone() });
    // A → B ← C wins over B → C ← D
    assert!(valid);
    assert!(p.has_arc(0, 1) && p.has_arc(2, 1));
    separations.insert((1, 3), Separation { set: vec![], margin: 5.0 });
    let (_, valid) = orient_skeleton(&nodes, &Skeleton { adjacency, separations });
    assert!(!valid);
}

#[test]
fn annealing_basic_cases() {
    let d = discrete_sample(&dag(1, &[]), &[3], 50, 1);
    let out = simulated_annealing(&crit(d, "bic"), &AnnealOptions::default()).unwrap();
    assert_eq!(out.graph.n_edges(), 0);

    let d = discrete_sample(&dag(2, &[(0, 1)]), &[3, 3], 1000, 2);
    let c = crit(d.clone(), "bic");
    let out = simulated_annealing(&c, &AnnealOptions { iterations: 50, ..Default::default() }).unwrap();
    let g = out.graph.dag().unwrap();
    assert_eq!(g.n_arcs(), 1);
    let best_two = [dag(2, &[(0, 1)]), dag(2, &[(1, 0)])].map(|g| crate::criteria::bic(&g, &d).unwrap().total);
    let got = crate::criteria::bic(&g, &d).unwrap().total;
    assert!(got >= best_two[0].max(best_two[1]) - 1e-9);

    assert_eq!(acceptance_probability(1.0, 0.1), 1.0);
    assert!(acceptance_probability(-1.0, 1e-3) < 1e-12);
}

#[test]
fn annealing_finds_good_structures() {
    let truth = dag(4, &[(0, 1), (1, 2), (3, 2)]);
    let d = gaussian_sample(&truth, 1000, 3);
    let c = crit(d.clone(), "bic");
    let out = simulated_annealing(&c, &AnnealOptions { iterations: 300, seed: 4, ..Default::default() }).unwrap();
    assert_eq!(out.graph.cpdag(), cpdag_from_dag(&truth));
}

#[test]
fn annealing_rejects_bad_cooling() {
    let d = gaussian_sample(&dag(2, &[]), 20, 1);
    let bad = AnnealOptions { cooling: 1.0, ..Default::default() };
    assert!(matches!(simulated_annealing(&crit(d, "bic"), &bad), Err(LearnError::BadOption(_))));
}

#[test]
fn hybrid_restriction_semantics() {
    let truth = dag(3, &[(0, 1), (2, 1)]);
    let d = gaussian_sample(&truth, 2000, 21);
    let c = crit(d, "bic");
    let full: Vec<BTreeSet<usize>> = (0..3).map(|i| (0..3).filter(|&j| j != i).collect()).collect();
    let opts = GreedyOptions::tabu();
    let restricted = maximise_within(&c, &full, &Maximise::Greedy(opts.clone())).unwrap();
    let free = greedy_search(&c, &opts, None).unwrap();
    assert_eq!(restricted.graph, free.graph);

    let none = vec![BTreeSet::new(); 3];
    let out = maximise_within(&c, &none, &Maximise::Greedy(opts.clone())).unwrap();
    assert_eq!(out.graph.n_edges(), 0);
    let out = maximise_within(&c, &none, &Maximise::Anneal(AnnealOptions::default())).unwrap();
    assert_eq!(out.graph.n_edges(), 0);

    for restrict in [Restrict::PcSkeleton, Restrict::GsBlanket] {
        let cand = candidate_sets(&c, restrict, None).unwrap();
        let out = restrict_maximise(&c, &c, restrict, &Maximise::Greedy(opts.clone()), None).unwrap();
        let g = out.graph.dag().unwrap();
        assert!((0..3).all(|i| g.parents(i).is_subset(&cand[i])));
        assert_eq!(out.graph, free.graph, "{restrict:?} {cand:?}");
        assert_eq!(out.graph.cpdag(), cpdag_from_dag(&truth));
    }
}

#[test]
fn learner_keys_and_options() {
    for k in LearnerKind::ALL {
        assert_eq!(k.key().parse::<LearnerKind>().unwrap(), k);
    }
    assert!("ges".parse::<LearnerKind>().is_err());
    let mut o = LearnOptions::default();
    o.set("tabu.t0", 4.0).unwrap();
    o.set("sann.cool", 0.9).unwrap();
    assert_eq!(o.greedy(LearnerKind::Tabu).tabu_steps, 4);
    assert_eq!(o.greedy(LearnerKind::Tabu).tabu_memory, 10);
    assert_eq!(o.greedy(LearnerKind::HillClimbing).tabu_steps, 0);
    assert!(o.set("restarts", 1.5).is_err());
    assert!(o.set("nope", 1.0).is_err());
}

#[test]
fn score_learners_need_a_score() {
    let d = gaussian_sample(&dag(2, &[]), 20, 1);
    let c = crit(d, "zf");
    assert!(matches!(learn(LearnerKind::Tabu, &c, &LearnOptions::default()), Err(LearnError::NeedsScore(_))));
    assert!(learn(LearnerKind::PcStable, &c, &LearnOptions::default()).is_ok());
}

#[test]
fn every_learner_runs_on_both_data_types() {
    let truth = dag(4, &[(0, 1), (2, 1), (1, 3)]);
    let dd = discrete_sample(&truth, &[2, 3, 2, 2], 400, 1);
    let dg = gaussian_sample(&truth, 400, 1);
    for (d, key) in [(dd, "bic"), (dg.clone(), "bic"), (dg, "bge")] {
        let c = crit(d, key);
        for k in LearnerKind::ALL {
            let out = learn(k, &c, &LearnOptions::default()).unwrap();
            assert!(out.calls > 0, "{k}");
        }
    }
    let _ = CriterionKind::Bic;
}
