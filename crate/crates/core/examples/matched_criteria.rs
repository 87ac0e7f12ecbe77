//! A score and the independence test derived from it give the same verdict
//! as comparing the two local scores directly.

use std::sync::Arc;

use bnarena::criteria::{Criterion, CriterionKind};
use bnarena::graph::Dag;
use bnarena::model::random_gaussian_net;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Dag::from_named_arcs(&["X", "Y", "Z"], &[("X", "Z"), ("Y", "Z")])?;
    let net = random_gaussian_net("xyz", &g, &mut ChaCha8Rng::seed_from_u64(1));
    let data = Arc::new(net.sample(400, 2));

    for key in ["bic", "bic-gamma:1", "bge", "zf", "t", "g2"] {
        let crit = Criterion::from_key(data.clone(), key)?;
        let marginal = crit.test(0, 1, &[])?;
        let given_z = crit.test(0, 1, &[2])?;
        println!(
            "{key:<12} X _||_ Y: {:<5}  X _||_ Y | Z: {:<5}  ({} calls)",
            marginal.independent,
            given_z.independent,
            crit.calls()
        );
    }

    // the matched BIC test is the sign of a local score difference
    let bic = Criterion::new(data, CriterionKind::Bic)?;
    let with = bic.local_score(1, &[0, 2])?;
    let without = bic.local_score(1, &[2])?;
    let t = bic.test(0, 1, &[2])?;
    println!("BIC gain of X -> Y given Z: {:.3}; test says independent: {}", with - without, t.independent);
    Ok(())
}
