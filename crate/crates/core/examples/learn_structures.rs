//! Every learner on one Gaussian network, with SHD against the true class and
//! the number of criterion calls each needed.

use std::path::Path;
use std::sync::Arc;

use bnarena::bench::load_bn_text;
use bnarena::criteria::{Criterion, CriterionKind};
use bnarena::graph::{cpdag_from_dag, shd};
use bnarena::learn::{learn, LearnOptions, LearnerKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = load_bn_text(Path::new(env!("CARGO_MANIFEST_DIR")).join("networks/gsix.bn"))?;
    let truth = cpdag_from_dag(net.dag());
    let data = Arc::new(net.sample(500, 11));
    let opts = LearnOptions { seed: 3, ..Default::default() };

    for kind in [CriterionKind::Bic, CriterionKind::FisherZ { alpha: 0.01 }] {
        println!("criterion {}", kind.key());
        let crit = Criterion::new(data.clone(), kind)?;
        for learner in LearnerKind::ALL {
            if learner.needs_score() && !crit.has_score() {
                continue;
            }
            let before = crit.calls();
            let out = learn(learner, &crit, &opts)?;
            let d = shd(&out.graph.cpdag(), &truth, net.n_arcs())?;
            println!(
                "  {:<12} shd {:>2}  calls {:>5}  valid {}",
                learner.key(),
                d.raw,
                crit.calls() - before,
                out.valid
            );
        }
    }
    Ok(())
}
