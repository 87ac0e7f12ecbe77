//! Loads a reference network, samples from it, refits the parameters on the
//! true structure and compares log-likelihoods.

use std::path::Path;

use bnarena::bench::load_bn_text;
use bnarena::model::fit_parameters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("networks");
    for file in ["alarm.bn", "ecoli70.bn"] {
        let net = load_bn_text(dir.join(file))?;
        println!("{}: {} nodes, {} arcs, {} parameters", net.name(), net.n_nodes(), net.n_arcs(), net.param_count());
        for n in [100, 1000, 10000] {
            let data = net.sample(n, 7);
            let fitted = fit_parameters(net.dag(), &data)?;
            let truth = net.log_likelihood(&data)? / n as f64;
            let refit = fitted.log_likelihood(&data)? / n as f64;
            println!("  n = {n:>5}: loglik per row true {truth:.4}, refitted {refit:.4}");
        }
    }
    Ok(())
}
