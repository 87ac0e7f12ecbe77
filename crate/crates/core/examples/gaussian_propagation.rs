//! Learns a Gaussian network on a synthetic grid, fits it, and propagates a
//! warm anomaly at one point to the rest of the grid.

use std::sync::Arc;

use bnarena::climate::{anomaly_dataset, lattice_grid, lattice_series, propagate_report, parse_evidence};
use bnarena::criteria::{Criterion, CriterionKind};
use bnarena::learn::{learn, LearnOptions, LearnerKind};
use bnarena::model::fit_parameters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = lattice_grid(4, 5, 10.0)?;
    let raw = lattice_series(&grid, 4, 5, 40, 0.22, 2)?;
    let data = Arc::new(anomaly_dataset(&grid, &grid.ids(), &raw)?);

    let crit = Criterion::new(data.clone(), CriterionKind::BicGamma(0.5))?;
    let dag = learn(LearnerKind::Tabu, &crit, &LearnOptions::default())?.graph.dag().expect("score learners return a DAG");
    let net = fit_parameters(&dag, &data)?;
    println!("{} arcs", net.n_arcs());

    let rows = propagate_report(&net, &parse_evidence("X8=2")?, Some(&grid))?;
    println!("{:>4} {:>6} {:>6} {:>8} {:>8}", "node", "lat", "lon", "shift", "var");
    for r in rows {
        println!(
            "{:>4} {:>6.1} {:>6.1} {:>8.3} {:>8.3}",
            r.node,
            r.lat.unwrap_or(f64::NAN),
            r.lon.unwrap_or(f64::NAN),
            r.mean_shift,
            r.variance
        );
    }
    Ok(())
}
