//! Synthetic gridded temperatures: writes the two input CSVs, reads them back
//! as anomalies, and sweeps BIC_γ across learners.

use bnarena::climate::{
    gamma_sweep, ingest_grid, lattice_grid, lattice_series, parameter_range, write_series, write_sweep, SweepConfig,
};
use bnarena::learn::LearnerKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let coords = dir.path().join("coords.csv");
    let series = dir.path().join("series.csv");

    let grid = lattice_grid(6, 6, 15.0)?;
    grid.write_csv(std::fs::File::create(&coords)?)?;
    let raw = lattice_series(&grid, 6, 6, 30, 0.2, 9)?;
    write_series(&grid.ids(), &raw, std::fs::File::create(&series)?)?;

    let (data, grid) = ingest_grid(&coords, &series)?;
    println!("{} grid points, {} months", data.n_vars(), data.n_rows());

    let cfg = SweepConfig {
        gammas: vec![0.0, 0.5, 1.0, 5.0, 20.0],
        learners: vec![LearnerKind::PcStable, LearnerKind::HillClimbing, LearnerKind::Tabu],
        permutations: 2,
        seed: 1,
        threshold_km: 2500.0,
        ..Default::default()
    };
    let records = gamma_sweep(&data, &grid, &cfg)?;
    write_sweep(&records, std::io::stdout().lock())?;
    for l in &cfg.learners {
        println!("{} valid for gamma in {:?}", l.key(), parameter_range(&records, l.key()));
    }
    Ok(())
}
