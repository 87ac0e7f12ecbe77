//! A small benchmark: two reference networks, three sample sizes, three
//! learners, results written as CSV and summarised by quadrant.

use std::path::Path;

use bnarena::bench::{records_to_csv, run_benchmark, summarise, summary_table, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("networks");
    let cfg = BenchConfig::from_json(&format!(
        r#"{{
            "networks": ["{}", "{}"],
            "ratios": [0.5, 2, 10],
            "replicates": 3,
            "learners": ["pc-stable", "hc", "tabu"],
            "criteria": ["bic"],
            "seed": 42
        }}"#,
        dir.join("vee5.bn").display(),
        dir.join("gsix.bn").display()
    ))?;
    let records = run_benchmark(&cfg)?;
    let csv = records_to_csv(&records)?;
    println!("{}", csv.lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("... {} runs\n", records.len());
    print!("{}", summary_table(&summarise(&records, false)));
    Ok(())
}
