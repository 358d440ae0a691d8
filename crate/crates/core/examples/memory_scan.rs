//! Per-photon random switching: how far the fringe falls from the quantum
//! mixture as the memory parameter changes.
//!
//! cargo run --release --example memory_scan

use ebcm::analysis::{deviation_steps, memory_deviation_scan};
use ebcm::RunConfig;

fn main() -> ebcm::Result<()> {
    let config = RunConfig::default();
    let points = memory_deviation_scan(&config, &config.alpha_grid)?;

    println!(
        "{:>7} {:>10} {:>10} {:>8} {:>8}",
        "alpha", "max dev", "jk sigma", "V", "phase"
    );
    for p in &points {
        println!(
            "{:7.3} {:10.5} {:10.5} {:8.4} {:8.4}",
            p.alpha, p.deviation, p.jackknife_sigma, p.fit.visibility, p.fit.phase_offset
        );
    }
    for s in deviation_steps(&points, 2.0) {
        println!(
            "{} -> {}: drop {:+.5} +- {:.5} ({:?})",
            s.from_alpha, s.to_alpha, s.drop, s.sigma, s.trend
        );
    }
    Ok(())
}
