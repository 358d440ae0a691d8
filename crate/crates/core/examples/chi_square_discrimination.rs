//! QM-simulated reference data tested against EBCM predictions over a range
//! of memory parameters, and against QM itself.
//!
//! cargo run --release --example chi_square_discrimination

use ebcm::analysis::alpha_scan;
use ebcm::qm::QmReference;
use ebcm::RunConfig;

fn main() -> ebcm::Result<()> {
    let config = RunConfig::default();
    let reference = QmReference {
        phi0_grid: config.phi0_grid.values(),
        protocols: config.protocols.clone(),
        photons_per_point: config.photons_per_set,
        beta: config.beta,
        detector: config.detector,
        master_seed: config.master_seed,
    }
    .simulate(0);

    let scan = alpha_scan(&config, &config.alpha_grid, &reference)?;
    println!(
        "{:>10} {:>6} {:>10} {:>4} {:>10}",
        "model", "ctx", "chi2", "dof", "chi2/dof"
    );
    for row in &scan.rows {
        println!(
            "{:>10} {:>6} {:10.2} {:4} {:10.3}",
            row.report.model.to_string(),
            row.context.to_string(),
            row.report.chi2,
            row.report.dof,
            row.report.reduced_chi2
        );
    }
    Ok(())
}
