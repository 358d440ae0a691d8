//! Modulator crosstalk compresses the fringe period but does not rescue the
//! memory model.
//!
//! cargo run --release --example crosstalk

use ebcm::analysis::alpha_scan;
use ebcm::qm::{QmFringeModel, QmReference};
use ebcm::{DetectorModel, PhaseProtocol, RunConfig, XValue};

fn main() -> ebcm::Result<()> {
    for beta in [0.0, 0.2] {
        let m = QmFringeModel::new(
            PhaseProtocol::FixedX(XValue::Plus),
            beta,
            &DetectorModel::default(),
        );
        println!(
            "beta = {beta}: fringe period {:.4} rad",
            std::f64::consts::TAU / m.frequency
        );

        let config = RunConfig {
            beta,
            alpha_grid: vec![0.9, 0.99],
            ..RunConfig::default()
        };
        let reference = QmReference {
            phi0_grid: config.phi0_grid.values(),
            protocols: config.protocols.clone(),
            photons_per_point: config.photons_per_set,
            beta,
            detector: config.detector,
            master_seed: config.master_seed,
        }
        .simulate(0);
        for row in alpha_scan(&config, &config.alpha_grid, &reference)?.rows {
            println!(
                "  {:>16} {}: chi2/dof = {:.2}",
                row.report.model.to_string(),
                row.context,
                row.report.reduced_chi2
            );
        }
    }
    Ok(())
}
