//! Fitting noisy fringes seen through a lossy detector with dark counts,
//! before and after subtracting the expected darks.
//!
//! cargo run --release --example fringe_fit

use ebcm::analysis::{fit_fringe, subtract_darks};
use ebcm::protocols::{DetectorModel, PhaseProtocol};
use ebcm::qm::QmReference;
use ebcm::{FringeRecord, XValue};

fn main() -> ebcm::Result<()> {
    let detector = DetectorModel::with(0.1, 0.01);
    let reference = QmReference {
        phi0_grid: (0..16)
            .map(|i| std::f64::consts::TAU * f64::from(i) / 16.0)
            .collect(),
        protocols: vec![
            PhaseProtocol::FixedX(XValue::Minus),
            PhaseProtocol::FixedX(XValue::Plus),
        ],
        photons_per_point: 50_000,
        beta: 0.0,
        detector,
        master_seed: 11,
    };
    let records = reference.simulate(0);

    for protocol in &reference.protocols {
        let raw: Vec<FringeRecord> = records
            .iter()
            .filter(|r| r.protocol == *protocol)
            .cloned()
            .collect();
        let clean: Vec<FringeRecord> = raw.iter().map(|r| subtract_darks(r, &detector)).collect();
        for (label, set) in [("raw", &raw), ("darks removed", &clean)] {
            let fit = fit_fringe(set)?;
            println!(
                "{protocol} {label:>14}: A = {:8.1}  V = {:.4} +- {:.4}  phase = {:+.4} +- {:.4}",
                fit.amplitude,
                fit.visibility,
                fit.sigma_visibility(),
                fit.phase_offset,
                fit.sigma_phase()
            );
        }
    }
    Ok(())
}
