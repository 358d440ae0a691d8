//! The full acquisition schedule on one persistent device, then a fit of
//! every protocol's fringe.
//!
//! cargo run --release --example acquisition_sweep

use ebcm::analysis::{fit_fringe, fit_points, fringe_points, Observable};
use ebcm::protocols::run_sweep;
use ebcm::{FringeRecord, RunConfig, XValue};

fn main() -> ebcm::Result<()> {
    let config = RunConfig::default();
    let records = run_sweep(&config)?;
    println!("{} records, alpha = {}", records.len(), config.alpha);

    for protocol in &config.protocols {
        let subset: Vec<FringeRecord> = records
            .iter()
            .filter(|r| r.protocol == *protocol)
            .cloned()
            .collect();
        let fit = fit_fringe(&subset)?;
        println!(
            "{protocol:>10}: V = {:.4} +- {:.4}, phase = {:+.4} +- {:.4}",
            fit.visibility,
            fit.sigma_visibility(),
            fit.phase_offset,
            fit.sigma_phase()
        );
        if protocol.is_random() {
            for x in XValue::BOTH {
                let f = fit_points(&fringe_points(&subset, Observable::Context(x)))?;
                println!(
                    "{:>14}: V = {:.4}, phase = {:+.4}",
                    x.to_string(),
                    f.visibility,
                    f.phase_offset
                );
            }
        }
    }
    Ok(())
}
