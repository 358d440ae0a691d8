//! Switching x every photon against every ten photons shifts the fringe
//! phase of each x context.
//!
//! cargo run --release --example switch_rate [alpha]

use ebcm::analysis::switch_rate_shifts;
use ebcm::protocols::run_switch_rate_comparison;
use ebcm::RunConfig;

fn main() -> ebcm::Result<()> {
    let alpha = std::env::args()
        .nth(1)
        .map_or(0.99, |a| a.parse().expect("alpha"));
    let config = RunConfig {
        alpha,
        ..RunConfig::default()
    };
    let (fast, slow) = run_switch_rate_comparison(&config)?;
    println!("alpha = {alpha}, block length {}", config.switch_block);
    for s in switch_rate_shifts(&fast, &slow)? {
        println!(
            "{}: per-photon {:+.4}  per-{} {:+.4}  shift {:+.4} +- {:.4} rad",
            s.context,
            s.fast.phase_offset,
            config.switch_block,
            s.slow.phase_offset,
            s.shift,
            s.sigma
        );
    }
    Ok(())
}
