//! Fixed arm phases: the learned device reproduces the cosine fringe.
//!
//! cargo run --release --example static_convergence

use std::f64::consts::TAU;

use ebcm::model::DlmRules;
use ebcm::protocols::static_fringe;
use ebcm::qm::qm_prob;

fn main() -> ebcm::Result<()> {
    let alpha = 0.99;
    let traversals = 1_000_000;
    let grid: Vec<f64> = (0..16).map(|i| TAU * f64::from(i) / 16.0).collect();
    let measured = static_fringe(alpha, DlmRules::default(), &grid, traversals, 7)?;

    println!("alpha = {alpha}, {traversals} messengers per point");
    println!("{:>8} {:>10} {:>10} {:>10}", "dphi", "P(0)", "qm", "diff");
    let mut worst: f64 = 0.0;
    for (dphi, p) in grid.iter().zip(&measured) {
        let q = qm_prob(*dphi);
        worst = worst.max((p - q).abs());
        println!("{dphi:8.4} {p:10.5} {q:10.5} {:+10.5}", p - q);
    }
    println!("largest |diff| = {worst:.5}");
    Ok(())
}
