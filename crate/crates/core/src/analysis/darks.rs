use crate::protocols::{DetectorModel, FringeRecord};

/// Expected dark counts over `trials` gates, rounded to whole counts.
pub fn expected_darks(trials: u64, det: &DetectorModel) -> u64 {
    (trials as f64 * det.dark_prob_per_gate).round() as u64
}

/// Removes the expected dark counts from the monitored port, overall and per
/// context, flooring at zero. Trials are untouched.
pub fn subtract_darks(record: &FringeRecord, det: &DetectorModel) -> FringeRecord {
    let mut out = record.clone();
    if det.dark_prob_per_gate == 0.0 {
        return out;
    }
    let mut underflow = false;
    let mut remove = |counts: &mut u64, trials: u64| {
        let darks = expected_darks(trials, det);
        underflow |= darks > *counts;
        *counts = counts.saturating_sub(darks);
    };
    remove(&mut out.counts_port0, record.trials);
    for ctx in &mut out.contexts {
        let trials = ctx.trials;
        remove(&mut ctx.counts_port0, trials);
    }
    out.darks_subtracted = true;
    out.subtraction_underflow = underflow;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::PhaseProtocol;

    fn record(counts: u64, trials: u64) -> FringeRecord {
        let mut r = FringeRecord::empty(0.0, PhaseProtocol::RandomPerPhoton, 0, 0);
        r.counts_port0 = counts;
        r.trials = trials;
        r
    }

    #[test]
    fn zero_dark_rate_is_identity() {
        let r = record(100, 1000);
        assert_eq!(subtract_darks(&r, &DetectorModel::with(0.5, 0.0)), r);
    }

    #[test]
    fn removes_expected_darks() {
        let out = subtract_darks(&record(100, 1000), &DetectorModel::with(1.0, 0.05));
        assert_eq!(out.counts_port0, 50);
        assert_eq!(out.trials, 1000);
        assert!(out.darks_subtracted);
        assert!(!out.subtraction_underflow);
    }

    #[test]
    fn floors_at_zero() {
        let out = subtract_darks(&record(10, 400), &DetectorModel::with(1.0, 0.05));
        assert_eq!(out.counts_port0, 0);
        assert!(out.subtraction_underflow);
    }

    #[test]
    fn contexts_are_corrected_too() {
        let mut r = record(100, 1000);
        r.contexts[0].trials = 600;
        r.contexts[0].counts_port0 = 70;
        r.contexts[1].trials = 400;
        r.contexts[1].counts_port0 = 30;
        let out = subtract_darks(&r, &DetectorModel::with(1.0, 0.05));
        assert_eq!(out.contexts[0].counts_port0, 40);
        assert_eq!(out.contexts[1].counts_port0, 10);
    }
}
