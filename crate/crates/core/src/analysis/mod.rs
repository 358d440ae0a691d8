//! Fringe fitting, dark-count correction and model comparison.

mod chi2;
mod darks;
mod fit;
mod scan;

pub use chi2::{chi2_reduced, ChiSquareReport, ModelTag};
pub use darks::{expected_darks, subtract_darks};
pub use fit::{
    check_coverage, fit_fringe, fit_points, fringe_points, fringe_trials, wrap_phase, FitResult,
    FringePoint, Observable, GRADIENT_TOLERANCE, MAX_ITERATIONS, MIN_POINTS,
};
pub use scan::{
    alpha_scan, deviation_steps, memory_deviation_scan, phase_shift_between, predict_ebcm,
    qm_context_chi2, reference_contexts, scan_protocol, steady_state_burn_in, switch_rate_shifts,
    AlphaScan, ContextData, ContextShift, DeviationPoint, DeviationStep, EbcmPrediction, ScanRow,
    Trend,
};
