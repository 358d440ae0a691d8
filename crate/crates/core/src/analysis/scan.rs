//! Model-against-data comparisons built on Monte Carlo EBCM predictions.

use serde::Serialize;

use super::chi2::{chi2_reduced, ChiSquareReport, ModelTag};
use super::fit::{fit_points, wrap_phase, FitResult, FringePoint, Observable};
use super::fit::{fringe_points, fringe_trials};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::protocols::{
    Cell, DetectorModel, ExpectedPort0, FringeRecord, PhaseProtocol, Simulation, XValue,
};
use crate::qm::{qm_context_prob, QmFringeModel};
use crate::seeding::SLOT_PREDICTION;

/// Difference of two fitted phases, `a - b` wrapped into `(-pi, pi]`, with
/// the uncertainties added in quadrature.
pub fn phase_shift_between(a: &FitResult, b: &FitResult) -> Result<(f64, f64)> {
    for fit in [a, b] {
        if !fit.converged {
            return Err(Error::FitFailed(format!(
                "phase offset {} after {} iterations",
                fit.phase_offset, fit.iterations
            )));
        }
    }
    let shift = wrap_phase(a.phase_offset - b.phase_offset);
    Ok((shift, a.sigma_phase().hypot(b.sigma_phase())))
}

/// Warm-up long enough for a beamsplitter with memory `alpha` to forget its
/// initial state: twenty memory lengths.
pub fn steady_state_burn_in(alpha: f64) -> u64 {
    if alpha >= 1.0 {
        0
    } else {
        (20.0 / (1.0 - alpha)).ceil() as u64
    }
}

/// Replica-averaged EBCM prediction on a phase grid.
///
/// Every replica is a fresh device run to steady state before counting. The
/// replica seeds do not depend on `alpha`, so predictions at different memory
/// parameters share their random numbers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EbcmPrediction {
    pub alpha: f64,
    pub protocol: PhaseProtocol,
    pub burn_in: u64,
    pub phi0: Vec<f64>,
    /// Per phase point, per replica.
    #[serde(skip)]
    pub replicas: Vec<Vec<ExpectedPort0>>,
    /// Sub-seed of each replica, per phase point.
    pub seeds: Vec<Vec<u64>>,
}

impl EbcmPrediction {
    pub fn n_replicas(&self) -> usize {
        self.replicas.first().map_or(0, Vec::len)
    }

    fn pooled(&self, skip: Option<usize>, pick: impl Fn(&ExpectedPort0) -> (f64, f64)) -> Vec<f64> {
        self.replicas
            .iter()
            .map(|reps| {
                let (p, n) = reps
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| Some(*j) != skip)
                    .map(|(_, e)| pick(e))
                    .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
                if n > 0.0 {
                    p / n
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Probability of port 0 per trial taken with switch setting `x`.
    pub fn context_prob(&self, x: XValue) -> Vec<f64> {
        let i = x.index();
        self.pooled(None, |e| (e.prob_sum[i], e.trials[i] as f64))
    }

    /// Probability of port 0 per trial, both settings pooled.
    pub fn total_prob(&self) -> Vec<f64> {
        self.pooled(None, |e| (e.total_prob_sum(), e.total_trials() as f64))
    }

    fn total_points(&self, skip: Option<usize>) -> Vec<FringePoint> {
        self.phi0
            .iter()
            .zip(&self.replicas)
            .map(|(&phi0, reps)| FringePoint {
                phi0,
                counts: reps
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| Some(*j) != skip)
                    .map(|(_, e)| e.total_prob_sum())
                    .sum(),
            })
            .collect()
    }

    fn total_trials(&self, skip: Option<usize>) -> Vec<f64> {
        self.replicas
            .iter()
            .map(|reps| {
                reps.iter()
                    .enumerate()
                    .filter(|(j, _)| Some(*j) != skip)
                    .map(|(_, e)| e.total_trials() as f64)
                    .sum()
            })
            .collect()
    }
}

/// Runs `config.replicas` fresh devices per phase point under `protocol`
/// at memory parameter `alpha`, `config.photons_per_set` photons each.
pub fn predict_ebcm(
    config: &RunConfig,
    alpha: f64,
    protocol: PhaseProtocol,
) -> Result<EbcmPrediction> {
    let burn_in = config.burn_in.max(steady_state_burn_in(alpha));
    let sim = Simulation {
        alpha,
        persistence: false,
        burn_in,
        ..Simulation::from_config(config)
    };
    let phi0 = config.phi0_grid.values();
    let cells: Vec<Cell> = phi0
        .iter()
        .flat_map(|&phi0| {
            (0..config.replicas).map(move |index| Cell {
                phi0,
                protocol,
                slot: SLOT_PREDICTION,
                index,
                photons: config.photons_per_set,
            })
        })
        .collect();
    let outcomes = sim.run(&cells)?;
    let r = config.replicas as usize;
    let replicas = outcomes
        .chunks(r)
        .map(|c| c.iter().map(|o| o.expected).collect())
        .collect();
    let seeds = outcomes
        .chunks(r)
        .map(|c| c.iter().map(|o| o.record.seed).collect())
        .collect();
    Ok(EbcmPrediction {
        alpha,
        protocol,
        burn_in,
        phi0,
        replicas,
        seeds,
    })
}

/// Observed context counts of the random-switching reference records.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextData {
    pub context: XValue,
    pub counts: Vec<f64>,
    pub trials: Vec<f64>,
}

/// Splits the random-protocol records by switch setting, aligned to `grid`.
pub fn reference_contexts(records: &[FringeRecord], grid: &[f64]) -> Result<Vec<ContextData>> {
    let random: Vec<FringeRecord> = records
        .iter()
        .filter(|r| r.protocol.is_random())
        .cloned()
        .collect();
    XValue::BOTH
        .iter()
        .map(|&x| {
            let obs = Observable::Context(x);
            let points = fringe_points(&random, obs);
            let trials = fringe_trials(&random, obs);
            let mut counts = Vec::with_capacity(grid.len());
            let mut aligned = Vec::with_capacity(grid.len());
            for &phi in grid {
                let i = points
                    .iter()
                    .position(|p| (p.phi0 - phi).abs() < 1e-12)
                    .ok_or(Error::Domain {
                        name: "reference phi0",
                        value: phi,
                        expected: "random-switching reference data at every grid point",
                    })?;
                counts.push(points[i].counts);
                aligned.push(trials[i]);
            }
            Ok(ContextData {
                context: x,
                counts,
                trials: aligned,
            })
        })
        .collect()
}

/// One chi-square comparison of a reference context against a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub context: XValue,
    pub report: ChiSquareReport,
}

impl ScanRow {
    pub fn alpha(&self) -> Option<f64> {
        match self.report.model {
            ModelTag::Ebcm { alpha } => Some(alpha),
            ModelTag::Qm => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaScan {
    /// EBCM rows, alpha-major, then the QM baseline rows.
    pub rows: Vec<ScanRow>,
    pub predictions: Vec<EbcmPrediction>,
}

impl AlphaScan {
    pub fn ebcm_rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.alpha().is_some())
    }

    pub fn qm_rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.alpha().is_none())
    }
}

/// The protocol whose contexts are compared: the first random one measured.
pub fn scan_protocol(config: &RunConfig) -> PhaseProtocol {
    config
        .protocols
        .iter()
        .copied()
        .find(|p| p.is_random())
        .unwrap_or(PhaseProtocol::RandomPerPhoton)
}

/// Reduced chi-square of the reference contexts against EBCM predictions at
/// each alpha and against QM. Expected counts are fully specified, so no
/// parameters are fitted (`n_free = 0`).
pub fn alpha_scan(
    config: &RunConfig,
    alpha_grid: &[f64],
    reference: &[FringeRecord],
) -> Result<AlphaScan> {
    if alpha_grid.is_empty() {
        return Err(Error::Domain {
            name: "alpha_grid.len",
            value: 0.0,
            expected: "at least one alpha",
        });
    }
    if let Some(&a) = alpha_grid.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::Domain {
            name: "alpha",
            value: a,
            expected: "(0, 1]",
        });
    }
    let grid = config.phi0_grid.values();
    let data = reference_contexts(reference, &grid)?;
    let det = config.detector;
    let protocol = scan_protocol(config);

    let mut rows = Vec::new();
    let mut predictions = Vec::new();
    for &alpha in alpha_grid {
        let prediction = predict_ebcm(config, alpha, protocol)?;
        for ctx in &data {
            let expected =
                expected_counts(&det, &ctx.trials, &prediction.context_prob(ctx.context));
            rows.push(ScanRow {
                context: ctx.context,
                report: chi2_reduced(&ctx.counts, &expected, 0, ModelTag::Ebcm { alpha })?,
            });
        }
        predictions.push(prediction);
    }
    for ctx in &data {
        rows.push(ScanRow {
            context: ctx.context,
            report: qm_context_chi2(ctx, &grid, config.beta, &det)?,
        });
    }
    Ok(AlphaScan { rows, predictions })
}

/// Reference context against the closed-form QM curve.
pub fn qm_context_chi2(
    ctx: &ContextData,
    grid: &[f64],
    beta: f64,
    det: &DetectorModel,
) -> Result<ChiSquareReport> {
    let prob: Vec<f64> = grid
        .iter()
        .map(|&phi| qm_context_prob(phi, ctx.context, beta))
        .collect();
    chi2_reduced(
        &ctx.counts,
        &expected_counts(det, &ctx.trials, &prob),
        0,
        ModelTag::Qm,
    )
}

fn expected_counts(det: &DetectorModel, trials: &[f64], prob: &[f64]) -> Vec<f64> {
    trials
        .iter()
        .zip(prob)
        .map(|(&n, &p)| det.expected_port0(n, p))
        .collect()
}

/// Largest gap between the fitted EBCM fringe and the QM fringe at one alpha.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationPoint {
    pub alpha: f64,
    pub deviation: f64,
    /// Leave-one-replica-out estimate of the deviation's standard error.
    pub jackknife_sigma: f64,
    pub leave_one_out: Vec<f64>,
    pub fit: FitResult,
}

fn max_deviation(
    points: &[FringePoint],
    trials: &[f64],
    qm: &QmFringeModel,
) -> Result<(f64, FitResult)> {
    let fit = fit_points(points)?;
    let dev = points
        .iter()
        .zip(trials)
        .map(|(p, &n)| (fit.eval(p.phi0) / n - qm.eval(p.phi0)).abs())
        .fold(0.0, f64::max);
    Ok((dev, fit))
}

fn jackknife_sigma(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if n < 2.0 {
        return f64::INFINITY;
    }
    let mean = samples.iter().sum::<f64>() / n;
    ((n - 1.0) / n * samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>()).sqrt()
}

/// How far the per-photon switching EBCM fringe departs from QM at each
/// alpha: fit the replica-averaged expected counts, then take the largest
/// absolute probability difference over the grid.
pub fn memory_deviation_scan(
    config: &RunConfig,
    alpha_grid: &[f64],
) -> Result<Vec<DeviationPoint>> {
    let qm = QmFringeModel::new(
        PhaseProtocol::RandomPerPhoton,
        config.beta,
        &DetectorModel::default(),
    );
    alpha_grid
        .iter()
        .map(|&alpha| {
            let pred = predict_ebcm(config, alpha, PhaseProtocol::RandomPerPhoton)?;
            let (deviation, fit) =
                max_deviation(&pred.total_points(None), &pred.total_trials(None), &qm)?;
            let leave_one_out = (0..pred.n_replicas())
                .map(|j| {
                    max_deviation(
                        &pred.total_points(Some(j)),
                        &pred.total_trials(Some(j)),
                        &qm,
                    )
                    .map(|(d, _)| d)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(DeviationPoint {
                alpha,
                deviation,
                jackknife_sigma: jackknife_sigma(&leave_one_out),
                leave_one_out,
                fit,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Decreasing,
    /// Within the tie threshold.
    Tie,
    Increasing,
}

/// Change of the deviation between consecutive alphas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationStep {
    pub from_alpha: f64,
    pub to_alpha: f64,
    /// `deviation(from) - deviation(to)`; positive when the deviation shrinks.
    pub drop: f64,
    /// Paired jackknife standard error of `drop`.
    pub sigma: f64,
    pub trend: Trend,
}

/// Classifies each consecutive pair; a drop within `z` paired standard
/// errors of zero is a tie.
pub fn deviation_steps(points: &[DeviationPoint], z: f64) -> Vec<DeviationStep> {
    points
        .windows(2)
        .map(|w| {
            let drop = w[0].deviation - w[1].deviation;
            let paired: Vec<f64> = w[0]
                .leave_one_out
                .iter()
                .zip(&w[1].leave_one_out)
                .map(|(a, b)| a - b)
                .collect();
            let sigma = jackknife_sigma(&paired);
            let trend = if drop.abs() <= z * sigma {
                Trend::Tie
            } else if drop > 0.0 {
                Trend::Decreasing
            } else {
                Trend::Increasing
            };
            DeviationStep {
                from_alpha: w[0].alpha,
                to_alpha: w[1].alpha,
                drop,
                sigma,
                trend,
            }
        })
        .collect()
}

/// Per-context phase shift between fast and slow switching.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextShift {
    pub context: XValue,
    pub fast: FitResult,
    pub slow: FitResult,
    /// `fast - slow`, wrapped.
    pub shift: f64,
    pub sigma: f64,
}

/// Fits both switching protocols in each `x` context and compares phases.
pub fn switch_rate_shifts(
    fast: &[FringeRecord],
    slow: &[FringeRecord],
) -> Result<Vec<ContextShift>> {
    XValue::BOTH
        .iter()
        .map(|&x| {
            let fit_fast = fit_points(&fringe_points(fast, Observable::Context(x)))?;
            let fit_slow = fit_points(&fringe_points(slow, Observable::Context(x)))?;
            let (shift, sigma) = phase_shift_between(&fit_fast, &fit_slow)?;
            Ok(ContextShift {
                context: x,
                fast: fit_fast,
                slow: fit_slow,
                shift,
                sigma,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PhiGrid;

    fn fit_with(offset: f64, sigma: f64) -> FitResult {
        FitResult {
            amplitude: 1.0,
            visibility: 1.0,
            phase_offset: offset,
            uncertainties: [0.0, 0.0, sigma],
            residual_sum: 0.0,
            n_points: 16,
            iterations: 3,
            converged: true,
            phase_identifiable: true,
            visibility_excess: false,
        }
    }

    #[test]
    fn shift_wraps_across_the_cut() {
        let (s, sigma) = phase_shift_between(&fit_with(0.1, 0.03), &fit_with(6.2, 0.04)).unwrap();
        let expect = 0.1 - (6.2 - std::f64::consts::TAU);
        assert!((s - expect).abs() < 1e-12);
        assert!((s - 0.1832).abs() < 1e-4);
        assert!((sigma - 0.05).abs() < 1e-12);
        let (back, _) = phase_shift_between(&fit_with(6.2, 0.04), &fit_with(0.1, 0.03)).unwrap();
        assert!((back + s).abs() < 1e-12);
        let (zero, _) = phase_shift_between(&fit_with(1.0, 0.1), &fit_with(1.0, 0.1)).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn failed_fit_propagates() {
        let mut bad = fit_with(0.0, 0.1);
        bad.converged = false;
        assert!(matches!(
            phase_shift_between(&bad, &fit_with(0.0, 0.1)),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn burn_in_scales_with_memory() {
        assert_eq!(steady_state_burn_in(0.5), 40);
        assert_eq!(steady_state_burn_in(0.99), 2000);
        assert_eq!(steady_state_burn_in(1.0), 0);
    }

    #[test]
    fn jackknife_of_constant_is_zero() {
        assert_eq!(jackknife_sigma(&[2.0; 5]), 0.0);
        // on leave-one-out means it reduces to the standard error of the mean
        let loo = [3.0, 8.0 / 3.0, 7.0 / 3.0, 2.0];
        let naive = (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((jackknife_sigma(&loo) - naive).abs() < 1e-12);
    }

    #[test]
    fn prediction_seeds_do_not_depend_on_alpha() {
        let cfg = RunConfig {
            phi0_grid: PhiGrid::uniform(3),
            photons_per_set: 50,
            replicas: 4,
            ..RunConfig::default()
        };
        let a = predict_ebcm(&cfg, 0.5, PhaseProtocol::RandomPerPhoton).unwrap();
        let b = predict_ebcm(&cfg, 0.9, PhaseProtocol::RandomPerPhoton).unwrap();
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(a.n_replicas(), 4);
        assert_eq!(a.burn_in, 40);
        // expected probabilities stay in [0, 1]
        assert!(a.total_prob().iter().all(|p| (0.0..=1.0).contains(p)));
        assert_ne!(a.total_prob(), b.total_prob());
    }

    #[test]
    fn empty_alpha_grid_is_rejected() {
        let cfg = RunConfig::default();
        assert!(matches!(
            alpha_scan(&cfg, &[], &[]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            alpha_scan(&cfg, &[1.5], &[]),
            Err(Error::Domain { name: "alpha", .. })
        ));
    }
}
