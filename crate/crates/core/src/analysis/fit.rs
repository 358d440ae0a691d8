//! Weighted nonlinear least-squares fit of `A (1 + V cos(phi0 + phase))`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::protocols::{FringeRecord, XValue};

/// Gradient norm at which the iteration stops.
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
/// Minimum distinct phase points a fit accepts.
pub const MIN_POINTS: usize = 6;

/// Counts observed at one phase point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringePoint {
    pub phi0: f64,
    pub counts: f64,
}

/// Which count a fringe is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// All monitored-port counts.
    Port0,
    /// Monitored-port counts of trials taken with one switch setting.
    Context(XValue),
}

/// Sums the selected counts of `records` per phase point, keeping the order in
/// which phase points first appear.
pub fn fringe_points(records: &[FringeRecord], observable: Observable) -> Vec<FringePoint> {
    let mut points: Vec<FringePoint> = Vec::new();
    for r in records {
        let counts = match observable {
            Observable::Port0 => r.counts_port0,
            Observable::Context(x) => r.context(x).counts_port0,
        } as f64;
        match points.iter_mut().find(|p| p.phi0 == r.phi0) {
            Some(p) => p.counts += counts,
            None => points.push(FringePoint {
                phi0: r.phi0,
                counts,
            }),
        }
    }
    points
}

/// Trials behind each point of [`fringe_points`], in the same order.
pub fn fringe_trials(records: &[FringeRecord], observable: Observable) -> Vec<f64> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for r in records {
        let trials = match observable {
            Observable::Port0 => r.trials,
            Observable::Context(x) => r.context(x).trials,
        } as f64;
        match out.iter_mut().find(|(phi, _)| *phi == r.phi0) {
            Some((_, t)) => *t += trials,
            None => out.push((r.phi0, trials)),
        }
    }
    out.into_iter().map(|(_, t)| t).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub amplitude: f64,
    pub visibility: f64,
    /// Wrapped into `(-pi, pi]`.
    pub phase_offset: f64,
    /// 1-sigma uncertainties of (amplitude, visibility, phase_offset).
    pub uncertainties: [f64; 3],
    /// Weighted sum of squared residuals at the solution.
    pub residual_sum: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
    /// False when the fringe is too flat for the phase to mean anything.
    pub phase_identifiable: bool,
    /// Visibility above one by more than three sigma.
    pub visibility_excess: bool,
}

impl FitResult {
    pub fn sigma_amplitude(&self) -> f64 {
        self.uncertainties[0]
    }

    pub fn sigma_visibility(&self) -> f64 {
        self.uncertainties[1]
    }

    pub fn sigma_phase(&self) -> f64 {
        self.uncertainties[2]
    }

    pub fn eval(&self, phi0: f64) -> f64 {
        model(&[self.amplitude, self.visibility, self.phase_offset], phi0)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

fn model(p: &[f64; 3], phi: f64) -> f64 {
    p[0] * (1.0 + p[1] * (phi + p[2]).cos())
}

/// Fits the monitored-port fringe of `records` (all sets at a phase point
/// are summed).
pub fn fit_fringe(records: &[FringeRecord]) -> Result<FitResult> {
    fit_points(&fringe_points(records, Observable::Port0))
}

/// Checks the phase-coverage precondition: at least [`MIN_POINTS`] distinct
/// phases whose circular span is at least pi.
pub fn check_coverage(phases: &[f64]) -> Result<()> {
    let mut wrapped: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    wrapped.sort_by(f64::total_cmp);
    wrapped.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if wrapped.len() < MIN_POINTS {
        return Err(Error::FitPrecondition(format!(
            "{} distinct phase points, need at least {MIN_POINTS}",
            wrapped.len()
        )));
    }
    let largest_gap = wrapped
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(
            wrapped[0] + TAU - wrapped[wrapped.len() - 1],
        ))
        .fold(0.0, f64::max);
    let span = TAU - largest_gap;
    if span < PI - 1e-12 {
        return Err(Error::FitPrecondition(format!(
            "phase points span {span:.4} rad, need at least pi"
        )));
    }
    Ok(())
}

struct Problem<'a> {
    points: &'a [FringePoint],
    sigma: Vec<f64>,
}

impl Problem<'_> {
    fn cost(&self, p: &[f64; 3]) -> f64 {
        self.points
            .iter()
            .zip(&self.sigma)
            .map(|(pt, s)| ((pt.counts - model(p, pt.phi0)) / s).powi(2))
            .sum()
    }

    /// Normal matrix `J^T J` and gradient `J^T r` of the weighted residuals.
    fn normal_equations(&self, p: &[f64; 3]) -> (Matrix3<f64>, Vector3<f64>) {
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for (pt, s) in self.points.iter().zip(&self.sigma) {
            let (sin, cos) = (pt.phi0 + p[2]).sin_cos();
            let j = Vector3::new(1.0 + p[1] * cos, p[0] * cos, -p[0] * p[1] * sin) / *s;
            let r = (pt.counts - model(p, pt.phi0)) / s;
            h += j * j.transpose();
            g += j * r;
        }
        (h, g)
    }
}

/// Levenberg-Marquardt fit with Poisson weights `sqrt(max(counts, 1))`,
/// started from the first Fourier component of the data.
///
/// Non-convergence is reported through `converged = false` with the last
/// iterate; only a coverage violation is an error.
pub fn fit_points(points: &[FringePoint]) -> Result<FitResult> {
    let phases: Vec<f64> = points.iter().map(|p| p.phi0).collect();
    check_coverage(&phases)?;
    let problem = Problem {
        points,
        sigma: points.iter().map(|p| p.counts.max(1.0).sqrt()).collect(),
    };

    let mut p = fourier_guess(points);
    let mut cost = problem.cost(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (h, g) = problem.normal_equations(&p);
        if g.norm() < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        let diag_floor = 1e-12 * h.diagonal().max().max(f64::MIN_POSITIVE);
        let mut improved = false;
        let mut stalled = false;
        for _ in 0..40 {
            let mut damped = h;
            for i in 0..3 {
                damped[(i, i)] += lambda * h[(i, i)].max(diag_floor);
            }
            let Some(step) = damped.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let trial_cost = problem.cost(&trial);
            if trial_cost < cost {
                p = trial;
                cost = trial_cost;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            let scale = p.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if step.norm() <= 1e-12 * scale {
                // at the rounding floor of the cost function
                stalled = true;
                break;
            }
            lambda *= 10.0;
        }
        if stalled {
            converged = true;
            break;
        }
        if !improved {
            break;
        }
    }

    // canonical form: V >= 0, phase in (-pi, pi]
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] += PI;
    }
    p[2] = wrap_phase(p[2]);

    let (h, _) = problem.normal_equations(&p);
    let uncertainties = uncertainties(&h);
    let sigma_v = uncertainties[1];
    Ok(FitResult {
        amplitude: p[0],
        visibility: p[1],
        phase_offset: p[2],
        uncertainties,
        residual_sum: cost,
        n_points: points.len(),
        iterations,
        converged,
        phase_identifiable: uncertainties[2].is_finite() && p[1] > 2.0 * sigma_v,
        visibility_excess: p[1] > 1.0 + 3.0 * sigma_v,
    })
}

fn fourier_guess(points: &[FringePoint]) -> [f64; 3] {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.counts).sum::<f64>() / n;
    let c = 2.0 / n * points.iter().map(|p| p.counts * p.phi0.cos()).sum::<f64>();
    let s = 2.0 / n * points.iter().map(|p| p.counts * p.phi0.sin()).sum::<f64>();
    if mean <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    [mean, c.hypot(s) / mean, (-s).atan2(c)]
}

/// Square roots of the diagonal of `(J^T J)^-1`; the phase is reported as
/// infinitely uncertain when its column is degenerate.
fn uncertainties(h: &Matrix3<f64>) -> [f64; 3] {
    let relative = h[(2, 2)] / h.diagonal().max().max(f64::MIN_POSITIVE);
    if relative > 1e-14 {
        if let Some(chol) = h.cholesky() {
            let cov = chol.inverse();
            return [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()];
        }
    }
    let h2 = Matrix2::new(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    match h2.cholesky() {
        Some(chol) => {
            let cov = chol.inverse();
            [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), f64::INFINITY]
        }
        None => [f64::INFINITY; 3],
    }
}
