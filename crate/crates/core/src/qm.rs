//! Closed-form quantum-mechanical predictions, the null model for every
//! protocol.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::protocols::{
    ContextCounts, DetectorModel, FringeRecord, PhaseProtocol, SourceModel, XValue,
};
use crate::seeding::{stream, CellKey, Stream, SLOT_REFERENCE};

/// Probability of exit port 0 for net arm difference `delta_phi`.
pub fn qm_prob(delta_phi: f64) -> f64 {
    0.5 * (1.0 + delta_phi.cos())
}

/// Port-0 probability for a trial taken with switch setting `x`.
pub fn qm_context_prob(phi0: f64, x: XValue, beta: f64) -> f64 {
    qm_prob((1.0 + beta) * (phi0 - x.phi1()))
}

/// `P(phi0) = A (1 + V cos(frequency * phi0 + phase_offset))`: the
/// probability of a count on port 0 per heralded trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QmFringeModel {
    pub amplitude: f64,
    pub visibility: f64,
    pub phase_offset: f64,
    /// `1 + beta`; the modulator crosstalk compresses the fringe period.
    pub frequency: f64,
}

impl QmFringeModel {
    /// Fringe of `protocol` seen through `detector`. Random protocols give
    /// the equal mixture of the two fixed-`x` fringes whatever their switching
    /// rate. Efficiency scales the fringe; dark counts add a flat offset.
    pub fn new(protocol: PhaseProtocol, beta: f64, detector: &DetectorModel) -> Self {
        let f = 1.0 + beta;
        let phasor = |x: XValue| Complex64::from_polar(1.0, -f * x.phi1());
        let m = match protocol {
            PhaseProtocol::FixedX(x) => phasor(x),
            PhaseProtocol::RandomPerPhoton | PhaseProtocol::RandomPerN(_) => {
                0.5 * (phasor(XValue::Minus) + phasor(XValue::Plus))
            }
        };
        let half = 0.5 * detector.efficiency;
        let amplitude = half + detector.dark_prob_per_gate;
        Self {
            amplitude,
            visibility: if amplitude > 0.0 {
                half * m.norm() / amplitude
            } else {
                0.0
            },
            phase_offset: m.arg(),
            frequency: f,
        }
    }

    pub fn eval(&self, phi0: f64) -> f64 {
        self.amplitude * (1.0 + self.visibility * (self.frequency * phi0 + self.phase_offset).cos())
    }
}

/// A QM model evaluated on a phase grid.
#[derive(Clone, Debug, PartialEq)]
pub struct QmFringe {
    pub model: QmFringeModel,
    pub phi0: Vec<f64>,
    pub prob: Vec<f64>,
}

impl QmFringe {
    /// Expected port-0 counts given the number of trials at each point.
    pub fn expected_counts(&self, trials: &[f64]) -> Vec<f64> {
        self.prob.iter().zip(trials).map(|(p, n)| p * n).collect()
    }
}

/// QM fringe of `protocol` on `phi0_grid`. Background photons are never
/// counted, so `source` does not enter.
pub fn qm_fringe(
    phi0_grid: &[f64],
    protocol: PhaseProtocol,
    beta: f64,
    _source: &SourceModel,
    detector: &DetectorModel,
) -> QmFringe {
    let model = QmFringeModel::new(protocol, beta, detector);
    QmFringe {
        model,
        phi0: phi0_grid.to_vec(),
        prob: phi0_grid.iter().map(|&p| model.eval(p)).collect(),
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as u64
}

/// Settings for QM-simulated reference data, standing in for measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct QmReference {
    pub phi0_grid: Vec<f64>,
    pub protocols: Vec<PhaseProtocol>,
    pub photons_per_point: u64,
    pub beta: f64,
    pub detector: DetectorModel,
    pub master_seed: u64,
}

impl QmReference {
    /// One record per (phase point, protocol), with Poisson-distributed
    /// counts around the QM expectation. Random protocols split their trials
    /// between the two `x` values binomially. `replica` selects an
    /// independent data set.
    pub fn simulate(&self, replica: u32) -> Vec<FringeRecord> {
        let mut out = Vec::with_capacity(self.phi0_grid.len() * self.protocols.len());
        let det = &self.detector;
        for &phi0 in &self.phi0_grid {
            for (slot, &protocol) in self.protocols.iter().enumerate() {
                let seed = CellKey::new(phi0, SLOT_REFERENCE + slot as u32, replica)
                    .sub_seed(self.master_seed);
                let mut rng = stream(seed, Stream::Routing);
                let n = self.photons_per_point;
                let split = match protocol {
                    PhaseProtocol::FixedX(XValue::Minus) => [n, 0],
                    PhaseProtocol::FixedX(XValue::Plus) => [0, n],
                    _ => {
                        let minus = Binomial::new(n, 0.5)
                            .expect("valid binomial")
                            .sample(&mut rng);
                        [minus, n - minus]
                    }
                };
                let mut rec = FringeRecord::empty(phi0, protocol, replica, seed);
                for x in XValue::BOTH {
                    let trials = split[x.index()];
                    let p = qm_context_prob(phi0, x, self.beta);
                    let t = trials as f64;
                    let photons0 = poisson(t * det.efficiency * p, &mut rng);
                    let photons1 = poisson(t * det.efficiency * (1.0 - p), &mut rng);
                    let darks = poisson(t * det.dark_prob_per_gate, &mut rng);
                    rec.contexts[x.index()] = ContextCounts {
                        trials,
                        counts_port0: photons0 + darks,
                        darks,
                    };
                    rec.trials += trials;
                    rec.counts_port0 += photons0 + darks;
                    rec.counts_port1 += photons1;
                    rec.darks_recorded += darks;
                }
                out.push(rec);
            }
        }
        out
    }
}
