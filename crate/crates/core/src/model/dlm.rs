//! The adaptive beamsplitter: a deterministic learning machine (DLM).
//!
//! Each beamsplitter keeps an estimate `x = (x0, x1)` of how often messengers
//! arrive on each input port and one stored phase vector `Y_k` per port. A
//! messenger arriving on port `k` moves `x` towards the unit vector of port
//! `k` by an exponential moving average with memory `alpha`, and writes its
//! phase into `Y_k`.
//!
//! Routing forms `z_k = sqrt(x_k) Y_k`, mixes them with the symmetric 50/50
//! beamsplitter matrix
//!
//! ```text
//! w0 = (z0 + i z1) / sqrt(2)
//! w1 = (i z0 + z1) / sqrt(2)
//! ```
//!
//! and sends the messenger out of port 0 with probability `|w0|^2`. Since
//! `x0 + x1 = 1` and the registers are unit vectors, `|w0|^2 + |w1|^2 = 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::messenger::{Messenger, Port};
use crate::error::{Error, Result};

/// How a phase register absorbs a newly arrived messenger.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegisterMode {
    /// `Y_k` is replaced by the arriving phase vector.
    #[default]
    Overwrite,
    /// Experimental: `Y_k <- normalize(alpha Y_k + (1 - alpha) m)`.
    Averaged,
}

/// Whether a beamsplitter routes a messenger before or after learning from it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearningOrder {
    /// Route with the state accumulated from earlier messengers, then learn.
    #[default]
    RouteThenLearn,
    /// Learn from the arriving messenger first, then route with the new state.
    LearnThenRoute,
}

/// Update and routing rules shared by both beamsplitters of a device.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DlmRules {
    pub order: LearningOrder,
    pub registers: RegisterMode,
}

/// Internal state of one adaptive beamsplitter.
#[derive(Clone, Debug, PartialEq)]
pub struct DlmState {
    alpha: f64,
    intensity: [f64; 2],
    registers: [Complex64; 2],
}

/// Outcome of routing one messenger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Routing {
    pub port: Port,
    /// Probability the messenger would have left through port 0.
    pub prob_port0: f64,
    pub message: Messenger,
}

impl DlmState {
    /// Fresh beamsplitter: `x = (1/2, 1/2)`, both registers `(1, 0)`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                expected: "0 <= alpha <= 1",
            });
        }
        Ok(Self {
            alpha,
            intensity: [0.5, 0.5],
            registers: [Complex64::new(1.0, 0.0); 2],
        })
    }

    /// Builds a state from explicit parts. Registers are normalized; the
    /// intensities must be non-negative and sum to one.
    pub fn from_parts(alpha: f64, intensity: [f64; 2], registers: [Complex64; 2]) -> Result<Self> {
        let mut state = Self::new(alpha)?;
        let sum = intensity[0] + intensity[1];
        if intensity.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                name: "intensity",
                value: sum,
                expected: "x0, x1 >= 0 and x0 + x1 = 1",
            });
        }
        for r in &registers {
            if r.norm().is_nan() || r.norm() <= 0.0 {
                return Err(Error::Domain {
                    name: "register",
                    value: r.norm(),
                    expected: "non-zero phase vector",
                });
            }
        }
        state.intensity = intensity;
        state.registers = registers.map(|r| r / r.norm());
        Ok(state)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn intensity(&self) -> [f64; 2] {
        self.intensity
    }

    pub fn registers(&self) -> [Complex64; 2] {
        self.registers
    }

    /// Learns from a messenger arriving on `msg.port`.
    pub fn update(&mut self, msg: &Messenger, mode: RegisterMode) {
        let k = msg.port.index();
        let a = self.alpha;
        self.intensity[k] = a * self.intensity[k] + (1.0 - a);
        self.intensity[1 - k] *= a;
        self.registers[k] = match mode {
            RegisterMode::Overwrite => msg.phase_vector(),
            RegisterMode::Averaged => {
                let v = a * self.registers[k] + (1.0 - a) * msg.phase_vector();
                let n = v.norm();
                if n > f64::MIN_POSITIVE {
                    v / n
                } else {
                    msg.phase_vector()
                }
            }
        };
    }

    /// Output amplitudes `(w0, w1)` for the current state.
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let z0 = self.intensity[0].sqrt() * self.registers[0];
        let z1 = self.intensity[1].sqrt() * self.registers[1];
        ((z0 + i * z1) * FRAC_1_SQRT_2, (i * z0 + z1) * FRAC_1_SQRT_2)
    }

    /// Probability of leaving through port 0.
    pub fn prob_port0(&self) -> f64 {
        let (w0, w1) = self.amplitudes();
        let (p0, p1) = (w0.norm_sqr(), w1.norm_sqr());
        debug_assert!(
            (p0 + p1 - 1.0).abs() < 1e-9,
            "probability not conserved: {p0} + {p1}"
        );
        p0 / (p0 + p1)
    }

    /// Picks the output port with the deviate `u` in `[0, 1)`: port 0 iff
    /// `u < p0`. The outgoing messenger carries the phase of the chosen
    /// amplitude.
    pub fn route(&self, u: f64) -> Routing {
        let (w0, w1) = self.amplitudes();
        let (n0, n1) = (w0.norm_sqr(), w1.norm_sqr());
        assert!(n0 + n1 > 0.0, "both output amplitudes vanished");
        let prob_port0 = n0 / (n0 + n1);
        let (port, w) = if u < prob_port0 {
            (Port::Zero, w0)
        } else {
            (Port::One, w1)
        };
        Routing {
            port,
            prob_port0,
            message: Messenger::from_vector(w, port),
        }
    }

    /// Processes one arrival according to `rules` and returns the routing.
    pub fn process(&mut self, msg: &Messenger, u: f64, rules: DlmRules) -> Routing {
        match rules.order {
            LearningOrder::RouteThenLearn => {
                let r = self.route(u);
                self.update(msg, rules.registers);
                r
            }
            LearningOrder::LearnThenRoute => {
                self.update(msg, rules.registers);
                self.route(u)
            }
        }
    }
}
