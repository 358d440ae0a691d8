use rand::Rng;

use super::dlm::{DlmRules, DlmState};
use super::messenger::{Messenger, Port};
use crate::error::{Error, Result};

/// Largest modulator crosstalk fraction the device model accepts.
pub const MAX_CROSSTALK: f64 = 0.2;

/// Phases actually applied in arms A and B when the phi0 modulator (arm A) is
/// set to `phi0` and the phi1 modulator (arm B) to `phi1`, each leaking
/// `-beta` of its setting into the opposite arm.
pub fn effective_arm_phases(phi0: f64, phi1: f64, beta: f64) -> Result<(f64, f64)> {
    check_crosstalk(beta)?;
    Ok((phi0 - beta * phi1, phi1 - beta * phi0))
}

fn check_crosstalk(beta: f64) -> Result<()> {
    if !(0.0..=MAX_CROSSTALK).contains(&beta) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            expected: "0 <= beta <= 0.2",
        });
    }
    Ok(())
}

/// Result of one messenger crossing the whole interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traversal {
    pub port: Port,
    /// Probability of exit port 0 at the second beamsplitter, given its state.
    pub prob_port0: f64,
}

/// Two adaptive beamsplitters joined by two phase-shifting arms.
///
/// Wiring: BS1 output 0 feeds arm A, which enters BS2 on input 1; BS1
/// output 1 feeds arm B, which enters BS2 on input 0. With a learned BS1 this
/// gives `P(port 0) = (1 + cos(phase_a - phase_b)) / 2`.
///
/// The beamsplitters never see each other's state; only messengers carry
/// information between them.
#[derive(Clone, Debug, PartialEq)]
pub struct Interferometer {
    bs1: DlmState,
    bs2: DlmState,
    arm_phase_a: f64,
    arm_phase_b: f64,
    crosstalk_beta: f64,
    rules: DlmRules,
    traversals: u64,
}

impl Interferometer {
    pub fn new(alpha: f64, crosstalk_beta: f64, rules: DlmRules) -> Result<Self> {
        check_crosstalk(crosstalk_beta)?;
        Ok(Self {
            bs1: DlmState::new(alpha)?,
            bs2: DlmState::new(alpha)?,
            arm_phase_a: 0.0,
            arm_phase_b: 0.0,
            crosstalk_beta,
            rules,
            traversals: 0,
        })
    }

    pub fn bs1(&self) -> &DlmState {
        &self.bs1
    }

    pub fn bs2(&self) -> &DlmState {
        &self.bs2
    }

    pub fn rules(&self) -> DlmRules {
        self.rules
    }

    pub fn crosstalk(&self) -> f64 {
        self.crosstalk_beta
    }

    /// Number of messengers (counted or not) that have crossed the device.
    pub fn traversals(&self) -> u64 {
        self.traversals
    }

    pub fn arm_phases(&self) -> (f64, f64) {
        (self.arm_phase_a, self.arm_phase_b)
    }

    /// Sets the arm phases directly, bypassing the modulator model.
    pub fn set_arm_phases(&mut self, phase_a: f64, phase_b: f64) {
        self.arm_phase_a = phase_a;
        self.arm_phase_b = phase_b;
    }

    /// Drives the two modulators; crosstalk is applied.
    pub fn set_modulators(&mut self, phi0: f64, phi1: f64) {
        let beta = self.crosstalk_beta;
        self.arm_phase_a = phi0 - beta * phi1;
        self.arm_phase_b = phi1 - beta * phi0;
    }

    /// Sends one messenger through the device. Draws exactly two deviates
    /// from `rng`, one per beamsplitter, whatever the path taken.
    pub fn traverse<R: Rng + ?Sized>(&mut self, input: Port, rng: &mut R) -> Traversal {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        self.traverse_with(input, u1, u2)
    }

    /// As [`traverse`](Self::traverse) with explicit deviates.
    pub fn traverse_with(&mut self, input: Port, u1: f64, u2: f64) -> Traversal {
        let incoming = Messenger::from_angle(0.0, input);
        let first = self.bs1.process(&incoming, u1, self.rules);
        let (phase, bs2_input) = match first.port {
            Port::Zero => (self.arm_phase_a, Port::One),
            Port::One => (self.arm_phase_b, Port::Zero),
        };
        let in_arm = first.message.phase_shift(phase).on_port(bs2_input);
        let second = self.bs2.process(&in_arm, u2, self.rules);
        self.traversals += 1;
        Traversal {
            port: second.port,
            prob_port0: second.prob_port0,
        }
    }

    /// Returns both beamsplitters to their initial state. Arm phases are kept.
    pub fn reset(&mut self) {
        let alpha = self.bs1.alpha();
        self.bs1 = DlmState::new(alpha).expect("alpha validated at construction");
        self.bs2 = DlmState::new(alpha).expect("alpha validated at construction");
        self.traversals = 0;
    }
}
