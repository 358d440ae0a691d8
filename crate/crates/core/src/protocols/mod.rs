//! Data-acquisition procedures: phase schedules, source and detector
//! imperfections, and the full measurement sequence.

mod sweep;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Interferometer, Port};
use crate::seeding::CellStreams;

pub use sweep::{
    burn_in, run_sweep, run_switch_rate_comparison, schedule, static_fringe, Cell, Simulation,
};

/// Setting of the fast switch: `x = -1` gives `phi1 = 0`, `x = +1` gives
/// `phi1 = pi/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum XValue {
    Minus,
    Plus,
}

impl XValue {
    pub fn phi1(self) -> f64 {
        match self {
            XValue::Minus => 0.0,
            XValue::Plus => FRAC_PI_2,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            XValue::Minus => -1,
            XValue::Plus => 1,
        }
    }

    /// Index into per-context arrays: 0 for `x = -1`, 1 for `x = +1`.
    pub fn index(self) -> usize {
        match self {
            XValue::Minus => 0,
            XValue::Plus => 1,
        }
    }

    pub const BOTH: [XValue; 2] = [XValue::Minus, XValue::Plus];
}

impl fmt::Display for XValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XValue::Minus => f.write_str("x=-1"),
            XValue::Plus => f.write_str("x=+1"),
        }
    }
}

/// How `x` is chosen for each heralded photon.
///
/// Text form: `fixed:-1`, `fixed:+1`, `random`, `random-per:N`.
/// `random-per:1` parses to [`PhaseProtocol::RandomPerPhoton`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PhaseProtocol {
    FixedX(XValue),
    RandomPerPhoton,
    RandomPerN(u32),
}

impl PhaseProtocol {
    /// `RandomPerN(1)` collapses to `RandomPerPhoton`.
    pub fn canonical(self) -> Self {
        match self {
            PhaseProtocol::RandomPerN(1) => PhaseProtocol::RandomPerPhoton,
            p => p,
        }
    }

    pub fn is_random(self) -> bool {
        !matches!(self, PhaseProtocol::FixedX(_))
    }

    /// Acquisition order at each phase point: both fixed settings, then random.
    pub fn acquisition_order() -> Vec<PhaseProtocol> {
        vec![
            PhaseProtocol::FixedX(XValue::Minus),
            PhaseProtocol::FixedX(XValue::Plus),
            PhaseProtocol::RandomPerPhoton,
        ]
    }
}

impl fmt::Display for PhaseProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.canonical() {
            PhaseProtocol::FixedX(XValue::Minus) => f.write_str("fixed:-1"),
            PhaseProtocol::FixedX(XValue::Plus) => f.write_str("fixed:+1"),
            PhaseProtocol::RandomPerPhoton => f.write_str("random"),
            PhaseProtocol::RandomPerN(n) => write!(f, "random-per:{n}"),
        }
    }
}

impl FromStr for PhaseProtocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "fixed:-1" => Ok(PhaseProtocol::FixedX(XValue::Minus)),
            "fixed:+1" | "fixed:1" => Ok(PhaseProtocol::FixedX(XValue::Plus)),
            "random" => Ok(PhaseProtocol::RandomPerPhoton),
            other => {
                let n = other
                    .strip_prefix("random-per:")
                    .and_then(|n| n.parse::<u32>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| format!("unknown protocol `{other}`"))?;
                Ok(PhaseProtocol::RandomPerN(n).canonical())
            }
        }
    }
}

impl TryFrom<String> for PhaseProtocol {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PhaseProtocol> for String {
    fn from(p: PhaseProtocol) -> String {
        p.to_string()
    }
}

/// Produces the `x` sequence of one protocol.
#[derive(Clone, Debug)]
pub struct XSequencer {
    protocol: PhaseProtocol,
    current: Option<XValue>,
}

impl XSequencer {
    pub fn new(protocol: PhaseProtocol) -> Self {
        Self {
            protocol: protocol.canonical(),
            current: None,
        }
    }

    /// `x` for trial `trial_index`. Random protocols draw one fair coin per
    /// switching event; `RandomPerN(n)` switches when `trial_index % n == 0`.
    pub fn draw<R: Rng + ?Sized>(&mut self, trial_index: u64, rng: &mut R) -> XValue {
        let fresh = |rng: &mut R| {
            if rng.random::<f64>() < 0.5 {
                XValue::Minus
            } else {
                XValue::Plus
            }
        };
        let x = match self.protocol {
            PhaseProtocol::FixedX(x) => x,
            PhaseProtocol::RandomPerPhoton => fresh(rng),
            PhaseProtocol::RandomPerN(n) => match self.current {
                Some(x) if !trial_index.is_multiple_of(u64::from(n)) => x,
                _ => fresh(rng),
            },
        };
        self.current = Some(x);
        x
    }
}

/// Heralded single-photon source. Only the background fraction affects the
/// simulation; the timing fields are carried as metadata.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceModel {
    /// Output noise fraction: probability that an untracked background
    /// messenger crosses the device ahead of a heralded one.
    pub onf: f64,
    /// Multi-photon emission; must stay off.
    pub g2_flag: bool,
    pub switch_window_ns: f64,
    pub dead_time_us: f64,
}

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            onf: 0.0047,
            g2_flag: false,
            switch_window_ns: 4.0,
            dead_time_us: 20.0,
        }
    }
}

impl SourceModel {
    pub fn ideal() -> Self {
        Self {
            onf: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.05).contains(&self.onf) {
            return Err(Error::config(
                "source.onf",
                format!("{} not in [0, 0.05]", self.onf),
            ));
        }
        if self.g2_flag {
            return Err(Error::config(
                "source.g2_flag",
                "multi-photon emission is not modelled; must be false",
            ));
        }
        for (key, v) in [
            ("source.switch_window_ns", self.switch_window_ns),
            ("source.dead_time_us", self.dead_time_us),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Photon-counting detector on the output ports. Dark counts are added to the
/// monitored port (port 0) only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_prob_per_gate: f64,
    pub gate_window_ns: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_prob_per_gate: 0.0,
            gate_window_ns: 50.0,
        }
    }
}

impl DetectorModel {
    pub fn with(efficiency: f64, dark_prob_per_gate: f64) -> Self {
        Self {
            efficiency,
            dark_prob_per_gate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config(
                "detector.efficiency",
                format!("{} not in (0, 1]", self.efficiency),
            ));
        }
        if !(0.0..=0.1).contains(&self.dark_prob_per_gate) {
            return Err(Error::config(
                "detector.dark_prob_per_gate",
                format!("{} not in [0, 0.1]", self.dark_prob_per_gate),
            ));
        }
        if !(self.gate_window_ns.is_finite() && self.gate_window_ns > 0.0) {
            return Err(Error::config(
                "detector.gate_window_ns",
                format!("{} must be > 0", self.gate_window_ns),
            ));
        }
        Ok(())
    }

    /// Expected detected counts on port 0 for `trials` gates with photon
    /// probability `prob_port0` per gate.
    pub fn expected_port0(&self, trials: f64, prob_port0: f64) -> f64 {
        trials * (self.efficiency * prob_port0 + self.dark_prob_per_gate)
    }
}

/// Source and detector together.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Instruments {
    pub source: SourceModel,
    pub detector: DetectorModel,
}

impl Instruments {
    pub fn ideal() -> Self {
        Self {
            source: SourceModel::ideal(),
            detector: DetectorModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detector.validate()
    }
}

/// Counts restricted to the trials taken with one value of `x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCounts {
    pub trials: u64,
    pub counts_port0: u64,
    pub darks: u64,
}

/// Accumulated detections for one (phase point, protocol, set) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeRecord {
    pub phi0: f64,
    pub protocol: PhaseProtocol,
    pub set_index: u32,
    /// Monitored-port counts, dark counts included.
    pub counts_port0: u64,
    pub counts_port1: u64,
    pub darks_recorded: u64,
    pub trials: u64,
    pub seed: u64,
    /// Per-`x` tallies, indexed by [`XValue::index`].
    pub contexts: [ContextCounts; 2],
    pub darks_subtracted: bool,
    pub subtraction_underflow: bool,
}

impl FringeRecord {
    pub fn empty(phi0: f64, protocol: PhaseProtocol, set_index: u32, seed: u64) -> Self {
        Self {
            phi0,
            protocol: protocol.canonical(),
            set_index,
            counts_port0: 0,
            counts_port1: 0,
            darks_recorded: 0,
            trials: 0,
            seed,
            contexts: [ContextCounts::default(); 2],
            darks_subtracted: false,
            subtraction_underflow: false,
        }
    }

    pub fn context(&self, x: XValue) -> &ContextCounts {
        &self.contexts[x.index()]
    }
}

/// Conditional expectation of port-0 photons, accumulated alongside the
/// sampled counts: the sum over trials of the exit probability at the second
/// beamsplitter, split by `x`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpectedPort0 {
    pub prob_sum: [f64; 2],
    pub trials: [u64; 2],
}

impl ExpectedPort0 {
    pub fn total_prob_sum(&self) -> f64 {
        self.prob_sum[0] + self.prob_sum[1]
    }

    pub fn total_trials(&self) -> u64 {
        self.trials[0] + self.trials[1]
    }

    pub fn merge(&mut self, other: &ExpectedPort0) {
        for i in 0..2 {
            self.prob_sum[i] += other.prob_sum[i];
            self.trials[i] += other.trials[i];
        }
    }
}

/// Everything produced by one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PointOutcome {
    pub record: FringeRecord,
    pub expected: ExpectedPort0,
}

/// What a single cell should do.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSpec {
    pub phi0: f64,
    pub protocol: PhaseProtocol,
    pub photons: u64,
    pub set_index: u32,
    pub sub_seed: u64,
}

/// Runs `spec.photons` heralded trials through `ifo` at phase `spec.phi0`.
///
/// Per trial: draw `x`; set the modulators; with probability `onf` pass one
/// untracked background messenger; pass the heralded messenger; detect it
/// with probability `efficiency`; add a dark count to port 0 with
/// probability `dark_prob_per_gate`.
pub fn run_point(
    ifo: &mut Interferometer,
    spec: &PointSpec,
    instruments: &Instruments,
) -> PointOutcome {
    let mut streams = CellStreams::new(spec.sub_seed);
    let mut seq = XSequencer::new(spec.protocol);
    let mut record = FringeRecord::empty(spec.phi0, spec.protocol, spec.set_index, spec.sub_seed);
    let mut expected = ExpectedPort0::default();
    let onf = instruments.source.onf;
    let det = instruments.detector;

    for trial in 0..spec.photons {
        let x = seq.draw(trial, &mut streams.switch);
        ifo.set_modulators(spec.phi0, x.phi1());

        if onf > 0.0 && streams.background.random::<f64>() < onf {
            ifo.traverse(Port::Zero, &mut streams.background);
        }

        let t = ifo.traverse(Port::Zero, &mut streams.routing);
        let detected = streams.detector.random::<f64>() < det.efficiency;
        let dark = streams.detector.random::<f64>() < det.dark_prob_per_gate;

        let ctx = &mut record.contexts[x.index()];
        ctx.trials += 1;
        record.trials += 1;
        expected.trials[x.index()] += 1;
        expected.prob_sum[x.index()] += t.prob_port0;

        if detected {
            match t.port {
                Port::Zero => {
                    record.counts_port0 += 1;
                    ctx.counts_port0 += 1;
                }
                Port::One => record.counts_port1 += 1,
            }
        }
        if dark {
            record.counts_port0 += 1;
            record.darks_recorded += 1;
            ctx.counts_port0 += 1;
            ctx.darks += 1;
        }
    }
    PointOutcome { record, expected }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DlmRules;
    use crate::seeding::{stream, Stream};

    #[test]
    fn protocol_text_round_trip() {
        for p in [
            PhaseProtocol::FixedX(XValue::Minus),
            PhaseProtocol::FixedX(XValue::Plus),
            PhaseProtocol::RandomPerPhoton,
            PhaseProtocol::RandomPerN(10),
        ] {
            assert_eq!(p.to_string().parse::<PhaseProtocol>().unwrap(), p);
        }
        assert_eq!(
            "random-per:1".parse::<PhaseProtocol>().unwrap(),
            PhaseProtocol::RandomPerPhoton
        );
        assert!("random-per:0".parse::<PhaseProtocol>().is_err());
        assert!("sometimes".parse::<PhaseProtocol>().is_err());
    }

    #[test]
    fn phi1_map() {
        assert_eq!(XValue::Minus.phi1(), 0.0);
        assert_eq!(XValue::Plus.phi1(), FRAC_PI_2);
    }

    #[test]
    fn fixed_protocol_is_constant() {
        let mut rng = stream(1, Stream::Switch);
        let mut seq = XSequencer::new(PhaseProtocol::FixedX(XValue::Plus));
        assert!((0..100).all(|i| seq.draw(i, &mut rng) == XValue::Plus));
    }

    #[test]
    fn per_n_holds_within_blocks() {
        let mut rng = stream(2, Stream::Switch);
        let mut seq = XSequencer::new(PhaseProtocol::RandomPerN(10));
        let xs: Vec<XValue> = (0..1000).map(|i| seq.draw(i, &mut rng)).collect();
        for block in xs.chunks(10) {
            assert!(block.iter().all(|&x| x == block[0]));
        }
        // blocks are not all equal
        assert!(xs.chunks(10).any(|b| b[0] == XValue::Minus));
        assert!(xs.chunks(10).any(|b| b[0] == XValue::Plus));
    }

    #[test]
    fn per_one_equals_per_photon() {
        let mut a = XSequencer::new(PhaseProtocol::RandomPerN(1));
        let mut b = XSequencer::new(PhaseProtocol::RandomPerPhoton);
        let mut ra = stream(3, Stream::Switch);
        let mut rb = stream(3, Stream::Switch);
        for i in 0..500 {
            assert_eq!(a.draw(i, &mut ra), b.draw(i, &mut rb));
        }
    }

    #[test]
    fn per_photon_switching_is_fair() {
        let mut rng = stream(4, Stream::Switch);
        let mut seq = XSequencer::new(PhaseProtocol::RandomPerPhoton);
        let n = 100_000u64;
        let sum: i64 = (0..n)
            .map(|i| i64::from(seq.draw(i, &mut rng).as_i8()))
            .sum();
        let mean = sum as f64 / n as f64;
        // x = +-1 has unit variance
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn instrument_validation_names_keys() {
        let bad = SourceModel {
            onf: 0.2,
            ..SourceModel::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { key, .. }) if key == "source.onf"));
        let bad = SourceModel {
            g2_flag: true,
            ..SourceModel::default()
        };
        assert!(
            matches!(bad.validate(), Err(Error::Config { key, .. }) if key == "source.g2_flag")
        );
        assert!(DetectorModel::with(0.0, 0.0).validate().is_err());
        assert!(DetectorModel::with(1.0, 0.2).validate().is_err());
        assert!(DetectorModel::with(0.1, 0.05).validate().is_ok());
    }

    #[test]
    fn record_accounting() {
        let mut ifo = Interferometer::new(0.99, 0.0, DlmRules::default()).unwrap();
        let instruments = Instruments {
            source: SourceModel {
                onf: 0.05,
                ..SourceModel::default()
            },
            detector: DetectorModel::with(0.6, 0.05),
        };
        let spec = PointSpec {
            phi0: 0.4,
            protocol: PhaseProtocol::RandomPerPhoton,
            photons: 20_000,
            set_index: 0,
            sub_seed: 99,
        };
        let out = run_point(&mut ifo, &spec, &instruments);
        let r = &out.record;
        assert_eq!(r.trials, 20_000);
        assert!(r.counts_port0 + r.counts_port1 <= r.trials + r.darks_recorded);
        assert_eq!(r.contexts[0].trials + r.contexts[1].trials, r.trials);
        assert_eq!(
            r.contexts[0].counts_port0 + r.contexts[1].counts_port0,
            r.counts_port0
        );
        assert_eq!(r.contexts[0].darks + r.contexts[1].darks, r.darks_recorded);
        // background messengers train the device but are never counted
        assert!(ifo.traversals() > r.trials);
        assert_eq!(out.expected.total_trials(), r.trials);
    }

    #[test]
    fn no_background_means_one_traversal_per_trial() {
        let mut ifo = Interferometer::new(0.9, 0.0, DlmRules::default()).unwrap();
        let spec = PointSpec {
            phi0: 1.0,
            protocol: PhaseProtocol::FixedX(XValue::Minus),
            photons: 5_000,
            set_index: 0,
            sub_seed: 5,
        };
        run_point(&mut ifo, &spec, &Instruments::ideal());
        assert_eq!(ifo.traversals(), 5_000);
    }
}
