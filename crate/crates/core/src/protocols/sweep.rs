use rand::Rng;
use rayon::prelude::*;

use super::{run_point, Instruments, PhaseProtocol, PointOutcome, PointSpec, XSequencer};
use crate::config::RunConfig;
use crate::error::Result;
use crate::model::{DlmRules, Interferometer, Port};
use crate::protocols::FringeRecord;
use crate::seeding::{derive_seed, stream, CellKey, Stream, SLOT_BURN_IN, SLOT_STATIC};

/// One unit of acquisition: a phase point, a protocol, a set (or replica).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub phi0: f64,
    pub protocol: PhaseProtocol,
    /// Seed slot; protocols of one schedule get distinct slots.
    pub slot: u32,
    pub index: u32,
    pub photons: u64,
}

impl Cell {
    pub fn sub_seed(&self, master: u64) -> u64 {
        CellKey::new(self.phi0, self.slot, self.index).sub_seed(master)
    }
}

/// Device, instruments and seeding shared by a list of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub alpha: f64,
    pub beta: f64,
    pub rules: DlmRules,
    pub instruments: Instruments,
    pub master_seed: u64,
    /// One device for all cells, in order. Otherwise every cell starts fresh.
    pub persistence: bool,
    pub burn_in: u64,
}

impl Simulation {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            alpha: config.alpha,
            beta: config.beta,
            rules: config.dlm,
            instruments: config.instruments(),
            master_seed: config.master_seed,
            persistence: config.persistence,
            burn_in: config.burn_in,
        }
    }

    pub fn device(&self) -> Result<Interferometer> {
        Interferometer::new(self.alpha, self.beta, self.rules)
    }

    /// Runs `cells` and returns their outcomes in the same order.
    ///
    /// With persistence the cells share one device and run sequentially.
    /// Without it each cell gets a fresh device and its own burn-in, so cells
    /// run in parallel and the result does not depend on thread count.
    pub fn run(&self, cells: &[Cell]) -> Result<Vec<PointOutcome>> {
        self.instruments.validate()?;
        let mut template = self.device()?;
        if self.persistence {
            if let Some(first) = cells.first() {
                let seed = derive_seed(self.master_seed, &[u64::from(SLOT_BURN_IN)]);
                burn_in(
                    &mut template,
                    first.protocol,
                    first.phi0,
                    self.burn_in,
                    seed,
                );
            }
            let mut ifo = template;
            Ok(cells
                .iter()
                .map(|cell| run_point(&mut ifo, &self.spec(cell), &self.instruments))
                .collect())
        } else {
            Ok(cells
                .par_iter()
                .map(|cell| {
                    let mut ifo = template.clone();
                    let spec = self.spec(cell);
                    burn_in(
                        &mut ifo,
                        cell.protocol,
                        cell.phi0,
                        self.burn_in,
                        spec.sub_seed,
                    );
                    run_point(&mut ifo, &spec, &self.instruments)
                })
                .collect())
        }
    }

    fn spec(&self, cell: &Cell) -> PointSpec {
        PointSpec {
            phi0: cell.phi0,
            protocol: cell.protocol,
            photons: cell.photons,
            set_index: cell.index,
            sub_seed: cell.sub_seed(self.master_seed),
        }
    }
}

/// Passes `photons` untracked messengers under the given settings.
pub fn burn_in(
    ifo: &mut Interferometer,
    protocol: PhaseProtocol,
    phi0: f64,
    photons: u64,
    seed: u64,
) {
    if photons == 0 {
        return;
    }
    let mut rng = stream(seed, Stream::BurnIn);
    let mut seq = XSequencer::new(protocol);
    for trial in 0..photons {
        let x = seq.draw(trial, &mut rng);
        ifo.set_modulators(phi0, x.phi1());
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        ifo.traverse_with(Port::Zero, u1, u2);
    }
}

/// Empirical port-0 frequency with the arm difference held at each value of
/// `delta_phi`, one fresh device per point and `traversals` messengers each.
pub fn static_fringe(
    alpha: f64,
    rules: DlmRules,
    delta_phi: &[f64],
    traversals: u64,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let template = Interferometer::new(alpha, 0.0, rules)?;
    Ok(delta_phi
        .par_iter()
        .map(|&dphi| {
            let mut ifo = template.clone();
            ifo.set_arm_phases(dphi, 0.0);
            let seed = CellKey::new(dphi, SLOT_STATIC, 0).sub_seed(master_seed);
            let mut rng = stream(seed, Stream::Routing);
            let port0 = (0..traversals)
                .filter(|_| ifo.traverse(Port::Zero, &mut rng).port == Port::Zero)
                .count();
            port0 as f64 / traversals as f64
        })
        .collect())
}

/// The acquisition schedule: for each phase point in order, every protocol
/// in order, `sets` sets each.
pub fn schedule(config: &RunConfig) -> Vec<Cell> {
    let grid = config.phi0_grid.values();
    let mut cells =
        Vec::with_capacity(grid.len() * config.protocols.len() * config.sets_per_protocol as usize);
    for &phi0 in &grid {
        for (slot, &protocol) in config.protocols.iter().enumerate() {
            for index in 0..config.sets_per_protocol {
                cells.push(Cell {
                    phi0,
                    protocol,
                    slot: slot as u32,
                    index,
                    photons: config.photons_per_set,
                });
            }
        }
    }
    cells
}

/// Runs the full measurement sequence and returns one record per
/// (phase point, protocol, set) in schedule order.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<FringeRecord>> {
    config.validate()?;
    let outcomes = Simulation::from_config(config).run(&schedule(config))?;
    Ok(outcomes.into_iter().map(|o| o.record).collect())
}

/// Two full fringes, switching `x` every photon and every
/// `config.switch_block` photons. Both share the per-cell seeds; each runs on
/// its own device.
pub fn run_switch_rate_comparison(
    config: &RunConfig,
) -> Result<(Vec<FringeRecord>, Vec<FringeRecord>)> {
    config.validate()?;
    let sim = Simulation::from_config(config);
    let cells_for = |protocol: PhaseProtocol| -> Vec<Cell> {
        let mut cfg = config.clone();
        cfg.protocols = vec![protocol];
        schedule(&cfg)
    };
    let fast = sim.run(&cells_for(PhaseProtocol::RandomPerPhoton))?;
    let slow = sim.run(&cells_for(
        PhaseProtocol::RandomPerN(config.switch_block).canonical(),
    ))?;
    Ok((
        fast.into_iter().map(|o| o.record).collect(),
        slow.into_iter().map(|o| o.record).collect(),
    ))
}
