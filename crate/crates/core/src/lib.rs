//! Event-based corpuscular model of a Mach-Zehnder interferometer whose
//! beamsplitters learn from the photons that pass through them, together with
//! the acquisition protocols, quantum reference curves and fitting tools
//! needed to tell the two descriptions apart.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod protocols;
pub mod qm;
pub mod seeding;

pub use config::{PhiGrid, RunConfig};
pub use error::{Error, Result};
pub use model::{DlmState, Interferometer, Messenger, Port};
pub use protocols::{DetectorModel, FringeRecord, PhaseProtocol, SourceModel, XValue};
