//! Event-by-event dynamics of messengers through adaptive beamsplitters
//! arranged as a Mach-Zehnder interferometer.

pub mod dlm;
pub mod interferometer;
pub mod messenger;

pub use dlm::{DlmRules, DlmState, LearningOrder, RegisterMode, Routing};
pub use interferometer::{effective_arm_phases, Interferometer, Traversal, MAX_CROSSTALK};
pub use messenger::{Messenger, Port};
