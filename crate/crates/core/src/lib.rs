//! Modeling toolkit for MAC-matrix TCN accelerators.
//!
//! The crate covers the full path from a network description to a
//! performance verdict:
//!
//! - [`network`]: dilated 1-D convolution stacks, receptive fields,
//!   streaming window plans, workloads and memory footprints;
//! - [`qconv`]: bit-exact 16-bit fixed-point execution, whole-tensor and
//!   streaming, the golden model every schedule is checked against;
//! - [`arch`]: DSP/RAMB18 resource estimation, peak performance and the
//!   grid-search design-space exploration;
//! - [`membank`]: bank interleaving, read-conflict detection and tile
//!   capacity checks;
//! - [`scheduler`]: compilation of a network into a tiled, double-buffered
//!   command stream (plus the on-chip-resident variant) and its verifier;
//! - [`replay`]: functional execution of a command stream, used to prove
//!   schedules bit-identical to direct execution;
//! - [`perfsim`]: discrete-event timing simulation, roofline analysis and
//!   batch sweeps.

pub mod arch;
pub mod error;
pub mod membank;
pub mod network;
pub mod perfsim;
pub mod qconv;
pub mod qformat;
pub mod replay;
pub mod scheduler;
pub mod weights;

pub use error::{Error, Result};
