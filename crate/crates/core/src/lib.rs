//! Product quantum LDPC codes built from lossless expanders, with small-set
//! flip decoding, fault-tolerant gadget circuits, and the simulators used to
//! check them.

pub mod badsets;
pub mod circuits;
pub mod codes;
pub mod complex;
pub mod decoder;
pub mod expander;
pub mod experiments;
pub mod f2la;
pub mod gadgets;
pub mod sim;
pub mod verify;

/// Artifact version tag carried on every output row.
pub const VERSION: &str = concat!("qldpc-", env!("CARGO_PKG_VERSION"));
