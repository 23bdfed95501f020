//! Fault-tolerance analysis for Bacon-Shor codes: Pauli algebra, code
//! construction, gadget circuits, fault propagation, malignant-set counting
//! and threshold estimates.

pub mod circuits;
pub mod codes;
pub mod error;
pub mod faultsim;
pub mod gf2;
pub mod malignancy;
pub mod pauli;
pub mod threshold;

pub use error::{Error, Result};
