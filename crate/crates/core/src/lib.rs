//! Simulation of the two-SQUID cavity-QED entanglement protocol.
//!
//! Two three-level SQUIDs share a single cavity mode and a resonant
//! microwave drive. A five-step pulse sequence (a preparation pulse, two
//! cavity windows, a retargeting pulse, and a phase correction) takes
//! `|0,0⟩` to the maximally entangled qutrit pair
//! `(|0,0⟩ + |1,1⟩ + |2,2⟩)/√3`.
//!
//! The crate builds the full interaction-picture Hamiltonian and the
//! dispersive effective model, propagates states under both, and measures
//! how well the protocol works.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod protocol;
pub mod tensor;

pub use error::{CoreError, Result};
pub use hamiltonians::{RegimeReport, RegimeThresholds, SystemParams, Transition};
pub use tensor::{ComplexMatrix, ComplexVector, DensityMatrix, Factor, HilbertLayout, PureState, C64};
