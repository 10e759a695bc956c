//! Measurement-based cooling of oscillators and oscillator networks with a
//! qudit regulator.
//!
//! The system is evolved jointly with a `d`-level regulator, the regulator is
//! measured, and the run is kept when it returns to its initial level. All
//! Hamiltonians conserve the total excitation number, so evolution is carried
//! out sector by sector.

pub mod error;
pub mod gaussian;
pub mod hamiltonians;
pub mod hilbert;
pub mod linalg;
pub mod opttime;
pub mod protocol;
pub mod stateprep;
pub mod states;

pub use error::{QcoolError, Result};
pub use hamiltonians::{CouplingParams, RegulatorKind, Topology, TopologyKind};
pub use hilbert::{DensityMatrix, Ket, OperatorMatrix, SpaceSpec, Subsystem};
pub use protocol::{run_protocol, ProtocolConfig, ProtocolTrace, SystemState};
pub use states::DSTParams;
