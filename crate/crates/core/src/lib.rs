//! Simulation and analysis toolkit for a superconducting qubit coupled to
//! clusters of near-resonant acoustic modes: dressed-state spectroscopy,
//! vacuum Rabi interference dynamics, collective Dicke behavior, purity
//! dynamics, and measurement-error mitigation.

pub mod device;
pub mod dicke;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod output;
pub mod quantum;
pub mod readout;
pub mod spectroscopy;
pub mod units;
