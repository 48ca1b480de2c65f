//! Thermo-hydraulic simulation of district heating networks.
//!
//! The crate covers water material laws, the network graph, stationary
//! incompressible hydraulics, a finite-volume upwind model of the energy
//! transport with its port-Hamiltonian structure, an implicit midpoint
//! integrator, structural checks of a compressible pipe operator model and
//! feed-in power scenarios.

pub mod materials;
pub mod network;
pub mod thermal;
pub mod hydraulics;
pub mod ph;
pub mod integrator;
pub mod scenario;
pub mod generic;
