//! Simulation of Floquet fSim circuits on rings and ladders in fixed photon
//! number sectors, with the XXZ bound-state theory, many-body spectroscopy,
//! bound-state observables and gate calibration built on top.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`);
//! exact diagonalization and calibration run in `f64`.

// Negated comparisons below deliberately reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod circuit;
pub mod engine;
pub mod error;
pub mod gate;
pub mod noise;
pub mod observables;
pub mod sampling;
pub mod scalar;
pub mod sector;
pub mod spectroscopy;
pub mod spectrum;
pub mod state;
pub mod theory;

pub use circuit::{flux_quantum, CircuitSpec, Geometry};
pub use engine::FloquetEngine;
pub use error::{Error, Result};
pub use gate::FsimParams;
pub use noise::{NoiseKind, NoiseModel};
pub use scalar::Real;
pub use sector::{Bitmask, BitstringClass, SectorBasis};
pub use state::{SectorAmplitudes, SectorState};
pub use theory::DispersionParams;

pub type FsimParams64 = FsimParams<f64>;
pub type FsimParams32 = FsimParams<f32>;
pub type CircuitSpec64 = CircuitSpec<f64>;
pub type CircuitSpec32 = CircuitSpec<f32>;
pub type SectorState64 = SectorState<f64>;
pub type SectorState32 = SectorState<f32>;
pub type FloquetEngine64 = FloquetEngine<f64>;
pub type FloquetEngine32 = FloquetEngine<f32>;
pub type DispersionParams64 = DispersionParams<f64>;
pub type DispersionParams32 = DispersionParams<f32>;
