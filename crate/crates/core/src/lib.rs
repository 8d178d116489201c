//! Differentiable 1D ballistic transport under quantum transmitting boundary
//! conditions, and gradient-based inverse design of double-barrier devices.
//!
//! The crate is `no_std` (it needs `alloc`). All physics is generic over
//! [`scalar::Scalar`], so the same code evaluates plain values or carries a
//! forward-mode gradient with respect to the seven design parameters.

#![no_std]

extern crate alloc;

pub mod error;
pub mod inverse;
pub mod observables;
pub mod physics;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use physics::{
    BarrierParams, DesignVector, Device, DeviceGeometry, PhysicalConstants, PotentialParams, Window,
};
pub use scalar::{Complex, Dual, Scalar};
