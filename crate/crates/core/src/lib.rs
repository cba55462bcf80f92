//! Time-domain simulation of a floating platform carrying a flexible beam with a
//! tip mass, coupled to linear potential-flow waves in a closed two-dimensional tank.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for the common case.

// `!(v > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod cli;
pub mod config;
pub mod coupled;
pub mod energy;
pub mod error;
pub mod hydro;
pub mod linalg;
pub mod mesh;
pub mod oracle;
pub mod output;
pub mod potential;
pub mod scalar;
pub mod sparse;
pub mod timeloop;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type FluidGeometry64 = mesh::FluidGeometry<f64>;
pub type FluidGeometry32 = mesh::FluidGeometry<f32>;
pub type BeamParams64 = beam::BeamParams<f64>;
pub type BeamParams32 = beam::BeamParams<f32>;
pub type PlatformParams64 = hydro::PlatformParams<f64>;
pub type PlatformParams32 = hydro::PlatformParams<f32>;
pub type CoupledSystem64 = coupled::CoupledSystem<f64>;
pub type CoupledSystem32 = coupled::CoupledSystem<f32>;
pub type ForcingSpec64 = timeloop::ForcingSpec<f64>;
pub type ForcingSpec32 = timeloop::ForcingSpec<f32>;
