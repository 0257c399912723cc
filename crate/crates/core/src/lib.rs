//! Travelling waves of a two-species wound-healing angiogenesis model.
//!
//! The crate classifies equilibria and canard points of the desingularised
//! slow flow, assembles singular heteroclinic orbits (smooth and
//! shock-fronted), sweeps parameter space for region labels and validates
//! constructed waves against the diffusive PDE.
//!
//! All numerics are generic over [`Real`]; the aliases below fix `f64`.

pub mod dynamics;
pub mod equilibria;
pub mod integrate;
pub mod model;
pub mod orbits;
pub mod pde;
pub mod poly;
pub mod scalar;
pub mod sweep;

pub use model::{ModelError, ModelParams, PhasePoint, Sheet};
pub use scalar::Real;

pub type Params = ModelParams<f64>;
pub type Point = PhasePoint<f64>;
pub type Report = equilibria::RegionReport<f64>;
