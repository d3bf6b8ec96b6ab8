//! Numerical laboratory for mean-field interacting particle systems on the
//! unit circle: stationary states and phase transitions of the periodic
//! McKean--Vlasov equation, effective diffusivities by homogenization,
//! N-particle Langevin/Gibbs simulation with fluctuation statistics, and
//! reflection-coupling contraction experiments.

pub mod coupling;
pub mod error;
pub mod fft;
pub mod homogenize;
pub mod io;
pub mod numerics;
pub mod particles;
pub mod pde;
pub mod potentials;
pub mod special;
pub mod stationary;
pub mod stats;

pub use error::{MvError, Result};
pub use pde::DensityField;
pub use potentials::CosineSeries;
