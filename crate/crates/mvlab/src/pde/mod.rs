//! Densities on the circle, their metrics, and the pseudospectral evolver
//! for the periodic McKean--Vlasov equation.

pub mod audit;
pub mod evolve;
pub mod field;
pub mod metrics;

pub use audit::{convergence_audit, AuditReport};
pub use evolve::{evolve_mv, EvolutionTrace};
pub use field::DensityField;
pub use metrics::{circle_wasserstein, relative_entropy};
