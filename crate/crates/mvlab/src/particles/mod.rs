//! N-particle machinery: Langevin (SDE) integration, Gibbs sampling by
//! MALA, empirical-measure fluctuation statistics and small-N partition
//! functions.

pub mod fluctuations;
pub mod gibbs;
pub mod partition;
pub mod sde;

pub use fluctuations::{basis_e, fluctuation_modes, interaction_fluctuation_energy, FluctuationSample};
pub use gibbs::{gibbs_sample, GibbsOptions, GibbsSamples};
pub use partition::partition_function_small_n;
pub use sde::{
    msd_diffusivity, replica_rng, simulate_msd_ensemble, simulate_sde, MsdCurve, MsdFit,
    ParticleEnsemble, Trajectory,
};
