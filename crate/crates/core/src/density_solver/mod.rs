//! The density fixed point `ρ = 𝓙(ρ)`: transported initial data, the
//! reaction operator, Picard iteration on slabs with a smallness ledger,
//! reconstruction of `f` and the scattering profile. A semi-Lagrangian
//! evolution of `f` is kept alongside as an independent cross-check.

mod initial;
mod operators;
mod oracle;
mod picard;
mod reconstruct;

#[cfg(test)]
mod tests;

pub use initial::InitialData;
pub use operators::{eta_weight, flows_from_g, reaction, t_operator, transported_initial, NodeIntegrals, PhaseQuadrature, RING_TOLERANCE};
pub use oracle::{OracleRun, SemiLagrangian};
pub use picard::{
    picard_map_j, BootstrapState, BootstrapStatus, DensitySolver, JEvaluation, LedgerRow, SlabLog, Solution, SolverConfig,
};
pub use reconstruct::{reconstruct_f, scattering_profile, scattering_profile_unchecked, velocity_integral, ScatteringProfile, SCATTERING_TOL};
