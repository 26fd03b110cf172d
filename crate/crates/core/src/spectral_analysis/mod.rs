//! Spectral tools for the linearized operator in action-angle Fourier variables.

mod dispersion;
mod field;
mod functionals;
mod grid;
mod identity;
mod operator;
mod resonance;
mod table;
mod trial;

pub use dispersion::{Dispersion, ResonantCell, DEFAULT_RESONANCE_WIDTH};
pub use field::{force_l2, solve_poisson, PotentialField, SpectralField};
pub use functionals::{
    contradiction_constant, j_functionals, log_grid, JCase, JPlan, JSettings, JValues, ModePair, ModeSource, SweepLevel,
    SweepReport, SweepSettings,
};
pub use grid::{exterior_nodes, trapped_nodes, EnergyNode, GridSettings, Sheet, SpectralGrid};
pub use identity::{energy_identity, plancherel_check, smooth_step, EnergyIdentity, IdentityCutoff, IdentitySettings};
pub use operator::{eigen_scan, force_bound_fit, operator_matrix, EigenReport, OperatorMatrix, OperatorOptions};
pub use resonance::{
    admissible_delta_bound, resonance_map, trapped_level_count, ResonanceLevel, ResonanceMap,
    WindowRegion, SEPARATRIX_CUTOFF,
};
pub use table::{KernelTable, TableSample, TableSettings};
pub use trial::TrialPotential;

#[cfg(test)]
mod tests;
