//! Structural analysis of reaction networks.

mod balance;
mod boundary;
mod conditions;
mod conservation;

pub use balance::{
    complex_balance_residual, entropy_multipliers, find_positive_equilibrium,
    find_positive_equilibrium_with, reassemble, ComplexGraph, ComplexResidual, EquilibriumReport,
    EQUILIBRIUM_TOL,
};
pub use boundary::{detect_boundary_equilibria, none_in_class, BoundaryEquilibrium, MAX_ENUMERATED_SPECIES};
pub use conditions::{
    growth_bound, validate_conditions, ConditionReport, EntropyRelaxation, GrowthVerdict,
    SamplingPlan, Verdict,
};
pub use conservation::{conservation_laws, law_basis, law_names, totals};
