//! Chemical reaction networks: data model, text format and mass-action
//! kinetics.

pub mod fixtures;
mod model;
mod parse;

pub use model::{
    mass_action_jacobian, mass_action_rhs, polynomial_rhs, stoichiometric_matrix, Complex,
    ConservedQuantity, Kinetics, PolynomialSystem, RateLaw, Reaction, ReactionNetwork, Term,
};
pub use parse::{parse_network, render_network};
