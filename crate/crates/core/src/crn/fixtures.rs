//! Reference networks shared by tests, benchmarks and examples.

use super::{parse_network, ReactionNetwork};

/// `2 SO2 + O2 <-> 2 SO3` with unit rates, sulfur and oxygen atom counts
/// declared as the conserved quantities.
pub const SO2_TEXT: &str = "\
# sulfur dioxide oxidation
species: SO2 O2 SO3
reaction: 2 SO2 + O2 <-> 2 SO3 @ 1.0, 1.0
diffusion: SO2=0.2 O2=0.2 SO3=0.2
conserved: sulfur = SO2 + SO3
conserved: oxygen = 2 SO2 + 2 O2 + 3 SO3
";

pub fn so2() -> ReactionNetwork {
    parse_network(SO2_TEXT).expect("fixture parses")
}

/// `A <-> B` with the given rates and unit diffusion.
pub fn isomerisation(forward: f64, backward: f64) -> ReactionNetwork {
    parse_network(&format!(
        "species: A B\nreaction: A <-> B @ {forward:e}, {backward:e}\ndiffusion: A=1 B=1\n"
    ))
    .expect("fixture parses")
}
