//! Time integration: Strang splitting of explicit RK4 reaction around an
//! implicit diffusion solve, step-doubling error control, positivity clamp
//! and binary checkpoints.

mod config;
mod integrator;
pub mod linear;
mod state;

pub use config::{DiffusionScheme, Profile, SimulationConfig, StepControl};
pub use integrator::{
    advance_fixed, resolve_reference, run, run_from, to_fields, to_values, Integrator, Reference, RunControl,
    RunOutcome, RunStats, Termination, Trial, Values,
};
pub use state::{
    init_state, load_checkpoint, read_checkpoint, save_checkpoint, SimulationState, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
