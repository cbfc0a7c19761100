//! Time integration of the Lagrangian system
//!
//! ```text
//! η_t = u,   ρ̄u_t + ∇_A q − μΔ_A u = λm²∂₁²η + G_η e₂,   div_A u = 0
//! ```
//!
//! with `A = (I + ∇η)^{-T}`, on the slip-walled periodic slab.

mod eulerian;
mod seed;
mod snapshot;
mod state;
mod step;

pub use eulerian::{to_eulerian, EulerianFields};
pub use seed::{seed_initial_data, SeedOptions, SeededState};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
pub use state::{build_a, FlowState, Physics, SimConfig, Tolerances};
pub use step::{run, step, InvariantCounters, Reporter, RunResult, Stepper, Termination};
