//! Coordination games on networks: equilibria, welfare decomposition over the
//! spectrum of the interaction matrix, and optimal interventions on ideal
//! points.

pub mod equilibrium;
pub mod error;
pub mod io;
pub mod net;
pub mod oracle;
pub mod planner;
pub mod profile;
pub mod spectral;
pub mod stats;

pub use equilibrium::{solve_equilibrium, welfare, EquilibriumSolver};
pub use error::{Error, Result};
pub use net::{make_circle, make_homophilous_blocks, make_random_weighted, Network};
pub use planner::{optimal_intervention, simple_optimal_f, InterventionResult};
pub use profile::{Direction, GameParams, Profile};
pub use spectral::{decompose, Spectrum};
