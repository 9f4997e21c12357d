//! Bonabeau dominance-hierarchy dynamics on site graphs.
//!
//! * [`graph`]: site graphs, standard families, Laplacians.
//! * [`linalg`]: dense symmetric eigensolvers.
//! * [`spectral`]: Das bound, Jacobian spectrum and stability of the
//!   egalitarian state.
//! * [`bonabeau`]: the stochastic fight/relaxation engine (fully occupied
//!   graphs and partially occupied lattices).
//! * [`competing`]: the terminating competing model and its `Z` statistic.
//! * [`meanfield`]: the deterministic mean-field map and mean recursion.
//! * [`oracle`]: exact enumeration and finite-difference cross-checks.

pub mod bonabeau;
pub mod competing;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod meanfield;
pub mod oracle;
pub mod seed;
pub mod spectral;

pub use bonabeau::{
    fight_probability, sigma, BonabeauParams, FightEvent, LatticeWorld, Monitor, PowerState,
    TrajectorySample, TrajectoryStats,
};
pub use competing::{
    CompetingParams, CompetingState, EdgeSelection, EtaSchedule, TerminationOutcome,
};
pub use error::{Error, Result};
pub use graph::{Boundary, Family, LaplacianMatrix, SiteGraph};
pub use linalg::Matrix;
pub use meanfield::MeanfieldConfig;
pub use spectral::{Classification, StabilityReport};
