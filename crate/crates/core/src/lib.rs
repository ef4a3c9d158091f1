//! Polynomial ODE systems and chemical reaction networks with an arbitrary
//! number of stable limit cycles.
//!
//! * [`poly`]: sparse polynomial systems, evaluation and the kinetic test.
//! * [`crn`]: reaction networks, mass-action compilation and the inverse
//!   canonical realization, plus text/JSON formats.
//! * [`constructions`]: the planar multi-cycle field, its polynomial
//!   extensions and the two reaction-network families built from it.
//! * [`dynamics`]: adaptive integration and batch runs.
//! * [`analysis`]: trapping-annulus flux checks, cycle detection and counting.
//! * [`figures`]: fixed configurations that reproduce the reference plots.

pub mod analysis;
pub mod constructions;
pub mod crn;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod parallel;
pub mod poly;

pub use constructions::{default_centers, CenterSet, StiffParams};
pub use crn::{mass_action_odes, ode_to_crn, Complex, Crn, MergePolicy, Reaction};
pub use dynamics::{integrate, IntegratorSettings, Method, Trajectory, VectorField};
pub use error::{AnalysisError, ConstructionError, CrnError, IntegrationError, PolyError};
pub use parallel::Execution;
pub use poly::{Monomial, PolyOdeSystem};
