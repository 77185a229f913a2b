//! Damped-Newton solver for `sigma_k(chi(z, u) I + u_{z zbar}) = psi(z, Du, u)`
//! on the flat torus, with manufactured solutions and monitoring of the test
//! function `G`.

pub mod config;
pub mod exact;
pub mod grid;
pub mod io;
pub mod krylov;
pub mod model;
pub mod monitor;
pub mod newton;
pub mod spectral;
pub mod state;

/// Relative cone margin required of manufactured data and accepted iterates.
pub const DEFAULT_CONE_MARGIN: f64 = 1e-8;

pub use config::{ProblemConfig, RhsMode};
pub use exact::{manufacture_exact, refinement_study, CosineProduct, ExactSolution, ExpCosine, ManufacturedProblem, RefinementRow};
pub use grid::{TorusField, TorusGrid};
pub use io::{read_field, write_field};
pub use model::{manufacture, ChiModel, RhsModel};
pub use monitor::{monitor, MonitorReport};
pub use newton::{newton_solve, IterationRecord, NewtonOptions, SolveReport, Termination};
pub use spectral::{complex_hessian, HermitianField, Spectral};
pub use state::{residual, GridState};
