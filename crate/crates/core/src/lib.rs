//! Domain walls of the Rabi-coupled two-component Gross–Pitaevskii system.
//!
//! Computes 1D wall profiles by damped Newton continuation on growing
//! intervals, fits their exponential tails, and checks the qualitative
//! properties such walls must have (bounds, monotonicity, first integral,
//! uniqueness up to translation, constant solutions when the Rabi coupling is
//! strong, independence of the transverse variable on a periodic strip).

pub mod asymptotics;
pub mod certifier;
pub mod grid1d;
pub mod linalg;
pub mod model;
mod newton;
pub mod pipeline;
pub mod solver1d;
pub mod strip2d;

pub use asymptotics::{FitError, FitReport, OmegaZeroReport, TailFit};
pub use certifier::{Certificate, CheckRecord, Tolerances};
pub use grid1d::{Grid, GridError, Profile};
pub use model::{equilibria, linear_data, Equilibria, LinearData, ModelError, Params, Regime};
pub use newton::IterRecord;
pub use pipeline::{PipelineOptions, PointResult, SweepReport};
pub use solver1d::{ContinuationSchedule, SolveError, SolveOptions, Trace};
pub use strip2d::{StripError, StripField, StripGrid};
