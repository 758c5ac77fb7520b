//! Scenario files, solver runs and figure data for the `transpol` command.

pub mod error;
pub mod figures;
pub mod run;
pub mod scenario;

pub use error::{InputError, RunError};
pub use figures::{emit_figure_data, Figure, FigureShape};
pub use run::{run_scenario, RunOptions, RunSummary};
pub use scenario::{Check, Scenario, Solver};
