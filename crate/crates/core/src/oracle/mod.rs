//! Ground truth: a concrete interpreter counting edge visits and a harness
//! that checks bounds on every input of a small box.

mod domain;
mod interp;
mod validate;

pub use domain::{input_variables, BoxSpec, BoxSpecError, InputSpace};
pub use interp::{run_concrete, ConcreteInput, Interpreter, RunStatus, RunTrace, DEFAULT_STEP_CAP};
pub use validate::{validate_bounds, validate_on, Tightness, ValidationReport, Violation};
