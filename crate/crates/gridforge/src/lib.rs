//! Structured elliptic grid generation on doubly connected domains bounded
//! by two contour lines of a flux function, by two-pass streamline
//! integration: an orthogonal flux-aligned pass, an elliptic solve for the
//! new radial coordinate, and a second streamline pass aligned to it.

pub mod elliptic;
pub mod elliptic_grid;
pub mod error;
pub mod flux;
pub mod gridfile;
pub mod interp;
pub mod ode;
pub mod ortho;
pub mod par;
pub mod quality;
pub mod solver;
pub mod svg;
pub mod tensor;

pub use error::{GridError, Result};
