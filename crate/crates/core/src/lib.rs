//! Mean-difference decompositions between two populations.
//!
//! Discrete measures on tensor grids ([`measures`]), evaluable models
//! ([`functions`]), additive functional decompositions ([`fanova`], [`ale`]),
//! the two-population importance decomposition ([`population`]) and numerical
//! checks of when a decomposition attributes a difference to the outcome model
//! even though the model is shared ([`diagnostics`]).

pub mod ale;
pub mod decomposition;
pub mod diagnostics;
pub mod error;
pub mod fanova;
pub mod functions;
pub mod measures;
pub mod population;
pub mod subset;

pub use decomposition::{Backend, Decomposition};
pub use error::{Error, Result};
pub use functions::FunctionModel;
pub use measures::{DiscreteJoint, Grid, Marginal1D};
pub use subset::Subset;
