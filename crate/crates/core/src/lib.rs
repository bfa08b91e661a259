//! Quasinormal modes of 2D plasmonic nanoresonators and the Green-function
//! approximations built from them.

pub mod background;
pub mod cli;
pub mod dyson;
pub mod error;
pub mod kernel;
pub mod model;
pub mod normalize;
pub mod observables;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
