pub mod breathing;
pub mod cli;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod motion;
pub mod quadrature;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};
