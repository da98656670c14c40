pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod poisson;
pub mod normal_form;
pub mod spectral;
pub mod tdgl;
pub mod sparse;
pub mod validate;
pub mod vortex_law;

pub use error::{Error, Result};
