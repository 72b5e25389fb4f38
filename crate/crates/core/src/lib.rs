pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod info;
pub mod measure;
pub mod models;
pub mod pgfl;
pub mod units;

pub use error::{Error, Result};
