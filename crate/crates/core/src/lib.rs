//! Exact symbolic computation for the variational bicomplex on a single jet chart.

pub mod cli;
pub mod connection;
pub mod error;
pub mod jetforms;
pub mod lepage;
pub mod symcore;
pub mod varops;

pub use error::{Error, Result};
