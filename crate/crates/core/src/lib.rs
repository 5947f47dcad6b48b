pub mod arbitrage;
pub mod asymptotics;
pub mod error;
pub mod io;
pub mod kernels;
pub mod market;
pub mod rng;
pub mod stats;
pub mod strategies;

pub use error::{Error, Result};
