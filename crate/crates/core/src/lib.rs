pub mod correlators;
pub mod dynamics;
pub mod error;
pub mod sweeps;
pub mod tagcorr;
pub mod trajectories;

pub use error::{Error, Result};
