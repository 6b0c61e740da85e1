pub mod cli;
pub mod dataset;
pub mod error;
pub mod network;
pub mod ntk;
pub mod numerics;
pub mod selfdistill;
pub mod theorem;

pub use error::{Error, Result};
