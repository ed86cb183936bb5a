pub mod analysis;
pub mod cli;
pub mod codesign;
pub mod error;
pub mod h2design;
pub mod model;
pub mod numerics;
pub mod sdp;
pub mod simulator;

pub use error::{Error, Result};
