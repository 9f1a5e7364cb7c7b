//! Guessing probabilities and min-entropy of quantum measurement outcomes at
//! three levels of device characterization.

pub mod error;
pub mod moment;
pub mod optimize;
pub mod povm;
pub mod quantum;
pub mod sdp;
pub mod tomographic;
pub mod white_noise;

pub use error::{Error, Result};
