pub mod approx;
pub mod calibrate;
pub mod cluster;
pub mod densecore;
pub mod device;
pub mod error;
pub mod pipeline;
pub mod propagate;
pub mod qec202;
pub mod superop;

pub use error::{Error, Result};
