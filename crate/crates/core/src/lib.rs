//! Threshold policies for singular stochastic control games with
//! proportional intervention costs.

pub mod error;
pub mod hjb_fd;
pub mod model;
pub mod quadrature;
pub mod reduction;
pub mod sde;
pub mod thresholds;
pub mod valuefn;

pub use error::{Error, Result};
