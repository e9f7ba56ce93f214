#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod criteria;
pub mod error;
pub mod linalg;
pub mod linearized;
pub mod model;
pub mod positivep;
pub mod spectra;

pub use error::{Error, Result};
