pub mod attack;
pub mod biometric;
pub mod bits;
pub mod coding;
pub mod entity;
pub mod error;
pub mod harness;
pub mod numtheory;
pub mod protocol;

pub use bits::BitString;
pub use error::{Error, Result};
