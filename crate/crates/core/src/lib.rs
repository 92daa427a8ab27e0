pub mod chaos;
pub mod diagnostics;
pub mod embed;
pub mod error;
pub mod functionals;
pub mod rng;
pub mod tensor;
pub mod validation;

pub use error::{Error, Result};
