pub mod bounds;
pub mod calculus;
pub mod campaign;
pub mod circlefn;
pub mod doi;
pub mod error;
pub mod gen;
pub mod linalg;
pub mod shift;

pub use error::{Error, Result};
