pub mod arnoldi;
pub mod assembly;
mod ddouble;
pub mod dense;
pub mod eigensolve;
pub mod error;
pub mod lu;
pub mod mesh;
pub mod oracle;
pub mod par;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
