pub mod apps;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod restriction;
pub mod theta;

pub use error::{Error, Result};
