pub mod balls;
pub mod chainrec;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod horseshoe;
pub mod orbits;
pub mod spaces;

pub use error::{Error, Result};
