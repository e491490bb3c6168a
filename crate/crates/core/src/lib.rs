pub mod error;
pub mod experiments;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod parallel;
pub mod quadrature;
pub mod reduction;
pub mod singular;
pub mod sparse;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
