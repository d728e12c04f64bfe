pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod io;
pub mod numerics;
pub mod pde;
pub mod plemelj;
pub mod reconstruction;
pub mod rh;
pub mod scattering;

pub use error::{IstError, Result};
