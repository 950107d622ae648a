pub mod characteristics;
pub mod density_solver;
pub mod equilibria;
pub mod linear_response;
pub mod norms;
pub mod error;
pub mod quadrature;
pub mod snapshot;
pub mod spacetime;
pub mod spectral_field;

pub use error::{Error, Result};
pub use spectral_field::{NonlinearityA, PeriodicGrid, ScalarField2D, VectorField2D};
