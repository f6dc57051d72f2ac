pub mod annulus;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod ops;
pub mod presets;
pub mod recurrence;
pub mod poisson;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{ChannelGrid, ScalarField, VectorField};
pub use ops::{ddx, ddy, integrate, l2_distance, l2_inner, l2_norm, mean};
pub use poisson::{poisson_solve, PoissonSolver};
pub use spectral::{to_physical, to_spectral, SpectralField};
