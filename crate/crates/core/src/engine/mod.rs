//! Grids, representation changes and densities.

mod density;
mod factorized;
mod grid;
mod joint;
mod transform;

pub use density::{Axis, Density1D, Density2D};
pub use factorized::{FactorizedAmplitude, FactorizedDensity, Representation};
pub use grid::{build_grids, AxisGrid, FactorGrids};
pub use joint::Joint2D;
