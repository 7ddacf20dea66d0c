//! Desk-scale simulator of the momentum-position EPR experiment with
//! downconverted photon pairs.
//!
//! * [`model`]: pump spectrum, phase matching and the two-photon amplitude.
//! * [`engine`]: grids, Fourier representation changes, joint/conditional
//!   densities and their variances.
//! * [`apparatus`]: near-field and far-field slit scans, background wings,
//!   Poisson counting, background subtraction and slit correction.
//! * [`criteria`]: inferred and joint variances, EPR and Mancini verdicts,
//!   closed-form predictions.
//! * [`pipeline`]: the `theory`, `experiment`, `analyze` and `full` runs
//!   driven by a [`config::RunConfig`], with file output in [`io`].

pub mod apparatus;
pub mod config;
pub mod criteria;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;

pub use config::RunConfig;
pub use criteria::{CriteriaReport, Provenance};
pub use engine::{Axis, AxisGrid, Density1D, Density2D, FactorGrids, FactorizedAmplitude, Joint2D};
pub use error::{Error, Result};
pub use model::{BiphotonModel, Crystal, PhaseMatchModel, PumpBeam};
