//! Shared fixtures for the criterion benchmarks in `benches/`.

use eprsim_core::engine::FactorizedDensity;
use eprsim_core::pipeline::factorized_densities;
use eprsim_core::{BiphotonModel, RunConfig};

/// Default run with its model and factorized densities prebuilt.
pub struct Fixture {
    pub cfg: RunConfig,
    pub model: BiphotonModel,
    pub position: FactorizedDensity,
    pub momentum: FactorizedDensity,
}

impl Fixture {
    pub fn nominal() -> Self {
        Self::from_config(RunConfig::default())
    }

    pub fn from_config(cfg: RunConfig) -> Self {
        let model = cfg.model().expect("valid config");
        let (position, momentum) = factorized_densities(&cfg, &model).expect("densities");
        Self {
            cfg,
            model,
            position,
            momentum,
        }
    }
}
