//! Run configuration, read from a flat TOML document.
//!
//! Every key is optional and defaults to the nominal experiment: 390 nm pump
//! of waist 0.17 mm, 2 mm crystal, Δφ = 0.012 rad, 40 μm slits, f = 100 mm.
//!
//! ```toml
//! pump_width_mm = 0.17
//! phase_match = "gaussian_angular"
//! delta_phi_rad = 0.012
//! background_subtraction = true
//! seed = 42
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::apparatus::{FixedSlit, ScanConfig, ScanMode};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::model::{BiphotonModel, Crystal, PhaseMatchModel, PumpBeam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMatchKind {
    GaussianAngular,
    ParaxialSinc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pump_wavelength_nm: f64,
    pub pump_width_mm: f64,
    pub crystal_length_mm: f64,
    pub phase_match: PhaseMatchKind,
    /// Singles angular std; only read by `gaussian_angular`.
    pub delta_phi_rad: f64,
    pub walkoff_rad: f64,
    pub chi: f64,

    pub oversample: f64,
    pub min_n: usize,

    pub slit_width_mm: f64,
    pub focal_length_mm: f64,
    pub position_scan_start_mm: f64,
    pub position_scan_step_mm: f64,
    pub position_scan_points: usize,
    pub momentum_scan_start_mm: f64,
    pub momentum_scan_step_mm: f64,
    pub momentum_scan_points: usize,
    /// Fixed-slit positions; the marginal peak when absent.
    pub position_fixed_slit_mm: Option<f64>,
    pub momentum_fixed_slit_mm: Option<f64>,
    pub background_fraction: f64,
    pub wing_width_factor: f64,
    pub peak_counts: u64,

    pub background_subtraction: bool,
    pub slit_correction: bool,
    /// Conditioning points for the theory conditionals; marginal peaks when absent.
    pub condition_x2_mm: Option<f64>,
    pub condition_p2_radpermm: Option<f64>,

    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pos = ScanConfig::nominal(ScanMode::Position);
        let mom = ScanConfig::nominal(ScanMode::Momentum);
        Self {
            pump_wavelength_nm: 390.0,
            pump_width_mm: 0.17,
            crystal_length_mm: 2.0,
            phase_match: PhaseMatchKind::GaussianAngular,
            delta_phi_rad: 0.012,
            walkoff_rad: 0.0,
            chi: 1.0,
            oversample: 4.0,
            min_n: 64,
            slit_width_mm: pos.slit_width_mm,
            focal_length_mm: pos.focal_length_mm,
            position_scan_start_mm: pos.scan_start_mm,
            position_scan_step_mm: pos.scan_step_mm,
            position_scan_points: pos.scan_points,
            momentum_scan_start_mm: mom.scan_start_mm,
            momentum_scan_step_mm: mom.scan_step_mm,
            momentum_scan_points: mom.scan_points,
            position_fixed_slit_mm: None,
            momentum_fixed_slit_mm: None,
            background_fraction: pos.background_fraction,
            wing_width_factor: pos.wing_width_factor,
            peak_counts: pos.peak_counts,
            background_subtraction: false,
            slit_correction: true,
            condition_x2_mm: None,
            condition_p2_radpermm: None,
            seed: 1,
            output_dir: PathBuf::from("eprsim-out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("pump_wavelength_nm", self.pump_wavelength_nm)?;
        require_positive("pump_width_mm", self.pump_width_mm)?;
        require_positive("crystal_length_mm", self.crystal_length_mm)?;
        if self.phase_match == PhaseMatchKind::GaussianAngular {
            require_positive("delta_phi_rad", self.delta_phi_rad)?;
        }
        require_finite("walkoff_rad", self.walkoff_rad)?;
        require_positive("chi", self.chi)?;
        if !(self.oversample.is_finite() && self.oversample >= 4.0) {
            return Err(Error::invalid(
                "oversample",
                format!("must be >= 4, got {}", self.oversample),
            ));
        }
        if !(self.min_n >= 4 && self.min_n.is_power_of_two()) {
            return Err(Error::invalid(
                "min_n",
                format!("must be a power of two >= 4, got {}", self.min_n),
            ));
        }
        for (name, v) in [
            ("condition_x2_mm", self.condition_x2_mm),
            ("condition_p2_radpermm", self.condition_p2_radpermm),
        ] {
            if let Some(v) = v {
                require_finite(name, v)?;
            }
        }
        self.scan_config(ScanMode::Position).validate()?;
        self.scan_config(ScanMode::Momentum).validate()?;
        Ok(())
    }

    pub fn phase_match_model(&self) -> Result<PhaseMatchModel> {
        match self.phase_match {
            PhaseMatchKind::GaussianAngular => PhaseMatchModel::gaussian(self.delta_phi_rad),
            PhaseMatchKind::ParaxialSinc => Ok(PhaseMatchModel::ParaxialSinc),
        }
    }

    pub fn model(&self) -> Result<BiphotonModel> {
        let pump = PumpBeam::new(self.pump_wavelength_nm, self.pump_width_mm)?;
        let crystal = Crystal::degenerate(
            self.crystal_length_mm,
            &pump,
            self.phase_match_model()?,
            self.walkoff_rad,
        )?;
        BiphotonModel::new(pump, crystal, self.chi)
    }

    /// Scan settings for one arm. The momentum scan draws from `seed + 1`.
    pub fn scan_config(&self, mode: ScanMode) -> ScanConfig {
        let (start, step, points, fixed, seed) = match mode {
            ScanMode::Position => (
                self.position_scan_start_mm,
                self.position_scan_step_mm,
                self.position_scan_points,
                self.position_fixed_slit_mm,
                self.seed,
            ),
            ScanMode::Momentum => (
                self.momentum_scan_start_mm,
                self.momentum_scan_step_mm,
                self.momentum_scan_points,
                self.momentum_fixed_slit_mm,
                self.seed.wrapping_add(1),
            ),
        };
        ScanConfig {
            mode,
            slit_width_mm: self.slit_width_mm,
            focal_length_mm: self.focal_length_mm,
            scan_start_mm: start,
            scan_step_mm: step,
            scan_points: points,
            fixed_slit: fixed.map_or(FixedSlit::AtPeak, FixedSlit::Explicit),
            background_fraction: self.background_fraction,
            wing_width_factor: self.wing_width_factor,
            peak_counts: self.peak_counts,
            seed,
        }
    }

    /// Every resolved field as `(key, value)` pairs in key order; absent
    /// optional fields are written as `none`.
    pub fn echo(&self) -> Vec<(String, String)> {
        let value = serde_json::to_value(self).expect("config serializes");
        let serde_json::Value::Object(map) = value else {
            unreachable!("config serializes to an object")
        };
        map.into_iter()
            .map(|(k, v)| {
                let text = match v {
                    serde_json::Value::Null => "none".to_string(),
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, text)
            })
            .collect()
    }
}
