//! Two-photon source model: pump angular spectrum, phase matching and the
//! downconverted momentum amplitude.
//!
//! Transverse momenta are wavenumbers in rad/mm (ħ = 1), lengths in mm and
//! wavelengths in nm. The amplitude factorizes into a pump factor of
//! `q_+ = q1 + q2` and a phase-matching factor of `q_- = q1 - q2`; the
//! engine exploits this to run everything as two 1-D problems.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{Axis, FactorizedAmplitude, FactorGrids};
use crate::error::{require_finite, require_positive, Error, Result};

/// Position-width coefficient of the paraxial sinc emission profile:
/// `Δx_inf · k_d · Δφ` where `Δφ` is the singles angular intensity std and
/// `Δx_inf = 2σ(x_-)` is the inferred width for a plane-wave pump. A finite
/// pump waist trims the sinc tails and narrows `Δx_inf` a few percent.
///
/// The sinc shape is a one-parameter scale family, so this is a pure number.
/// Frozen from a converged quadrature of the sinc model (checked against
/// [`PhaseMatchModel::ParaxialSinc`] in the tests).
pub const SINC_POSITION_WIDTH_COEFF: f64 = 1.8974;

/// Edge-to-peak ratio below which the singles distribution counts as
/// captured by the grid.
pub const SINGLES_EDGE_LIMIT: f64 = 1e-6;

/// Converts a vacuum wavelength in nm to a wavenumber in rad/mm.
pub fn wavenumber_rad_per_mm(wavelength_nm: f64) -> f64 {
    2.0 * PI / (wavelength_nm * 1e-6)
}

/// Gaussian pump beam. `width_mm` is the std of the transverse intensity
/// profile, so the momentum intensity std is `1 / (2 w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpBeam {
    wavelength_nm: f64,
    width_mm: f64,
}

impl PumpBeam {
    pub fn new(wavelength_nm: f64, width_mm: f64) -> Result<Self> {
        Ok(Self {
            wavelength_nm: require_positive("pump_wavelength_nm", wavelength_nm)?,
            width_mm: require_positive("pump_width_mm", width_mm)?,
        })
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    pub fn width_mm(&self) -> f64 {
        self.width_mm
    }

    /// Std of `|E_p(q)|²` in rad/mm.
    pub fn momentum_std(&self) -> f64 {
        0.5 / self.width_mm
    }

    /// Plane-wave amplitude `exp(-q² w²)`: real, unit peak at `q = 0`.
    pub fn spectrum(&self, q_sum: f64) -> Complex64 {
        let w = self.width_mm;
        Complex64::new((-q_sum * q_sum * w * w).exp(), 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PhaseMatchModel {
    /// Degenerate collinear paraxial mismatch `Δk_z = q_-²/(4 k_d) + ρ q_-`
    /// with the finite-length factor `(e^{iΔk_z L} - 1)/(iΔk_z)`.
    ParaxialSinc,
    /// Gaussian surrogate of a sinc emission profile whose singles angular
    /// std is `delta_phi_rad`. The `q_-` intensity std is
    /// `k_d Δφ / SINC_POSITION_WIDTH_COEFF`, which reproduces the sinc
    /// profile's conditional position width exactly.
    GaussianAngular { delta_phi_rad: f64 },
}

impl PhaseMatchModel {
    pub fn gaussian(delta_phi_rad: f64) -> Result<Self> {
        require_positive("delta_phi_rad", delta_phi_rad)?;
        Ok(PhaseMatchModel::GaussianAngular { delta_phi_rad })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crystal {
    length_mm: f64,
    degenerate_wavelength_nm: f64,
    phase_match: PhaseMatchModel,
    walkoff_rad: f64,
}

impl Crystal {
    pub fn new(
        length_mm: f64,
        degenerate_wavelength_nm: f64,
        phase_match: PhaseMatchModel,
        walkoff_rad: f64,
    ) -> Result<Self> {
        require_positive("crystal_length_mm", length_mm)?;
        require_positive("degenerate_wavelength_nm", degenerate_wavelength_nm)?;
        require_finite("walkoff_rad", walkoff_rad)?;
        if let PhaseMatchModel::GaussianAngular { delta_phi_rad } = phase_match {
            require_positive("delta_phi_rad", delta_phi_rad)?;
        }
        Ok(Self {
            length_mm,
            degenerate_wavelength_nm,
            phase_match,
            walkoff_rad,
        })
    }

    /// Crystal operated at exact degeneracy: signal and idler at twice the
    /// pump wavelength.
    pub fn degenerate(
        length_mm: f64,
        pump: &PumpBeam,
        phase_match: PhaseMatchModel,
        walkoff_rad: f64,
    ) -> Result<Self> {
        Self::new(length_mm, 2.0 * pump.wavelength_nm(), phase_match, walkoff_rad)
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn degenerate_wavelength_nm(&self) -> f64 {
        self.degenerate_wavelength_nm
    }

    pub fn phase_match(&self) -> PhaseMatchModel {
        self.phase_match
    }

    pub fn walkoff_rad(&self) -> f64 {
        self.walkoff_rad
    }

    /// `k_d = 2π / λ_d` in rad/mm.
    pub fn k_degenerate(&self) -> f64 {
        wavenumber_rad_per_mm(self.degenerate_wavelength_nm)
    }
}

/// `(e^{i dkz L} - 1) / (i dkz)`, continuous through `dkz = 0` where it
/// equals `L`.
pub fn phase_matching_factor(dkz: f64, length_mm: f64) -> Complex64 {
    let half = 0.5 * dkz * length_mm;
    // (e^{2ih} - 1)/(i dkz) = L e^{ih} sin(h)/h
    let sinc = if half.abs() < 1e-4 {
        let h2 = half * half;
        1.0 - h2 / 6.0 + h2 * h2 / 120.0
    } else {
        half.sin() / half
    };
    Complex64::from_polar(length_mm * sinc, half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiphotonModel {
    pump: PumpBeam,
    crystal: Crystal,
    chi: f64,
}

impl BiphotonModel {
    pub fn new(pump: PumpBeam, crystal: Crystal, chi: f64) -> Result<Self> {
        require_positive("chi", chi)?;
        Ok(Self { pump, crystal, chi })
    }

    /// Degenerate model with `chi = 1`.
    pub fn degenerate(
        pump_wavelength_nm: f64,
        pump_width_mm: f64,
        crystal_length_mm: f64,
        phase_match: PhaseMatchModel,
        walkoff_rad: f64,
    ) -> Result<Self> {
        let pump = PumpBeam::new(pump_wavelength_nm, pump_width_mm)?;
        let crystal = Crystal::degenerate(crystal_length_mm, &pump, phase_match, walkoff_rad)?;
        Self::new(pump, crystal, 1.0)
    }

    pub fn pump(&self) -> &PumpBeam {
        &self.pump
    }

    pub fn crystal(&self) -> &Crystal {
        &self.crystal
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn k_degenerate(&self) -> f64 {
        self.crystal.k_degenerate()
    }

    pub fn pump_spectrum(&self, q_sum: f64) -> Complex64 {
        self.pump.spectrum(q_sum)
    }

    /// Longitudinal wavevector mismatch in rad/mm for the paraxial model.
    pub fn delta_kz(&self, q1: f64, q2: f64) -> Result<f64> {
        match self.crystal.phase_match {
            PhaseMatchModel::ParaxialSinc => Ok(self.delta_kz_of_difference(q1 - q2)),
            PhaseMatchModel::GaussianAngular { .. } => Err(Error::PhaseMismatchUndefined),
        }
    }

    fn delta_kz_of_difference(&self, q_minus: f64) -> f64 {
        q_minus * q_minus / (4.0 * self.k_degenerate()) + self.crystal.walkoff_rad * q_minus
    }

    /// `q_-` intensity std of the Gaussian surrogate, `None` for the sinc model.
    pub fn gaussian_minus_std(&self) -> Option<f64> {
        match self.crystal.phase_match {
            PhaseMatchModel::GaussianAngular { delta_phi_rad } => {
                Some(self.k_degenerate() * delta_phi_rad / SINC_POSITION_WIDTH_COEFF)
            }
            PhaseMatchModel::ParaxialSinc => None,
        }
    }

    /// Factor of `q_+ = q1 + q2`, including `chi`.
    pub fn plus_factor(&self, q_plus: f64) -> Complex64 {
        self.pump_spectrum(q_plus) * self.chi
    }

    /// Factor of `q_- = q1 - q2`.
    pub fn minus_factor(&self, q_minus: f64) -> Complex64 {
        match self.gaussian_minus_std() {
            Some(sigma) => {
                Complex64::new((-q_minus * q_minus / (4.0 * sigma * sigma)).exp(), 0.0)
            }
            None => phase_matching_factor(
                self.delta_kz_of_difference(q_minus),
                self.crystal.length_mm,
            ),
        }
    }

    /// Two-photon momentum amplitude `A(q1, q2)`.
    pub fn amplitude(&self, q1: f64, q2: f64) -> Complex64 {
        self.plus_factor(q1 + q2) * self.minus_factor(q1 - q2)
    }

    /// Std of the far-field singles angular intensity distribution in rad.
    ///
    /// Stored exactly for the Gaussian model; for the sinc model the singles
    /// marginal is computed on a dedicated wide grid and its edge checked.
    pub fn emission_angular_width(&self) -> Result<f64> {
        match self.crystal.phase_match {
            PhaseMatchModel::GaussianAngular { delta_phi_rad } => Ok(delta_phi_rad),
            PhaseMatchModel::ParaxialSinc => {
                let grids = FactorGrids::for_model(self, 4.0)?;
                self.emission_width_on(&grids)
            }
        }
    }

    /// Singles angular std computed by marginalizing `|A|²` on the given grids.
    pub fn emission_width_on(&self, grids: &FactorGrids) -> Result<f64> {
        let density = FactorizedAmplitude::from_model(self, grids).density()?;
        let singles = density.singles_marginal(Axis::One)?;
        let peak = singles.values().iter().cloned().fold(0.0, f64::max);
        let edge = singles.values()[0].max(*singles.values().last().unwrap());
        let ratio = edge / peak;
        if !(ratio < SINGLES_EDGE_LIMIT) {
            return Err(Error::GridTooNarrow {
                edge_ratio: ratio,
                limit: SINGLES_EDGE_LIMIT,
            });
        }
        Ok(singles.std() / self.k_degenerate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal_gaussian() -> BiphotonModel {
        BiphotonModel::degenerate(390.0, 0.17, 2.0, PhaseMatchModel::gaussian(0.012).unwrap(), 0.0)
            .unwrap()
    }

    fn nominal_sinc(walkoff: f64) -> BiphotonModel {
        BiphotonModel::degenerate(390.0, 0.17, 2.0, PhaseMatchModel::ParaxialSinc, walkoff).unwrap()
    }

    #[test]
    fn pump_peak_is_unit_real() {
        let m = nominal_gaussian();
        assert_eq!(m.pump_spectrum(0.0), Complex64::new(1.0, 0.0));
        assert_relative_eq!(
            m.pump_spectrum(1.0 / 0.17).norm(),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );
        for q in [-20.0, -3.0, 0.5, 7.0] {
            assert_eq!(m.pump_spectrum(q).im, 0.0);
        }
    }

    #[test]
    fn pump_momentum_std_by_quadrature() {
        let pump = PumpBeam::new(390.0, 0.17).unwrap();
        // trapezoid on ±40 std, independent of the engine grids
        let h = 1e-3;
        let (mut norm, mut m2) = (0.0, 0.0);
        let n = (40.0 * pump.momentum_std() / h) as i64;
        for i in -n..=n {
            let q = i as f64 * h;
            let p = pump.spectrum(q).norm_sqr();
            norm += p;
            m2 += q * q * p;
        }
        let std = (m2 / norm).sqrt();
        assert_relative_eq!(std, 1.0 / (2.0 * 0.17), max_relative = 1e-6);
        assert_relative_eq!(std, 2.941176, max_relative = 1e-6);
    }

    #[test]
    fn delta_kz_examples() {
        let m = nominal_sinc(0.0);
        assert_relative_eq!(m.k_degenerate(), 8055.366, max_relative = 1e-6);
        assert_eq!(m.delta_kz(3.0, 3.0).unwrap(), 0.0);
        // (96.66)² / (4 · 8055.4)
        let hand = 96.66f64.powi(2) / (4.0 * 8055.4);
        assert_relative_eq!(m.delta_kz(48.33, -48.33).unwrap(), hand, max_relative = 1e-5);
        assert_relative_eq!(hand, 0.2900, max_relative = 1e-3);
        assert_eq!(m.delta_kz(12.0, -40.0).unwrap(), m.delta_kz(-40.0, 12.0).unwrap());
        // grows with |q1 - q2|
        assert!(m.delta_kz(10.0, 0.0).unwrap() < m.delta_kz(20.0, 0.0).unwrap());
    }

    #[test]
    fn delta_kz_rejected_for_gaussian_model() {
        assert!(matches!(
            nominal_gaussian().delta_kz(1.0, 2.0),
            Err(Error::PhaseMismatchUndefined)
        ));
    }

    #[test]
    fn walkoff_adds_linear_term() {
        let m = nominal_sinc(0.05);
        let base = nominal_sinc(0.0).delta_kz(30.0, 10.0).unwrap();
        assert_relative_eq!(m.delta_kz(30.0, 10.0).unwrap(), base + 0.05 * 20.0, max_relative = 1e-14);
    }

    #[test]
    fn phase_matching_factor_examples() {
        assert_eq!(phase_matching_factor(0.0, 2.0), Complex64::new(2.0, 0.0));
        assert!(phase_matching_factor(PI, 2.0).norm() < 1e-15);

        let direct = {
            let i = Complex64::i();
            ((i * 0.5 * 2.0).exp() - 1.0) / (i * 0.5)
        };
        let f = phase_matching_factor(0.5, 2.0);
        assert_relative_eq!(f.re, direct.re, max_relative = 1e-13);
        assert_relative_eq!(f.im, direct.im, max_relative = 1e-13);
        assert_relative_eq!(f.norm(), 2.0 * 0.5f64.sin() / 0.5, max_relative = 1e-14);
        assert_relative_eq!(f.norm(), 1.9177, max_relative = 1e-4);
    }

    #[test]
    fn phase_matching_factor_continuous_at_zero() {
        let l = 2.0;
        for eps in [1e-9, 1e-7, 1e-5, 1e-4, 1e-3] {
            let f = phase_matching_factor(eps, l);
            assert!((f - l).norm() < l * eps * l / 2.0 * (1.0 + 1e-9), "eps={eps}");
        }
    }

    #[test]
    fn amplitude_peaks_on_anticorrelation_line() {
        let m = nominal_sinc(0.0);
        for d in [0.0, 40.0, 150.0] {
            let on = m.amplitude(d / 2.0, -d / 2.0).norm();
            for s in [0.5, 1.0, 3.0] {
                let off = m.amplitude((s + d) / 2.0, (s - d) / 2.0).norm();
                assert!(off < on);
            }
        }
    }

    #[test]
    fn amplitude_rank_one_in_rotated_coordinates() {
        use nalgebra::DMatrix;
        let m = nominal_sinc(0.0);
        let n = 64;
        let mat = DMatrix::from_fn(n, n, |i, j| {
            let qp = (i as f64 - 32.0) * 0.3;
            let qm = (j as f64 - 32.0) * 12.0;
            let (q1, q2) = ((qp + qm) / 2.0, (qp - qm) / 2.0);
            m.amplitude(q1, q2)
        });
        let sv = mat.singular_values();
        assert!(sv[1] < 1e-10 * sv[0], "σ2/σ1 = {}", sv[1] / sv[0]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PumpBeam::new(-390.0, 0.17).is_err());
        assert!(PumpBeam::new(390.0, 0.0).is_err());
        assert!(PhaseMatchModel::gaussian(0.0).is_err());
        let pump = PumpBeam::new(390.0, 0.17).unwrap();
        assert!(Crystal::degenerate(-2.0, &pump, PhaseMatchModel::ParaxialSinc, 0.0).is_err());
        assert!(Crystal::degenerate(
            2.0,
            &pump,
            PhaseMatchModel::GaussianAngular { delta_phi_rad: -1.0 },
            0.0
        )
        .is_err());
        let c = Crystal::degenerate(2.0, &pump, PhaseMatchModel::ParaxialSinc, 0.0).unwrap();
        assert_eq!(c.degenerate_wavelength_nm(), 780.0);
        assert!(BiphotonModel::new(pump, c, 0.0).is_err());
    }

    #[test]
    fn gaussian_emission_width_is_stored_value() {
        assert_eq!(nominal_gaussian().emission_angular_width().unwrap(), 0.012);
    }

    #[test]
    fn sinc_emission_width_regression() {
        // Frozen from the engine marginal; the brute-force oracle in
        // tests/model_oracles.rs checks it independently.
        let dphi = nominal_sinc(0.0).emission_angular_width().unwrap();
        assert_relative_eq!(dphi, SINC_EMISSION_WIDTH_L2, max_relative = 1e-6);
    }

    // Singles angular std of the paraxial sinc model at L = 2 mm, λ_d = 780 nm,
    // w = 0.17 mm on the default (oversample 4) grid.
    const SINC_EMISSION_WIDTH_L2: f64 = 0.009624062787798687;

    #[test]
    fn sinc_emission_width_scales_inverse_sqrt_length() {
        let short = nominal_sinc(0.0).emission_angular_width().unwrap();
        let long = BiphotonModel::degenerate(390.0, 0.17, 4.0, PhaseMatchModel::ParaxialSinc, 0.0)
            .unwrap()
            .emission_angular_width()
            .unwrap();
        assert_relative_eq!(long / short, 1.0 / 2f64.sqrt(), max_relative = 0.02);
    }
}
