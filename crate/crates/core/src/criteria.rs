//! Inferred and joint variances, EPR and Mancini verdicts, and the
//! closed-form widths expected from the source parameters.
//!
//! Momenta are wavenumbers (ħ = 1), so every variance product is in ħ².

use serde::{Deserialize, Serialize};

use crate::engine::Density1D;
use crate::error::{Error, Result};
use crate::model::BiphotonModel;

/// Lower bound on `Δx_inf² Δp_inf²` for a local-realistic completion.
pub const EPR_BOUND: f64 = 0.25;
/// Lower bound on `Δx₁₂² Δp₁₂²` for separable states.
pub const MANCINI_BOUND: f64 = 1.0;
/// Position-width coefficient of the closed-form prediction
/// `Δx_inf = 1.88 / (k Δφ)`.
pub const THEORY_POSITION_COEFF: f64 = 1.88;

fn require_conditioning(cond: &Density1D) -> Result<f64> {
    cond.conditioning().ok_or(Error::MissingConditioning)
}

/// Variance of `x1 - x2` under `P(x1 | x2)`, in mm².
pub fn inferred_position_variance(cond: &Density1D) -> Result<f64> {
    let x2 = require_conditioning(cond)?;
    Ok(cond.moments_about(x2).1)
}

/// Variance of `p1 + p2` under `P(p1 | p2)`, in (ħ/mm)².
pub fn inferred_momentum_variance(cond: &Density1D) -> Result<f64> {
    let p2 = require_conditioning(cond)?;
    Ok(cond.moments_about(-p2).1)
}

pub fn variance_product(dx2: f64, dp2: f64) -> f64 {
    dx2 * dp2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub violated: bool,
    /// `bound / product`; infinite for a zero product.
    pub margin: f64,
    pub log10_margin: f64,
}

fn verdict(product: f64, bound: f64) -> Verdict {
    let margin = if product > 0.0 { bound / product } else { f64::INFINITY };
    Verdict {
        violated: product < bound,
        margin,
        log10_margin: margin.log10(),
    }
}

/// Violated iff `product < ħ²/4`.
pub fn epr_verdict(product: f64) -> Verdict {
    verdict(product, EPR_BOUND)
}

/// Inseparable iff `dx12² · dp12² < ħ²`.
pub fn mancini_verdict(dx12_sq: f64, dp12_sq: f64) -> Verdict {
    verdict(dx12_sq * dp12_sq, MANCINI_BOUND)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub dx_mm: f64,
    pub dp_invmm: f64,
    pub product_hbar2: f64,
}

/// `Δp = 1/(2w)` from the pump, `Δx = 1.88/(k_d Δφ)` from the emission width.
pub fn theory_predictions(model: &BiphotonModel) -> Result<TheoryPrediction> {
    let dp = 0.5 / model.pump().width_mm();
    let dphi = model.emission_angular_width()?;
    let dx = THEORY_POSITION_COEFF / (model.k_degenerate() * dphi);
    Ok(TheoryPrediction {
        dx_mm: dx,
        dp_invmm: dp,
        product_hbar2: (dx * dp).powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TheoryGrid,
    SimulatedScan,
    ExternalData,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::TheoryGrid => "theory_grid",
            Provenance::SimulatedScan => "simulated_scan",
            Provenance::ExternalData => "external_data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub dx_inf_mm: f64,
    pub dp_inf_invmm: f64,
    pub product_hbar2: f64,
    pub dx12_mm: f64,
    pub dp12_invmm: f64,
    pub joint_product_hbar2: f64,
    pub epr_bound: f64,
    pub mancini_bound: f64,
    pub epr_violated: bool,
    pub inseparable: bool,
    pub epr_margin: f64,
    pub mancini_margin: f64,
    pub theory_dx_mm: f64,
    pub theory_dp_invmm: f64,
    pub theory_product_hbar2: f64,
    pub provenance: Provenance,
}

impl CriteriaReport {
    /// Builds the report from variances (mm², (ħ/mm)²).
    pub fn from_variances(
        dx_inf_sq: f64,
        dp_inf_sq: f64,
        dx12_sq: f64,
        dp12_sq: f64,
        theory: TheoryPrediction,
        provenance: Provenance,
    ) -> Result<Self> {
        for (name, v) in [
            ("dx_inf_sq", dx_inf_sq),
            ("dp_inf_sq", dp_inf_sq),
            ("dx12_sq", dx12_sq),
            ("dp12_sq", dp12_sq),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Degenerate(format!("{name} = {v} is not a variance")));
            }
        }
        let product = variance_product(dx_inf_sq, dp_inf_sq);
        let epr = epr_verdict(product);
        let mancini = mancini_verdict(dx12_sq, dp12_sq);
        let report = Self {
            dx_inf_mm: dx_inf_sq.sqrt(),
            dp_inf_invmm: dp_inf_sq.sqrt(),
            product_hbar2: product,
            dx12_mm: dx12_sq.sqrt(),
            dp12_invmm: dp12_sq.sqrt(),
            joint_product_hbar2: dx12_sq * dp12_sq,
            epr_bound: EPR_BOUND,
            mancini_bound: MANCINI_BOUND,
            epr_violated: epr.violated,
            inseparable: mancini.violated,
            epr_margin: epr.margin,
            mancini_margin: mancini.margin,
            theory_dx_mm: theory.dx_mm,
            theory_dp_invmm: theory.dp_invmm,
            theory_product_hbar2: theory.product_hbar2,
            provenance,
        };
        report.check_invariants()?;
        Ok(report)
    }

    /// Product identities and verdict thresholds.
    pub fn check_invariants(&self) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        let ok = close(self.product_hbar2, (self.dx_inf_mm * self.dp_inf_invmm).powi(2))
            && close(self.joint_product_hbar2, (self.dx12_mm * self.dp12_invmm).powi(2))
            && self.epr_violated == (self.product_hbar2 < EPR_BOUND)
            && self.inseparable == (self.joint_product_hbar2 < MANCINI_BOUND);
        if ok {
            Ok(())
        } else {
            Err(Error::Degenerate(format!("inconsistent report: {self:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::AxisGrid;
    use crate::model::PhaseMatchModel;
    use approx::assert_relative_eq;

    fn gaussian_conditional(center: f64, sigma: f64, spacing: f64, conditioning: f64) -> Density1D {
        let g = AxisGrid::new(4096, spacing, center).unwrap();
        let v = g
            .coords()
            .map(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        Density1D::from_values(g, v).unwrap().with_conditioning(conditioning)
    }

    #[test]
    fn delta_conditionals_give_zero() {
        let g = AxisGrid::new(8, 0.1, 0.3).unwrap();
        let mut v = vec![0.0; 8];
        v[4] = 1.0;
        let d = Density1D::from_values(g, v).unwrap();
        assert_eq!(inferred_position_variance(&d.clone().with_conditioning(0.3)).unwrap(), 0.0);
        let g = AxisGrid::new(8, 0.1, -0.3).unwrap();
        let mut v = vec![0.0; 8];
        v[4] = 1.0;
        let d = Density1D::from_values(g, v).unwrap().with_conditioning(0.3);
        assert_eq!(inferred_momentum_variance(&d).unwrap(), 0.0);
    }

    #[test]
    fn quoted_conditional_widths() {
        let d = gaussian_conditional(0.4, 0.027, 0.001, 0.4);
        assert_relative_eq!(inferred_position_variance(&d).unwrap(), 7.29e-4, max_relative = 1e-9);
        let d = gaussian_conditional(-5.0, 3.7, 0.05, 5.0);
        assert_relative_eq!(inferred_momentum_variance(&d).unwrap(), 13.69, max_relative = 1e-9);
    }

    #[test]
    fn shift_and_reflection_invariance() {
        let a = inferred_position_variance(&gaussian_conditional(0.01, 0.02, 0.0005, 0.0)).unwrap();
        let b = inferred_position_variance(&gaussian_conditional(1.01, 0.02, 0.0005, 1.0)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
        let a = inferred_momentum_variance(&gaussian_conditional(-2.0, 3.0, 0.05, 2.5)).unwrap();
        let b = inferred_momentum_variance(&gaussian_conditional(2.0, 3.0, 0.05, -2.5)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }

    #[test]
    fn missing_conditioning_rejected() {
        let g = AxisGrid::new(8, 0.1, 0.0).unwrap();
        let d = Density1D::from_values(g, vec![1.0; 8]).unwrap();
        assert!(matches!(inferred_position_variance(&d), Err(Error::MissingConditioning)));
        assert!(matches!(inferred_momentum_variance(&d), Err(Error::MissingConditioning)));
    }

    #[test]
    fn products_and_verdicts() {
        let p = variance_product(7.29e-4, 13.69);
        assert_relative_eq!(p, 9.98e-3, max_relative = 1e-3);
        assert_eq!(variance_product(0.0, 13.69), 0.0);

        let v = epr_verdict(0.01);
        assert!(v.violated);
        assert_relative_eq!(v.margin, 25.0, max_relative = 1e-12);
        assert!(!epr_verdict(0.25).violated);
        let v = epr_verdict(0.004);
        assert!(v.violated);
        assert_relative_eq!(v.margin, 62.5, max_relative = 1e-12);

        let v = mancini_verdict(0.1, 0.1);
        assert!(v.violated);
        assert_relative_eq!(v.log10_margin, 2.0, max_relative = 1e-12);
        assert!(!mancini_verdict(1.0, 1.0).violated);
    }

    #[test]
    fn theory_for_nominal_parameters() {
        let m = BiphotonModel::degenerate(390.0, 0.17, 2.0, PhaseMatchModel::gaussian(0.012).unwrap(), 0.0)
            .unwrap();
        let t = theory_predictions(&m).unwrap();
        assert_relative_eq!(t.dp_invmm, 2.941, max_relative = 2e-4);
        assert_relative_eq!(t.dx_mm, 0.01945, max_relative = 5e-4);
        assert_relative_eq!(t.product_hbar2, 3.27e-3, max_relative = 3e-3);
    }

    #[test]
    fn report_invariants_hold() {
        let t = TheoryPrediction {
            dx_mm: 0.02,
            dp_invmm: 3.0,
            product_hbar2: 3.6e-3,
        };
        let r = CriteriaReport::from_variances(7.29e-4, 13.69, 7.0e-4, 13.0, t, Provenance::SimulatedScan).unwrap();
        assert!(r.epr_violated && r.inseparable);
        assert_relative_eq!(r.product_hbar2, (r.dx_inf_mm * r.dp_inf_invmm).powi(2), max_relative = 1e-12);
        assert!(CriteriaReport::from_variances(-1.0, 1.0, 1.0, 1.0, t, Provenance::TheoryGrid).is_err());
    }
}
