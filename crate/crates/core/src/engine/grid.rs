use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BiphotonModel, PhaseMatchModel};

/// Uniform axis `center + (i - n/2) * spacing`, `i in 0..n`, with `n` a
/// power of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    n: usize,
    spacing: f64,
    center: f64,
}

impl AxisGrid {
    pub fn new(n: usize, spacing: f64, center: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid("n", format!("must be a power of two >= 4, got {n}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid("spacing", format!("must be > 0, got {spacing}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid("center", "must be finite"));
        }
        Ok(Self { n, spacing, center })
    }

    /// Smallest power-of-two grid of the given spacing whose extent is at
    /// least `min_extent`.
    pub fn covering(min_extent: f64, spacing: f64, center: f64, min_n: usize) -> Result<Self> {
        let cells = (min_extent / spacing).ceil();
        if !cells.is_finite() || cells > (1u64 << 26) as f64 {
            return Err(Error::Degenerate(format!(
                "grid would need {cells} cells (extent {min_extent}, spacing {spacing})"
            )));
        }
        let n = (cells as usize).max(min_n).max(4).next_power_of_two();
        Self::new(n, spacing, center)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.center + (i as f64 - (self.n / 2) as f64) * self.spacing
    }

    pub fn coords(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.coord(i))
    }

    pub fn first(&self) -> f64 {
        self.coord(0)
    }

    pub fn last(&self) -> f64 {
        self.coord(self.n - 1)
    }

    /// Lower edge of the first cell.
    pub fn lower_edge(&self) -> f64 {
        self.first() - 0.5 * self.spacing
    }

    pub fn upper_edge(&self) -> f64 {
        self.last() + 0.5 * self.spacing
    }

    /// Fractional index of `x`.
    pub fn position_of(&self, x: f64) -> f64 {
        (x - self.center) / self.spacing + (self.n / 2) as f64
    }

    /// Index of the node nearest to `x`, or `None` outside the cell edges.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let r = self.position_of(x).round();
        if r >= 0.0 && r < self.n as f64 && x >= self.lower_edge() && x <= self.upper_edge() {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Fourier-dual grid: `spacing · dual_spacing · n = 2π`, centered at 0.
    pub fn dual(&self) -> AxisGrid {
        AxisGrid {
            n: self.n,
            spacing: 2.0 * PI / (self.n as f64 * self.spacing),
            center: 0.0,
        }
    }

    /// Same extent, half the spacing.
    pub fn refined(&self) -> AxisGrid {
        AxisGrid {
            n: self.n * 2,
            spacing: self.spacing / 2.0,
            center: self.center,
        }
    }

    /// Coordinates multiplied by `factor` (may be negative for a reflected
    /// axis; the spacing stays positive and the node order is unchanged).
    pub(crate) fn scaled(&self, factor: f64, center: f64) -> AxisGrid {
        AxisGrid {
            n: self.n,
            spacing: self.spacing * factor.abs(),
            center,
        }
    }
}

/// Momentum grids for the two factors of the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorGrids {
    pub plus: AxisGrid,
    pub minus: AxisGrid,
}

/// Samples per std required in each representation at oversample 4.
const SAMPLES_PER_STD: f64 = 32.0;
/// Largest sinc argument `L q²/(8 k)` kept on the grid, per oversample².
const SINC_ARG_PER_OVERSAMPLE_SQ: f64 = 250.0;

impl FactorGrids {
    /// Chooses the `q_+` and `q_-` grids.
    ///
    /// Each momentum grid has at least 32 samples per momentum std; its
    /// extent covers `oversample` momentum stds (`oversample · k_d Δφ` for
    /// `q_-`), and is wide enough that the dual position grid resolves the
    /// position std with `8 · oversample` samples and spans `oversample`
    /// position stds.
    pub fn for_model(model: &BiphotonModel, oversample: f64) -> Result<Self> {
        if !(oversample.is_finite() && oversample >= 4.0) {
            return Err(Error::invalid("oversample", format!("must be >= 4, got {oversample}")));
        }
        let sigma_plus = model.pump().momentum_std();
        let plus = gaussian_factor_grid(sigma_plus, 1.0 / (2.0 * sigma_plus), sigma_plus, oversample)?;

        let minus = match model.crystal().phase_match() {
            PhaseMatchModel::GaussianAngular { delta_phi_rad } => {
                let sigma = model
                    .gaussian_minus_std()
                    .expect("gaussian variant has a minus std");
                let cover = model.k_degenerate() * delta_phi_rad;
                gaussian_factor_grid(sigma, 1.0 / (2.0 * sigma), cover, oversample)?
            }
            PhaseMatchModel::ParaxialSinc => sinc_factor_grid(model, oversample)?,
        };
        Ok(Self { plus, minus })
    }

    pub fn with_min_n(self, min_n: usize) -> Result<Self> {
        let grow = |g: AxisGrid| -> Result<AxisGrid> {
            if g.n >= min_n {
                Ok(g)
            } else {
                AxisGrid::covering(g.extent(), g.spacing, g.center, min_n)
            }
        };
        Ok(Self {
            plus: grow(self.plus)?,
            minus: grow(self.minus)?,
        })
    }

    /// Both grids with halved spacing and doubled `n`.
    pub fn refined(&self) -> Self {
        Self {
            plus: self.plus.refined(),
            minus: self.minus.refined(),
        }
    }
}

/// Same as [`FactorGrids::for_model`].
pub fn build_grids(model: &BiphotonModel, oversample: f64) -> Result<FactorGrids> {
    FactorGrids::for_model(model, oversample)
}

fn gaussian_factor_grid(sigma_q: f64, sigma_x: f64, cover_q: f64, oversample: f64) -> Result<AxisGrid> {
    if !(sigma_q > 0.0 && sigma_x > 0.0 && sigma_q.is_finite() && sigma_x.is_finite()) {
        return Err(Error::Degenerate(format!(
            "factor width is zero or non-finite (σ_q = {sigma_q}, σ_x = {sigma_x})"
        )));
    }
    let spacing = (sigma_q / SAMPLES_PER_STD).min(PI / (oversample * sigma_x));
    let extent = (2.0 * oversample * cover_q).max(2.0 * PI * 8.0 * oversample / sigma_x);
    AxisGrid::covering(extent, spacing, 0.0, 64)
}

fn sinc_factor_grid(model: &BiphotonModel, oversample: f64) -> Result<AxisGrid> {
    let k = model.k_degenerate();
    let l = model.crystal().length_mm();
    // q_- at which the sinc argument reaches 1
    let core = (8.0 * k / l).sqrt();
    let shift = 2.0 * k * model.crystal().walkoff_rad().abs();
    let half = oversample * SINC_ARG_PER_OVERSAMPLE_SQ.sqrt() * core + shift;
    // local period of sin(L q²/(8k)) at the grid edge
    let edge_period = 4.0 * PI * k / (l * half);
    let spacing = (core / SAMPLES_PER_STD).min(edge_period / 16.0);
    let position_scale = 1.0 / core;
    let extent = (2.0 * half).max(2.0 * PI * 8.0 * oversample / position_scale);
    AxisGrid::covering(extent, spacing, 0.0, 64)
}
