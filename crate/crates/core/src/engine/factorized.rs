//! Rotated-coordinate fast path.
//!
//! In momentum space `A(q1, q2) = F(q_+) G(q_-)` with `q_± = q1 ± q2`. The
//! conjugate position coordinates are `x_± = (x1 ± x2) / 2`, and
//! `ψ(x1, x2) = ½ F̃(x_+) G̃(x_-)`. Writing photon coordinates as
//! `u1 = c (p + m)`, `u2 = c (p - m)` with `(p, m)` the factor coordinates,
//! `c = 1/2` in momentum and `c = 1` in position.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::{Axis, Density1D};
use super::grid::{AxisGrid, FactorGrids};
use super::transform::{transform_1d, Direction};
use crate::error::{Error, Result};
use crate::model::BiphotonModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Momentum,
    Position,
}

impl Representation {
    /// `c` in `u1 = c (p + m)`.
    pub fn photon_scale(self) -> f64 {
        match self {
            Representation::Momentum => 0.5,
            Representation::Position => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedAmplitude {
    plus: AxisGrid,
    plus_values: Vec<Complex64>,
    minus: AxisGrid,
    minus_values: Vec<Complex64>,
    representation: Representation,
}

impl FactorizedAmplitude {
    /// Samples the model's `q_+` and `q_-` factors.
    pub fn from_model(model: &BiphotonModel, grids: &FactorGrids) -> Self {
        Self {
            plus: grids.plus,
            plus_values: grids.plus.coords().map(|q| model.plus_factor(q)).collect(),
            minus: grids.minus,
            minus_values: grids.minus.coords().map(|q| model.minus_factor(q)).collect(),
            representation: Representation::Momentum,
        }
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn plus(&self) -> (&AxisGrid, &[Complex64]) {
        (&self.plus, &self.plus_values)
    }

    pub fn minus(&self) -> (&AxisGrid, &[Complex64]) {
        (&self.minus, &self.minus_values)
    }

    /// Joint amplitude at factor nodes `(i_plus, i_minus)`, with the photon
    /// coordinates `(u1, u2)` it sits at.
    pub fn joint_at(&self, i_plus: usize, i_minus: usize) -> (f64, f64, Complex64) {
        let c = self.representation.photon_scale();
        let (p, m) = (self.plus.coord(i_plus), self.minus.coord(i_minus));
        let value = self.plus_values[i_plus] * self.minus_values[i_minus];
        let value = match self.representation {
            Representation::Momentum => value,
            Representation::Position => value * 0.5,
        };
        (c * (p + m), c * (p - m), value)
    }

    fn transformed(&self, direction: Direction, representation: Representation) -> Self {
        let (plus, minus) = (self.plus.dual(), self.minus.dual());
        Self {
            plus_values: transform_1d(&self.plus_values, &self.plus, &plus, direction),
            minus_values: transform_1d(&self.minus_values, &self.minus, &minus, direction),
            plus,
            minus,
            representation,
        }
    }

    /// Per-factor unitary transform to `(x_+, x_-)`; no-op if already there.
    pub fn to_position(&self) -> Self {
        match self.representation {
            Representation::Momentum => self.transformed(Direction::ToPosition, Representation::Position),
            Representation::Position => self.clone(),
        }
    }

    pub fn to_momentum(&self) -> Self {
        match self.representation {
            Representation::Position => self.transformed(Direction::ToMomentum, Representation::Momentum),
            Representation::Momentum => self.clone(),
        }
    }

    /// `Σ|F|² Δp · Σ|G|² Δm`.
    pub fn norm_sq(&self) -> f64 {
        let n = |v: &[Complex64], g: &AxisGrid| v.iter().map(|a| a.norm_sqr()).sum::<f64>() * g.spacing();
        n(&self.plus_values, &self.plus) * n(&self.minus_values, &self.minus)
    }

    pub fn density(&self) -> Result<FactorizedDensity> {
        Ok(FactorizedDensity {
            plus: Density1D::from_amplitude(self.plus, &self.plus_values)?,
            minus: Density1D::from_amplitude(self.minus, &self.minus_values)?,
            representation: self.representation,
        })
    }
}

/// Upper bound on node × output evaluations in a singles marginal.
const MARGINAL_WORK_LIMIT: usize = 1 << 25;
const PEAK_WORK_LIMIT: usize = 1 << 20;

/// Replaces runs of consecutive nodes by two half-mass points at
/// `mean ± std` of the run when the marginal would be too costly. Mass, mean
/// and variance of every run are kept exactly.
fn merge_nodes(nodes: Vec<(f64, f64)>, outputs: usize, limit: usize) -> Vec<(f64, f64)> {
    let work = nodes.len().saturating_mul(outputs);
    if work <= limit {
        return nodes;
    }
    let group = (2 * work).div_ceil(limit);
    nodes
        .chunks(group)
        .flat_map(|run| {
            let mass: f64 = run.iter().map(|n| n.1).sum();
            let mean = run.iter().map(|n| n.0 * n.1).sum::<f64>() / mass;
            let var = run.iter().map(|n| (n.0 - mean).powi(2) * n.1).sum::<f64>() / mass;
            let s = var.sqrt();
            [(mean - s, 0.5 * mass), (mean + s, 0.5 * mass)]
        })
        .collect()
}

/// Joint density `P(u1, u2) = P_+(p) P_-(m) / (2 c²)`; `p` and `m` are
/// independent under it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizedDensity {
    plus: Density1D,
    minus: Density1D,
    representation: Representation,
}

enum Narrow {
    Plus,
    Minus,
}

impl FactorizedDensity {
    pub fn plus(&self) -> &Density1D {
        &self.plus
    }

    pub fn minus(&self) -> &Density1D {
        &self.minus
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    fn scale(&self) -> f64 {
        self.representation.photon_scale()
    }

    /// Factor coordinates of the photon pair `(u1, u2)`.
    pub fn factor_coords(&self, u1: f64, u2: f64) -> (f64, f64) {
        let c2 = 2.0 * self.scale();
        ((u1 + u2) / c2, (u1 - u2) / c2)
    }

    /// Joint density at arbitrary `(u1, u2)` from interpolated factors.
    pub fn joint_pdf(&self, u1: f64, u2: f64) -> f64 {
        let (p, m) = self.factor_coords(u1, u2);
        let c = self.scale();
        self.plus.interpolate(p) * self.minus.interpolate(m) / (2.0 * c * c)
    }

    /// Variance of `a u1 + b u2` from the factor variances.
    pub fn linear_combo_variance(&self, a: f64, b: f64) -> f64 {
        let c = self.scale();
        c * c * ((a + b).powi(2) * self.plus.variance() + (a - b).powi(2) * self.minus.variance())
    }

    /// The factor that is narrower in photon coordinates is sampled on its
    /// nodes; the broad one is interpolated.
    fn narrow(&self) -> Narrow {
        if self.plus.std() <= self.minus.std() {
            Narrow::Plus
        } else {
            Narrow::Minus
        }
    }

    fn significant_nodes(d: &Density1D) -> impl Iterator<Item = (f64, f64)> + '_ {
        let peak = d.values().iter().cloned().fold(0.0, f64::max);
        let floor = peak * 1e-16;
        d.grid()
            .coords()
            .zip(d.values().iter().copied())
            .filter(move |(_, v)| *v > floor)
    }

    /// Singles density of one photon, marginalizing the other.
    pub fn singles_marginal(&self, photon: Axis) -> Result<Density1D> {
        self.singles_within(photon, MARGINAL_WORK_LIMIT)
    }

    /// Location of the singles maximum, from a coarser marginal.
    pub fn singles_peak(&self, photon: Axis) -> Result<f64> {
        Ok(self.singles_within(photon, PEAK_WORK_LIMIT)?.argmax())
    }

    fn singles_within(&self, photon: Axis, limit: usize) -> Result<Density1D> {
        let c = self.scale();
        let (narrow, broad, broad_is_minus) = match self.narrow() {
            Narrow::Plus => (&self.plus, &self.minus, true),
            Narrow::Minus => (&self.minus, &self.plus, false),
        };
        // u1/c = p + m ; u2/c = p - m
        let reflect = photon == Axis::Two && broad_is_minus;
        let bg = broad.grid();
        let center = if reflect { -c * bg.center() } else { c * bg.center() };
        let out = bg.scaled(c, center);
        let nodes = merge_nodes(Self::significant_nodes(narrow).collect(), out.n(), limit);
        let values = out
            .coords()
            .map(|u| {
                let s = u / c;
                nodes
                    .iter()
                    .map(|&(n, pn)| {
                        let b = match (photon, broad_is_minus) {
                            (Axis::One, _) => s - n,
                            (Axis::Two, true) => n - s,
                            (Axis::Two, false) => s + n,
                        };
                        pn * broad.interpolate(b)
                    })
                    .sum::<f64>()
            })
            .collect();
        Density1D::from_values(out, values)
    }

    /// `P(u_free | u_fixed = value)` on a grid aligned with the narrow
    /// factor's nodes.
    pub fn conditional(&self, fixed: Axis, value: f64) -> Result<Density1D> {
        let c = self.scale();
        let t = value / c;
        let (narrow_d, broad_d, narrow_is_minus) = match self.narrow() {
            Narrow::Plus => (&self.plus, &self.minus, false),
            Narrow::Minus => (&self.minus, &self.plus, true),
        };
        let ng = *narrow_d.grid();
        let n = ng.n();
        let spacing = 2.0 * c;
        // free photon coordinate at narrow node j, and broad coordinate there
        let (center, reversed): (f64, bool) = match (fixed, narrow_is_minus) {
            (Axis::Two, true) => (value + spacing * ng.center(), false),
            (Axis::Two, false) => (spacing * ng.center() - value, false),
            (Axis::One, true) => (value - spacing * ng.center() + spacing * ng.spacing(), true),
            (Axis::One, false) => (spacing * ng.center() - value, false),
        };
        let broad_at = |node: f64| -> f64 {
            match (fixed, narrow_is_minus) {
                (Axis::Two, true) => node + t,
                (Axis::Two, false) => node - t,
                (Axis::One, true) => t - node,
                (Axis::One, false) => t - node,
            }
        };
        let mut values: Vec<f64> = ng
            .coords()
            .zip(narrow_d.values())
            .map(|(node, pn)| pn * broad_d.interpolate(broad_at(node)))
            .collect();
        if reversed {
            values.reverse();
        }
        // marginal density of the fixed photon at `value`
        let integral = values.iter().sum::<f64>() * ng.spacing() / c;
        if !(integral >= 1e-12) {
            return Err(Error::SliceUnderflow { value, integral });
        }
        let grid = AxisGrid::new(n, spacing * ng.spacing(), center)?;
        Ok(Density1D::from_values(grid, values)?.with_conditioning(value))
    }
}
