use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::AxisGrid;
use crate::error::{Error, Result};

/// Which photon an axis belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    One,
    Two,
}

/// Normalized non-negative density on one axis. Conditional densities carry
/// the value of the partner coordinate they were conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density1D {
    grid: AxisGrid,
    values: Vec<f64>,
    conditioning: Option<f64>,
}

fn normalize(values: &mut [f64], cell: f64) -> Result<()> {
    let total: f64 = values.iter().sum::<f64>() * cell;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroAmplitude);
    }
    values.iter_mut().for_each(|v| *v /= total);
    Ok(())
}

impl Density1D {
    pub fn from_values(grid: AxisGrid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(
                "values",
                format!("length {} does not match grid size {}", values.len(), grid.n()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("values", format!("density value {bad} is not >= 0")));
        }
        normalize(&mut values, grid.spacing())?;
        Ok(Self {
            grid,
            values,
            conditioning: None,
        })
    }

    /// Born rule: `|amplitude|²`, normalized.
    pub fn from_amplitude(grid: AxisGrid, amplitude: &[Complex64]) -> Result<Self> {
        Self::from_values(grid, amplitude.iter().map(|a| a.norm_sqr()).collect())
    }

    pub fn with_conditioning(mut self, value: f64) -> Self {
        self.conditioning = Some(value);
        self
    }

    pub fn grid(&self) -> &AxisGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn conditioning(&self) -> Option<f64> {
        self.conditioning
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    /// Mean and variance of `coord - offset`.
    pub fn moments_about(&self, offset: f64) -> (f64, f64) {
        let h = self.grid.spacing();
        let mean: f64 = self
            .grid
            .coords()
            .zip(&self.values)
            .map(|(x, p)| (x - offset) * p)
            .sum::<f64>()
            * h;
        let var: f64 = self
            .grid
            .coords()
            .zip(&self.values)
            .map(|(x, p)| {
                let d = x - offset - mean;
                d * d * p
            })
            .sum::<f64>()
            * h;
        (mean, var)
    }

    pub fn mean(&self) -> f64 {
        self.moments_about(0.0).0
    }

    pub fn variance(&self) -> f64 {
        self.moments_about(0.0).1
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Coordinate of the maximum; ties go to the node nearest the grid center.
    pub fn argmax(&self) -> f64 {
        argmax_toward_center(&self.values, |i| self.grid.coord(i), self.grid.center())
    }

    /// Catmull-Rom interpolation, zero outside the grid, clamped at 0.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.grid.n();
        let t = self.grid.position_of(x);
        if !(t >= 0.0 && t <= (n - 1) as f64) {
            return 0.0;
        }
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        let at = |k: isize| -> f64 {
            if k < 0 || k >= n as isize {
                0.0
            } else {
                self.values[k as usize]
            }
        };
        let i = i as isize;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let v = p1
            + 0.5
                * f
                * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        v.max(0.0)
    }
}

pub(crate) fn argmax_toward_center(values: &[f64], coord: impl Fn(usize) -> f64, center: f64) -> f64 {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        let b = values[best];
        if *v > b || (*v == b && (coord(i) - center).abs() < (coord(best) - center).abs()) {
            best = i;
        }
    }
    coord(best)
}

/// Normalized joint density, row-major `values[i1 * n2 + i2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density2D {
    grid1: AxisGrid,
    grid2: AxisGrid,
    values: Vec<f64>,
}

impl Density2D {
    pub fn from_values(grid1: AxisGrid, grid2: AxisGrid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid1.n() * grid2.n() {
            return Err(Error::invalid("values", "length does not match grid"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("values", "density values must be finite and >= 0"));
        }
        normalize(&mut values, grid1.spacing() * grid2.spacing())?;
        Ok(Self { grid1, grid2, values })
    }

    pub fn from_amplitude(grid1: AxisGrid, grid2: AxisGrid, amplitude: &[Complex64]) -> Result<Self> {
        Self::from_values(grid1, grid2, amplitude.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Samples `f(u1, u2)` on the grid and normalizes.
    pub fn from_fn(grid1: AxisGrid, grid2: AxisGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let c2: Vec<f64> = grid2.coords().collect();
        let mut values = Vec::with_capacity(grid1.n() * grid2.n());
        for u1 in grid1.coords() {
            values.extend(c2.iter().map(|&u2| f(u1, u2)));
        }
        Self::from_values(grid1, grid2, values)
    }

    pub fn grid(&self, axis: Axis) -> &AxisGrid {
        match axis {
            Axis::One => &self.grid1,
            Axis::Two => &self.grid2,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid2.n() + i2]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid1.spacing() * self.grid2.spacing()
    }

    pub fn marginal(&self, axis: Axis) -> Result<Density1D> {
        let (n1, n2) = (self.grid1.n(), self.grid2.n());
        let values = match axis {
            Axis::One => (0..n1)
                .map(|i| self.values[i * n2..(i + 1) * n2].iter().sum::<f64>())
                .collect(),
            Axis::Two => {
                let mut m = vec![0.0; n2];
                for row in self.values.chunks_exact(n2) {
                    m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                }
                m
            }
        };
        Density1D::from_values(*self.grid(axis), values)
    }

    /// Density of the free photon given the photon on `fixed` at `value`,
    /// snapped to the nearest grid line.
    pub fn conditional_slice(&self, fixed: Axis, value: f64) -> Result<Density1D> {
        let fixed_grid = self.grid(fixed);
        let idx = fixed_grid.nearest_index(value).ok_or(Error::OutOfGrid {
            value,
            min: fixed_grid.lower_edge(),
            max: fixed_grid.upper_edge(),
        })?;
        let snapped = fixed_grid.coord(idx);
        let n2 = self.grid2.n();
        let (free, values): (AxisGrid, Vec<f64>) = match fixed {
            Axis::Two => (
                self.grid1,
                (0..self.grid1.n()).map(|i1| self.values[i1 * n2 + idx]).collect(),
            ),
            Axis::One => (self.grid2, self.values[idx * n2..(idx + 1) * n2].to_vec()),
        };
        let integral = values.iter().sum::<f64>() * free.spacing();
        if !(integral >= 1e-12) {
            return Err(Error::SliceUnderflow {
                value: snapped,
                integral,
            });
        }
        Ok(Density1D::from_values(free, values)?.with_conditioning(snapped))
    }

    /// Variance of `a u1 + b u2`.
    pub fn linear_combo_variance(&self, a: f64, b: f64) -> f64 {
        let cell = self.grid1.spacing() * self.grid2.spacing();
        let c2: Vec<f64> = self.grid2.coords().collect();
        let combos = || {
            self.grid1.coords().enumerate().flat_map({
                let c2 = &c2;
                move |(i1, u1)| {
                    c2.iter()
                        .enumerate()
                        .map(move |(i2, u2)| (a * u1 + b * u2, i1 * c2.len() + i2))
                }
            })
        };
        let mean: f64 = combos().map(|(s, i)| s * self.values[i]).sum::<f64>() * cell;
        combos()
            .map(|(s, i)| (s - mean) * (s - mean) * self.values[i])
            .sum::<f64>()
            * cell
    }
}
