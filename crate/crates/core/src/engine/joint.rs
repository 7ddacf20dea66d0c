//! Generic 2-D path: the amplitude sampled on a square `(u1, u2)` grid and
//! transformed with a full 2-D DFT. Needed when the amplitude does not
//! factorize, and used to cross-check the factorized path.

use num_complex::Complex64;

use super::density::Density2D;
use super::factorized::Representation;
use super::grid::AxisGrid;
use super::transform::{transform_2d, Direction};
use crate::error::Result;
use crate::model::BiphotonModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Joint2D {
    grid1: AxisGrid,
    grid2: AxisGrid,
    values: Vec<Complex64>,
    representation: Representation,
}

impl Joint2D {
    pub fn from_model(model: &BiphotonModel, grid1: AxisGrid, grid2: AxisGrid) -> Self {
        let mut values = Vec::with_capacity(grid1.n() * grid2.n());
        for q1 in grid1.coords() {
            values.extend(grid2.coords().map(|q2| model.amplitude(q1, q2)));
        }
        Self {
            grid1,
            grid2,
            values,
            representation: Representation::Momentum,
        }
    }

    pub fn grids(&self) -> (&AxisGrid, &AxisGrid) {
        (&self.grid1, &self.grid2)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    fn transformed(&self, direction: Direction, representation: Representation) -> Self {
        let (g1, g2) = (self.grid1.dual(), self.grid2.dual());
        Self {
            values: transform_2d(&self.values, (&self.grid1, &self.grid2), (&g1, &g2), direction),
            grid1: g1,
            grid2: g2,
            representation,
        }
    }

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

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid1.spacing() * self.grid2.spacing()
    }

    pub fn density(&self) -> Result<Density2D> {
        Density2D::from_amplitude(self.grid1, self.grid2, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhaseMatchModel;
    use approx::assert_relative_eq;

    #[test]
    fn parseval_and_round_trip_2d() {
        let m = BiphotonModel::degenerate(390.0, 0.02, 2.0, PhaseMatchModel::ParaxialSinc, 0.01).unwrap();
        let g = AxisGrid::new(128, 8.0, 0.0).unwrap();
        let q = Joint2D::from_model(&m, g, g);
        let x = q.to_position();
        assert_relative_eq!(q.norm_sq(), x.norm_sq(), max_relative = 1e-10);
        let back = x.to_momentum();
        let err = back
            .values()
            .iter()
            .zip(q.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}
