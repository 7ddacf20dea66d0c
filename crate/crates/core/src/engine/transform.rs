//! Centered, continuum-normalized discrete Fourier transforms.
//!
//! `out(v_j) = Δu / √(2π) · Σ_m in(u_m) · exp(±i u_m v_j)` on a grid pair with
//! `Δu · Δv · n = 2π`, which makes `Σ|out|² Δv = Σ|in|² Δu` exact.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::AxisGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// momentum → position, kernel `e^{+iqx}`
    ToPosition,
    /// position → momentum, kernel `e^{-iqx}`
    ToMomentum,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::ToPosition => 1.0,
            Direction::ToMomentum => -1.0,
        }
    }
}

/// Plan plus the centering phases for one axis.
pub(crate) struct AxisTransform {
    fft: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
}

impl AxisTransform {
    pub(crate) fn new(from: &AxisGrid, to: &AxisGrid, direction: Direction) -> Self {
        let n = from.n();
        debug_assert_eq!(n, to.n());
        debug_assert!(
            ((from.spacing() * to.spacing() * n as f64) / (2.0 * PI) - 1.0).abs() < 1e-12,
            "grids are not Fourier duals"
        );
        let s = direction.sign();
        let mut planner = FftPlanner::new();
        let fft = match direction {
            Direction::ToPosition => planner.plan_fft_inverse(n),
            Direction::ToMomentum => planner.plan_fft_forward(n),
        };
        let half = (n / 2) as f64;
        let (cu, cv) = (from.center(), to.center());
        let alternate = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
        let pre = (0..n)
            .map(|m| {
                let offset = (m as f64 - half) * from.spacing();
                Complex64::from_polar(alternate(m), s * offset * cv)
            })
            .collect();
        let norm = from.spacing() / (2.0 * PI).sqrt();
        let post = (0..n)
            .map(|j| {
                let offset = (j as f64 - half) * to.spacing();
                Complex64::from_polar(norm * alternate(j), s * (cu * cv + cu * offset))
            })
            .collect();
        Self { fft, pre, post }
    }

    pub(crate) fn apply(&self, buf: &mut [Complex64]) {
        for (v, p) in buf.iter_mut().zip(&self.pre) {
            *v *= p;
        }
        self.fft.process(buf);
        for (v, p) in buf.iter_mut().zip(&self.post) {
            *v *= p;
        }
    }
}

pub(crate) fn transform_1d(
    values: &[Complex64],
    from: &AxisGrid,
    to: &AxisGrid,
    direction: Direction,
) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    AxisTransform::new(from, to, direction).apply(&mut buf);
    buf
}

/// Row-major `values[i1 * n2 + i2]`; transforms axis 2 (rows) then axis 1.
pub(crate) fn transform_2d(
    values: &[Complex64],
    from: (&AxisGrid, &AxisGrid),
    to: (&AxisGrid, &AxisGrid),
    direction: Direction,
) -> Vec<Complex64> {
    let (n1, n2) = (from.0.n(), from.1.n());
    let mut out = values.to_vec();
    let rows = AxisTransform::new(from.1, to.1, direction);
    for row in out.chunks_exact_mut(n2) {
        rows.apply(row);
    }
    let cols = AxisTransform::new(from.0, to.0, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); n1];
    for i2 in 0..n2 {
        for (i1, c) in column.iter_mut().enumerate() {
            *c = out[i1 * n2 + i2];
        }
        cols.apply(&mut column);
        for (i1, c) in column.iter().enumerate() {
            out[i1 * n2 + i2] = *c;
        }
    }
    out
}
