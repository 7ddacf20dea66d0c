//! Slit-scan coincidence measurements.
//!
//! In position mode the crystal face is imaged onto the slit plane, so scan
//! coordinates are birth positions. In momentum mode each arm has a lens of
//! focal length `f` and a photon with transverse wavenumber `q` arrives at
//! `x = f q / k`; the scan runs in that focal plane and `mapping_scale = k/f`
//! converts back to rad/mm.
//!
//! One slit sits at a fixed position, the other is stepped across a lattice.
//! The expected coincidence rate at each step is the joint density
//! integrated over both slit windows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::engine::{Axis, AxisGrid, Density2D, FactorizedDensity, Representation};
use crate::error::{require_finite, require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Position,
    Momentum,
}

impl ScanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanMode::Position => "position",
            ScanMode::Momentum => "momentum",
        }
    }

    fn representation(self) -> Representation {
        match self {
            ScanMode::Position => Representation::Position,
            ScanMode::Momentum => Representation::Momentum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedSlit {
    /// Argmax of the fixed photon's marginal; ties go to the grid center.
    AtPeak,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub mode: ScanMode,
    pub slit_width_mm: f64,
    pub focal_length_mm: f64,
    pub scan_start_mm: f64,
    pub scan_step_mm: f64,
    pub scan_points: usize,
    pub fixed_slit: FixedSlit,
    pub background_fraction: f64,
    pub wing_width_factor: f64,
    pub peak_counts: u64,
    pub seed: u64,
}

impl ScanConfig {
    /// 40 μm slits, f = 100 mm, 1% wings ten times the core width, 10⁴
    /// peak counts. The lattice spans about ±5 core widths at the default
    /// source parameters.
    pub fn nominal(mode: ScanMode) -> Self {
        let (start, step, points) = match mode {
            ScanMode::Position => (-0.13, 0.005, 53),
            ScanMode::Momentum => (-0.2, 0.00625, 65),
        };
        Self {
            mode,
            slit_width_mm: 0.04,
            focal_length_mm: 100.0,
            scan_start_mm: start,
            scan_step_mm: step,
            scan_points: points,
            fixed_slit: FixedSlit::AtPeak,
            background_fraction: 0.01,
            wing_width_factor: 10.0,
            peak_counts: 10_000,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("slit_width_mm", self.slit_width_mm)?;
        require_positive("focal_length_mm", self.focal_length_mm)?;
        require_finite("scan_start_mm", self.scan_start_mm)?;
        require_positive("scan_step_mm", self.scan_step_mm)?;
        if self.scan_points < 8 {
            return Err(Error::invalid(
                "scan_points",
                format!("need at least 8 points, got {}", self.scan_points),
            ));
        }
        if !(self.background_fraction >= 0.0 && self.background_fraction < 1.0) {
            return Err(Error::invalid(
                "background_fraction",
                format!("must be in [0, 1), got {}", self.background_fraction),
            ));
        }
        if !(self.wing_width_factor.is_finite() && self.wing_width_factor > 1.0) {
            return Err(Error::invalid(
                "wing_width_factor",
                format!("must be > 1, got {}", self.wing_width_factor),
            ));
        }
        if self.peak_counts == 0 {
            return Err(Error::invalid("peak_counts", "must be positive"));
        }
        if let FixedSlit::Explicit(x) = self.fixed_slit {
            require_finite("fixed_slit_mm", x)?;
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.scan_points)
            .map(|i| self.scan_start_mm + i as f64 * self.scan_step_mm)
            .collect()
    }

    /// `k / f` in momentum mode, 1 in position mode.
    pub fn mapping_scale(&self, k_rad_per_mm: f64) -> f64 {
        match self.mode {
            ScanMode::Position => 1.0,
            ScanMode::Momentum => k_rad_per_mm / self.focal_length_mm,
        }
    }
}

/// Focal-plane position `x` (mm) → transverse wavenumber `q = k x / f`.
pub fn far_field_map(x_mm: f64, f_mm: f64, k: f64) -> f64 {
    k * x_mm / f_mm
}

/// Inverse of [`far_field_map`].
pub fn far_field_position(q: f64, f_mm: f64, k: f64) -> f64 {
    f_mm * q / k
}

/// Joint density in slit-plane coordinates: axis 1 is the scanned photon,
/// axis 2 the photon behind the fixed slit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlaneDensity {
    pub density: Density2D,
    /// rad/mm per mm of slit-plane coordinate (1 in position mode).
    pub mapping_scale: f64,
}

impl ScanPlaneDensity {
    pub fn new(density: Density2D, mapping_scale: f64) -> Self {
        Self { density, mapping_scale }
    }

    /// Resamples a factorized density onto a slit-plane grid sized for the
    /// scan: axis 1 covers the lattice plus one slit on each side, axis 2
    /// covers two slit widths either side of the fixed slit (the peak of the
    /// fixed photon's singles marginal unless placed explicitly).
    pub fn from_factorized(fd: &FactorizedDensity, cfg: &ScanConfig, k: f64) -> Result<Self> {
        cfg.validate()?;
        if fd.representation() != cfg.mode.representation() {
            return Err(Error::invalid(
                "density",
                format!("{} scan needs a {:?} density", cfg.mode.as_str(), cfg.mode.representation()),
            ));
        }
        let scale = cfg.mapping_scale(k);
        let to_plane = 1.0 / scale;
        let c = fd.representation().photon_scale();
        let narrow = 2.0 * c * fd.plus().std().min(fd.minus().std()) * to_plane;
        let h = cfg.slit_width_mm.min(narrow) / 16.0;

        let positions = cfg.positions();
        let lo = positions[0] - cfg.slit_width_mm;
        let hi = positions[positions.len() - 1] + cfg.slit_width_mm;
        let grid1 = AxisGrid::covering(hi - lo, h, 0.5 * (lo + hi), 64)?;

        let center2 = match cfg.fixed_slit {
            FixedSlit::Explicit(x) => x,
            FixedSlit::AtPeak => fd.singles_peak(Axis::Two)? * to_plane,
        };
        let grid2 = AxisGrid::covering(4.0 * cfg.slit_width_mm, h, center2, 64)?;
        let density = Density2D::from_fn(grid1, grid2, |u1, u2| fd.joint_pdf(u1 * scale, u2 * scale))?;
        Ok(Self::new(density, scale))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub mode: ScanMode,
    pub positions_mm: Vec<f64>,
    pub expected_rate: Vec<f64>,
    pub counts: Option<Vec<u64>>,
    pub mapping_scale: f64,
    /// `None` for scans read back from a file.
    pub fixed_slit_mm: Option<f64>,
    /// Std of the injected background wings, if any.
    pub wing_sigma_mm: Option<f64>,
    pub config: ScanConfig,
}

/// Fraction of cell `[edge, edge + h]` covered by `[lo, hi]`, times `h`.
fn overlap(edge: f64, h: f64, lo: f64, hi: f64) -> f64 {
    (hi.min(edge + h) - lo.max(edge)).max(0.0)
}

/// Cell indices and overlap lengths of a window on a grid.
fn window_weights(grid: &AxisGrid, lo: f64, hi: f64) -> Result<Vec<(usize, f64)>> {
    let tol = 1e-9 * grid.spacing();
    if lo < grid.lower_edge() - tol || hi > grid.upper_edge() + tol {
        return Err(Error::OutOfGrid {
            value: if lo < grid.lower_edge() { lo } else { hi },
            min: grid.lower_edge(),
            max: grid.upper_edge(),
        });
    }
    let h = grid.spacing();
    let first = ((lo - grid.lower_edge()) / h).floor().max(0.0) as usize;
    let last = (((hi - grid.lower_edge()) / h).ceil() as usize).min(grid.n());
    Ok((first..last)
        .map(|i| (i, overlap(grid.lower_edge() + i as f64 * h, h, lo, hi)))
        .filter(|(_, w)| *w > 0.0)
        .collect())
}

/// Noise-free coincidence rate at each lattice point.
pub fn expected_scan(plane: &ScanPlaneDensity, cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let d = &plane.density;
    // At-peak: argmax of the fixed photon's marginal restricted to the
    // scanned window.
    let fixed = match cfg.fixed_slit {
        FixedSlit::Explicit(x) => x,
        FixedSlit::AtPeak => d.marginal(Axis::Two)?.argmax(),
    };
    let a = cfg.slit_width_mm;
    let (g1, g2) = (d.grid(Axis::One), d.grid(Axis::Two));
    let fixed_window = window_weights(g2, fixed - 0.5 * a, fixed + 0.5 * a)?;
    let n2 = g2.n();
    let projected: Vec<f64> = (0..g1.n())
        .map(|i1| {
            fixed_window
                .iter()
                .map(|&(i2, w)| d.values()[i1 * n2 + i2] * w)
                .sum()
        })
        .collect();
    let positions = cfg.positions();
    let expected_rate = positions
        .iter()
        .map(|&x| {
            Ok(window_weights(g1, x - 0.5 * a, x + 0.5 * a)?
                .iter()
                .map(|&(i1, w)| projected[i1] * w)
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        mode: cfg.mode,
        positions_mm: positions,
        expected_rate,
        counts: None,
        mapping_scale: plane.mapping_scale,
        fixed_slit_mm: Some(fixed),
        wing_sigma_mm: None,
        config: *cfg,
    })
}

/// Weighted mean and variance of positions under a non-negative curve.
fn curve_moments(positions: &[f64], curve: &[f64]) -> Option<(f64, f64)> {
    let total: f64 = curve.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mean = positions.iter().zip(curve).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = positions
        .iter()
        .zip(curve)
        .map(|(x, w)| (x - mean).powi(2) * w)
        .sum::<f64>()
        / total;
    Some((mean, var))
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best })
}

/// Adds a broad Gaussian background of height `background_fraction × peak`
/// and std `wing_width_factor × core std`, centered on the core peak.
pub fn add_wings(sr: &ScanResult, cfg: &ScanConfig) -> ScanResult {
    let mut out = sr.clone();
    if cfg.background_fraction == 0.0 {
        return out;
    }
    let Some((_, var)) = curve_moments(&sr.positions_mm, &sr.expected_rate) else {
        return out;
    };
    let ipk = argmax(&sr.expected_rate);
    let (x_pk, peak) = (sr.positions_mm[ipk], sr.expected_rate[ipk]);
    let sigma = cfg.wing_width_factor * var.sqrt();
    let height = cfg.background_fraction * peak;
    for (r, x) in out.expected_rate.iter_mut().zip(&sr.positions_mm) {
        *r += height * (-(x - x_pk).powi(2) / (2.0 * sigma * sigma)).exp();
    }
    out.wing_sigma_mm = Some(sigma);
    out
}

/// Poisson counts with mean `peak_counts × rate / max(rate)` from a ChaCha8
/// stream seeded with `cfg.seed`.
pub fn sample_counts(sr: &ScanResult, cfg: &ScanConfig) -> ScanResult {
    let mut out = sr.clone();
    let max = sr.expected_rate.iter().cloned().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let counts = sr
        .expected_rate
        .iter()
        .map(|&r| {
            let mean = if max > 0.0 { cfg.peak_counts as f64 * r / max } else { 0.0 };
            match Poisson::new(mean) {
                Ok(p) => p.sample(&mut rng) as u64,
                Err(_) => 0,
            }
        })
        .collect();
    out.counts = Some(counts);
    out
}

/// Constant plus wide-Gaussian background fitted to the bins more than four
/// core stds from the peak. Returns the background at every position.
pub fn fit_background(positions: &[f64], curve: &[f64]) -> Result<Vec<f64>> {
    let n = curve.len();
    if n < 8 || positions.len() != n {
        return Err(Error::DegenerateCurve(format!("{n} bins is too few for a background fit")));
    }
    let ipk = argmax(curve);
    let (x_pk, peak) = (positions[ipk], curve[ipk]);

    let outer = (n / 8).max(2);
    let mut tail: Vec<f64> = curve[..outer].iter().chain(&curve[n - outer..]).copied().collect();
    tail.sort_by(|a, b| a.total_cmp(b));
    let baseline = tail[tail.len() / 2];
    let half = baseline + 0.5 * (peak - baseline);
    let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
        for i in range {
            let j = (i as isize + step) as usize;
            if curve[j] < half {
                let t = (curve[i] - half) / (curve[i] - curve[j]);
                return positions[i] + t * (positions[j] - positions[i]);
            }
        }
        if step < 0 {
            positions[0]
        } else {
            positions[n - 1]
        }
    };
    let left = crossing(&mut (1..=ipk).rev(), -1);
    let right = crossing(&mut (ipk..n - 1), 1);
    let step = (positions[1] - positions[0]).abs();
    let sigma = ((right - left) / 2.354_820_045).max(step);

    let region: Vec<(f64, f64)> = positions
        .iter()
        .zip(curve)
        .filter(|(x, _)| (**x - x_pk).abs() >= 4.0 * sigma)
        .map(|(x, y)| (*x, *y))
        .collect();
    if region.len() < 3 {
        return Err(Error::DegenerateCurve(format!(
            "only {} bins lie outside the core for the background fit",
            region.len()
        )));
    }

    let m = region.len() as f64;
    let sum_y: f64 = region.iter().map(|r| r.1).sum();
    let c0 = (sum_y / m).max(0.0);
    let sse = |c0: f64, c1: f64, g: &dyn Fn(f64) -> f64| -> f64 {
        region.iter().map(|&(x, y)| (y - c0 - c1 * g(x)).powi(2)).sum()
    };
    let zero = |_: f64| 0.0;
    let mut best = (sse(c0, 0.0, &zero), c0, 0.0, f64::INFINITY);

    for j in 0..24 {
        let s = 5.0 * sigma * 1.25f64.powi(j);
        let g = move |x: f64| (-(x - x_pk).powi(2) / (2.0 * s * s)).exp();
        let (sg, sgg, sgy) = region.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &(x, y)| {
            let gx = g(x);
            (a + gx, b + gx * gx, c + gx * y)
        });
        let det = m * sgg - sg * sg;
        let mut candidates = Vec::with_capacity(2);
        if det > 1e-12 * m * sgg {
            let a0 = (sgg * sum_y - sg * sgy) / det;
            let a1 = (m * sgy - sg * sum_y) / det;
            if a0 >= 0.0 && a1 >= 0.0 {
                candidates.push((a0, a1));
            }
        }
        if sgg > 0.0 && sgy > 0.0 {
            candidates.push((0.0, sgy / sgg));
        }
        for (a0, a1) in candidates {
            let e = sse(a0, a1, &g);
            if e < best.0 {
                best = (e, a0, a1, s);
            }
        }
    }
    let (_, c0, c1, s) = best;
    Ok(positions
        .iter()
        .map(|x| {
            let g = if s.is_finite() {
                (-(x - x_pk).powi(2) / (2.0 * s * s)).exp()
            } else {
                0.0
            };
            c0 + c1 * g
        })
        .collect())
}

/// The curve a variance is computed from, after optional background
/// subtraction (negatives clamped to zero).
pub fn analysis_curve(sr: &ScanResult, use_counts: bool, background_subtract: bool) -> Result<Vec<f64>> {
    let mut curve: Vec<f64> = if use_counts {
        sr.counts
            .as_ref()
            .ok_or_else(|| Error::DegenerateCurve("scan has no counts".into()))?
            .iter()
            .map(|&c| c as f64)
            .collect()
    } else {
        sr.expected_rate.clone()
    };
    if background_subtract {
        let bg = fit_background(&sr.positions_mm, &curve)?;
        curve.iter_mut().zip(&bg).for_each(|(y, b)| *y = (*y - b).max(0.0));
    }
    Ok(curve)
}

/// Variance of the normalized scan curve in scan-plane units², converted to
/// (rad/mm)² in momentum mode.
pub fn scan_variance(sr: &ScanResult, use_counts: bool, background_subtract: bool) -> Result<f64> {
    let curve = analysis_curve(sr, use_counts, background_subtract)?;
    let nonzero = curve.iter().filter(|v| **v > 0.0).count();
    if nonzero < 3 {
        return Err(Error::DegenerateCurve(format!("{nonzero} nonzero bins (need 3)")));
    }
    let (_, var) = curve_moments(&sr.positions_mm, &curve)
        .ok_or_else(|| Error::DegenerateCurve("curve sums to zero".into()))?;
    Ok(var * sr.mapping_scale * sr.mapping_scale)
}

/// Removes one scanning slit's rectangular second moment `a²/12`.
pub fn slit_correction(raw_variance: f64, slit_width: f64) -> Result<f64> {
    if !(slit_width.is_finite() && slit_width >= 0.0) {
        return Err(Error::invalid("slit_width", format!("must be >= 0, got {slit_width}")));
    }
    let correction = slit_width * slit_width / 12.0;
    if slit_width > 0.0 && !(raw_variance > correction) {
        return Err(Error::OverCorrection {
            raw: raw_variance,
            correction,
        });
    }
    Ok(raw_variance - correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss(x: f64, s: f64) -> f64 {
        (-x * x / (2.0 * s * s)).exp()
    }

    fn small_cfg() -> ScanConfig {
        ScanConfig {
            mode: ScanMode::Position,
            slit_width_mm: 0.02,
            focal_length_mm: 100.0,
            scan_start_mm: -0.4,
            scan_step_mm: 0.01,
            scan_points: 81,
            fixed_slit: FixedSlit::Explicit(0.0),
            background_fraction: 0.0,
            wing_width_factor: 10.0,
            peak_counts: 10_000,
            seed: 7,
        }
    }

    fn separable(sigma: f64) -> ScanPlaneDensity {
        let g1 = AxisGrid::new(2048, 0.0005, 0.0).unwrap();
        let g2 = AxisGrid::new(256, 0.0005, 0.0).unwrap();
        let d = Density2D::from_fn(g1, g2, |a, b| gauss(a, sigma) * gauss(b, 0.05)).unwrap();
        ScanPlaneDensity::new(d, 1.0)
    }

    #[test]
    fn far_field_mapping() {
        assert_eq!(far_field_map(0.0, 100.0, 8055.4), 0.0);
        assert_relative_eq!(far_field_map(0.04593, 100.0, 8055.4), 3.700, max_relative = 2e-4);
        let x = 0.0371;
        assert_relative_eq!(
            far_field_position(far_field_map(x, 100.0, 8055.4), 100.0, 8055.4),
            x,
            max_relative = 1e-15
        );
    }

    #[test]
    fn point_density_scan() {
        let g = AxisGrid::new(64, 0.001, 0.0).unwrap();
        let mut v = vec![0.0; 64 * 64];
        v[32 * 64 + 32] = 1.0;
        let plane = ScanPlaneDensity::new(Density2D::from_values(g, g, v).unwrap(), 1.0);
        let cfg = ScanConfig {
            slit_width_mm: 0.004,
            scan_start_mm: -0.01,
            scan_step_mm: 0.001,
            scan_points: 21,
            ..small_cfg()
        };
        let sr = expected_scan(&plane, &cfg).unwrap();
        for (x, r) in sr.positions_mm.iter().zip(&sr.expected_rate) {
            // cell spans [-0.0005, 0.0005]; the window covers it iff |x| <= 0.0015
            if x.abs() <= 0.0015 - 1e-12 {
                assert_relative_eq!(*r, 1.0, max_relative = 1e-9);
            } else if x.abs() >= 0.0025 {
                assert_eq!(*r, 0.0);
            }
        }
    }

    #[test]
    fn separable_scan_adds_rect_variance() {
        let sigma = 0.03;
        let cfg = small_cfg();
        let sr = expected_scan(&separable(sigma), &cfg).unwrap();
        let var = scan_variance(&sr, false, false).unwrap();
        let a = cfg.slit_width_mm;
        assert_relative_eq!(var, sigma * sigma + a * a / 12.0, max_relative = 0.01);
        let corrected = slit_correction(var, a).unwrap();
        assert_relative_eq!(corrected, sigma * sigma, max_relative = 0.01);
    }

    #[test]
    fn scan_outside_grid_rejected() {
        let cfg = ScanConfig {
            scan_start_mm: -1.0,
            scan_step_mm: 0.1,
            scan_points: 21,
            ..small_cfg()
        };
        assert!(matches!(
            expected_scan(&separable(0.03), &cfg),
            Err(Error::OutOfGrid { .. })
        ));
    }

    #[test]
    fn wider_slits_broaden_the_scan() {
        let plane = separable(0.03);
        let mut last = 0.0;
        for a in [0.005, 0.01, 0.02, 0.04] {
            let cfg = ScanConfig {
                slit_width_mm: a,
                ..small_cfg()
            };
            let v = scan_variance(&expected_scan(&plane, &cfg).unwrap(), false, false).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    fn gaussian_scan(sigma: f64, cfg: &ScanConfig) -> ScanResult {
        let positions = cfg.positions();
        ScanResult {
            mode: cfg.mode,
            expected_rate: positions.iter().map(|x| gauss(*x, sigma)).collect(),
            positions_mm: positions,
            counts: None,
            mapping_scale: 1.0,
            fixed_slit_mm: None,
            wing_sigma_mm: None,
            config: *cfg,
        }
    }

    #[test]
    fn wings_identity_at_zero_fraction() {
        let cfg = small_cfg();
        let sr = gaussian_scan(0.03, &cfg);
        assert_eq!(add_wings(&sr, &cfg), sr);
    }

    #[test]
    fn wings_far_from_peak() {
        let cfg = ScanConfig {
            background_fraction: 0.01,
            ..small_cfg()
        };
        let sr = gaussian_scan(0.02, &cfg);
        let w = add_wings(&sr, &cfg);
        let core_std = 0.02;
        let s = w.wing_sigma_mm.unwrap();
        assert_relative_eq!(s, 10.0 * core_std, max_relative = 1e-3);
        for (x, r) in w.positions_mm.iter().zip(&w.expected_rate) {
            if x.abs() > 6.0 * core_std {
                let wing = 0.01 * gauss(*x, s);
                assert_relative_eq!(*r, wing, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn wing_inflation_grows_with_width() {
        let sr = gaussian_scan(0.02, &small_cfg());
        let core = scan_variance(&sr, false, false).unwrap();
        let mut last = core;
        for factor in [2.0, 5.0, 10.0, 20.0] {
            let cfg = ScanConfig {
                background_fraction: 0.01,
                wing_width_factor: factor,
                ..small_cfg()
            };
            let v = scan_variance(&add_wings(&sr, &cfg), false, false).unwrap();
            assert!(v > last, "factor {factor}: {v} <= {last}");
            last = v;
        }
    }

    #[test]
    fn zero_rate_gives_zero_counts() {
        let cfg = small_cfg();
        let mut sr = gaussian_scan(0.02, &cfg);
        sr.expected_rate.iter_mut().for_each(|r| *r = 0.0);
        assert!(sample_counts(&sr, &cfg).counts.unwrap().iter().all(|c| *c == 0));
    }

    #[test]
    fn counts_are_seeded() {
        let cfg = small_cfg();
        let sr = gaussian_scan(0.05, &cfg);
        let a = sample_counts(&sr, &cfg);
        let b = sample_counts(&sr, &cfg);
        assert_eq!(a, b);
        let c = sample_counts(&sr, &ScanConfig { seed: 8, ..cfg });
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn triangular_curve_variance() {
        let cfg = ScanConfig {
            scan_start_mm: -1.0,
            scan_step_mm: 0.001,
            scan_points: 2001,
            ..small_cfg()
        };
        let mut sr = gaussian_scan(1.0, &cfg);
        sr.expected_rate = sr.positions_mm.iter().map(|x| (1.0 - x.abs()).max(0.0)).collect();
        assert_relative_eq!(scan_variance(&sr, false, false).unwrap(), 1.0 / 6.0, max_relative = 1e-5);
    }

    #[test]
    fn subtraction_recovers_core_variance() {
        let cfg = ScanConfig {
            background_fraction: 0.01,
            scan_start_mm: -0.1,
            scan_step_mm: 0.004,
            scan_points: 51,
            ..small_cfg()
        };
        let sr = gaussian_scan(0.02, &cfg);
        let core = scan_variance(&sr, false, false).unwrap();
        let winged = add_wings(&sr, &cfg);
        let raw = scan_variance(&winged, false, false).unwrap();
        let sub = scan_variance(&winged, false, true).unwrap();
        assert!(raw > 1.1 * core);
        assert_relative_eq!(sub, core, max_relative = 0.15);
    }

    #[test]
    fn degenerate_curve_rejected() {
        let cfg = small_cfg();
        let mut sr = gaussian_scan(0.02, &cfg);
        sr.expected_rate.iter_mut().for_each(|r| *r = 0.0);
        sr.expected_rate[40] = 1.0;
        sr.expected_rate[41] = 1.0;
        assert!(matches!(scan_variance(&sr, false, false), Err(Error::DegenerateCurve(_))));
        assert!(matches!(scan_variance(&sr, true, false), Err(Error::DegenerateCurve(_))));
    }

    #[test]
    fn momentum_variance_uses_mapping_scale() {
        let cfg = ScanConfig {
            mode: ScanMode::Momentum,
            ..small_cfg()
        };
        let mut sr = gaussian_scan(0.03, &cfg);
        let plain = scan_variance(&sr, false, false).unwrap();
        sr.mapping_scale = 80.0;
        assert_relative_eq!(scan_variance(&sr, false, false).unwrap(), plain * 6400.0, max_relative = 1e-12);
    }

    #[test]
    fn slit_correction_examples() {
        assert_eq!(slit_correction(8.62e-4, 0.0).unwrap(), 8.62e-4);
        let c = slit_correction(8.62e-4, 0.04).unwrap();
        assert_relative_eq!(c, 8.62e-4 - 0.04f64.powi(2) / 12.0, max_relative = 1e-12);
        assert_relative_eq!(c, 7.29e-4, max_relative = 1e-3);
        assert_relative_eq!(c.sqrt(), 0.027, max_relative = 1e-3);
        let reduction = 1.0 - c.sqrt() / 8.62e-4f64.sqrt();
        assert!(reduction > 0.08 && reduction < 0.10);
        assert!(matches!(slit_correction(1e-4, 0.04), Err(Error::OverCorrection { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(ScanConfig { slit_width_mm: 0.0, ..small_cfg() }.validate().is_err());
        assert!(ScanConfig { scan_points: 7, ..small_cfg() }.validate().is_err());
        assert!(ScanConfig { background_fraction: 1.0, ..small_cfg() }.validate().is_err());
        assert!(ScanConfig { wing_width_factor: 1.0, ..small_cfg() }.validate().is_err());
        assert!(ScanConfig::nominal(ScanMode::Momentum).validate().is_ok());
    }
}
