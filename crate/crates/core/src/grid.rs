//! Radial discretization shared by all solvers, plus the plotting
//! coordinate transform used for tail-resolved orbital output.
//!
//! Grids are uniform in a mapped coordinate x with r = g(x):
//!   log-uniform        x = ln r
//!   hybrid-log-linear  x = a*r + ln r   (log near the origin, linear far out)
//!
//! Quadrature weights are end-corrected trapezoidal weights (sixth order)
//! in x times the jacobian dr/dx, rescaled so that the integral of 1 over
//! [r_min, r_max] is exact.

use crate::error::{HfError, Result};
use serde::{Deserialize, Serialize};

/// Sixth-order Gregory end corrections to the trapezoidal rule.
const GREGORY_END: [f64; 5] = [
    95.0 / 288.0,
    317.0 / 240.0,
    23.0 / 30.0,
    793.0 / 720.0,
    157.0 / 160.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMapping {
    LogUniform,
    HybridLogLinear,
}

impl std::fmt::Display for GridMapping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridMapping::LogUniform => write!(f, "log-uniform"),
            GridMapping::HybridLogLinear => write!(f, "hybrid-log-linear"),
        }
    }
}

impl std::str::FromStr for GridMapping {
    type Err = HfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log-uniform" | "log" => Ok(GridMapping::LogUniform),
            "hybrid-log-linear" | "hybrid" => Ok(GridMapping::HybridLogLinear),
            other => Err(HfError::Config(format!("unknown grid mapping `{other}`"))),
        }
    }
}

/// Radial mesh with quadrature weights for integrals over dr.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    mapping: GridMapping,
    hybrid_slope: f64,
    step: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
    jacobians: Vec<f64>,
}

/// Default grid extends far enough that outer-orbital tails decay below
/// 1e-12 of peak for all tabulated atoms.
pub const DEFAULT_R_MIN: f64 = 1e-6;
pub const DEFAULT_R_MAX: f64 = 60.0;
pub const DEFAULT_POINT_COUNT: usize = 2000;

impl RadialGrid {
    pub fn build(
        r_min: f64,
        r_max: f64,
        point_count: usize,
        mapping: GridMapping,
    ) -> Result<Self> {
        if !(r_min > 0.0) || !r_min.is_finite() {
            return Err(HfError::Config(format!(
                "grid invariant r_min > 0 violated (r_min = {r_min})"
            )));
        }
        if !(r_max > r_min) || !r_max.is_finite() {
            return Err(HfError::Config(format!(
                "grid invariant r_max > r_min violated (r_min = {r_min}, r_max = {r_max})"
            )));
        }
        if point_count < 100 {
            return Err(HfError::Config(format!(
                "grid invariant point_count >= 100 violated (point_count = {point_count})"
            )));
        }
        let slope = match mapping {
            GridMapping::LogUniform => 0.0,
            GridMapping::HybridLogLinear => PlotTransform::DEFAULT_SLOPE,
        };
        Self::build_with_slope(r_min, r_max, point_count, mapping, slope)
    }

    pub fn build_with_slope(
        r_min: f64,
        r_max: f64,
        point_count: usize,
        mapping: GridMapping,
        hybrid_slope: f64,
    ) -> Result<Self> {
        let map = |r: f64| match mapping {
            GridMapping::LogUniform => r.ln(),
            GridMapping::HybridLogLinear => hybrid_slope * r + r.ln(),
        };
        let x_lo = map(r_min);
        let x_hi = map(r_max);
        let n = point_count;
        let h = (x_hi - x_lo) / (n - 1) as f64;

        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let x = x_lo + i as f64 * h;
            let r = match mapping {
                GridMapping::LogUniform => x.exp(),
                GridMapping::HybridLogLinear => invert_hybrid(x, hybrid_slope),
            };
            points.push(r);
        }
        // pin the ends exactly
        points[0] = r_min;
        points[n - 1] = r_max;

        let jacobians: Vec<f64> = points
            .iter()
            .map(|&r| match mapping {
                GridMapping::LogUniform => r,
                GridMapping::HybridLogLinear => r / (hybrid_slope * r + 1.0),
            })
            .collect();

        let mut weights = vec![h; n];
        for (k, &c) in GREGORY_END.iter().enumerate() {
            weights[k] = h * c;
            weights[n - 1 - k] = h * c;
        }
        for i in 0..n {
            weights[i] *= jacobians[i];
        }
        // exact-range normalization: the type guarantees quadrature of 1
        let total: f64 = weights.iter().sum();
        let scale = (r_max - r_min) / total;
        for w in &mut weights {
            *w *= scale;
        }

        Ok(RadialGrid {
            r_min,
            r_max,
            mapping,
            hybrid_slope,
            step: h,
            points,
            weights,
            jacobians,
        })
    }

    pub fn default_grid() -> Self {
        Self::build(
            DEFAULT_R_MIN,
            DEFAULT_R_MAX,
            DEFAULT_POINT_COUNT,
            GridMapping::LogUniform,
        )
        .expect("default grid parameters are valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn mapping(&self) -> GridMapping {
        self.mapping
    }

    pub fn hybrid_slope(&self) -> f64 {
        self.hybrid_slope
    }

    /// Uniform step of the mapped coordinate.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// dr/dx at node i.
    pub fn jacobian(&self, i: usize) -> f64 {
        self.jacobians[i]
    }

    /// Coefficient G(x) of the Liouville normal form: transforming
    /// P(r) = sqrt(dr/dx) u(x) turns -P''(r) into (-u'' + G u)/ (dr/dx)^2.
    /// For the log map G = 1/4 everywhere.
    pub fn liouville_term(&self, i: usize) -> f64 {
        match self.mapping {
            GridMapping::LogUniform => 0.25,
            GridMapping::HybridLogLinear => {
                let r = self.points[i];
                let a = self.hybrid_slope;
                let s = a + 1.0 / r;
                let sp = -1.0 / (r * r);
                let s2 = 2.0 / (r * r * r);
                -0.75 * sp * sp / s.powi(4) + 0.5 * s2 / s.powi(3)
            }
        }
    }

    /// Quadrature of sampled values against dr.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len(), "sample count must match grid");
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Inner product of two sample vectors against dr.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len());
        assert_eq!(g.len(), self.len());
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// Index of the first grid point at or above r.
    pub fn index_at_or_above(&self, r: f64) -> Option<usize> {
        if r > self.r_max {
            return None;
        }
        match self
            .points
            .binary_search_by(|p| p.partial_cmp(&r).unwrap())
        {
            Ok(i) => Some(i),
            Err(i) => Some(i.min(self.points.len() - 1)),
        }
    }
}

fn invert_hybrid(x: f64, a: f64) -> f64 {
    // solve a*r + ln r = x by Newton from a log-side or linear-side guess
    let mut r = if x < 0.0 { x.exp() } else { (x + 1.0) / (a + 1.0) };
    for _ in 0..60 {
        let fx = a * r + r.ln() - x;
        let dfx = a + 1.0 / r;
        let dr = fx / dfx;
        r -= dr;
        if r <= 0.0 {
            r = 1e-300;
        }
        if dr.abs() < 1e-15 * r.max(1.0) {
            break;
        }
    }
    r
}

/// The plotting transform rho(r) = a*r + ln r with the scaled amplitude
/// f_nl(rho) = sqrt(r (a*r + 1)) * phi_nl(r).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlotTransform {
    pub slope: f64,
}

impl PlotTransform {
    pub const DEFAULT_SLOPE: f64 = 2.79;

    pub fn new(slope: f64) -> Self {
        PlotTransform { slope }
    }

    pub fn rho_of_r(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(HfError::Domain(format!(
                "rho(r) requires r > 0 (got r = {r})"
            )));
        }
        Ok(self.slope * r + r.ln())
    }

    /// Inverse of rho(r); rho is strictly monotone for r > 0.
    pub fn r_of_rho(&self, rho: f64) -> f64 {
        invert_hybrid(rho, self.slope)
    }

    /// Amplitude scaling sqrt(r (a*r + 1)).
    pub fn amplitude_scale(&self, r: f64) -> f64 {
        (r * (self.slope * r + 1.0)).sqrt()
    }
}

impl Default for PlotTransform {
    fn default() -> Self {
        PlotTransform::new(Self::DEFAULT_SLOPE)
    }
}

/// One row of a Fig-style plot table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlotPoint {
    pub rho: f64,
    pub f: f64,
}

/// Transform orbital samples into (rho, f) pairs.
pub fn plot_scale(
    radial: &[f64],
    grid: &RadialGrid,
    transform: &PlotTransform,
) -> Result<Vec<PlotPoint>> {
    if radial.len() != grid.len() {
        return Err(HfError::Domain(
            "orbital must be sampled on the supplied grid".into(),
        ));
    }
    let mut out = Vec::with_capacity(radial.len());
    for (i, &p) in radial.iter().enumerate() {
        let r = grid.r(i);
        out.push(PlotPoint {
            rho: transform.rho_of_r(r)?,
            f: transform.amplitude_scale(r) * p,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_grid_is_strictly_increasing() {
        let g = RadialGrid::default_grid();
        assert_eq!(g.len(), 2000);
        for i in 1..g.len() {
            assert!(g.r(i) > g.r(i - 1));
        }
        assert_eq!(g.r(0), 1e-6);
        assert_eq!(g.r(g.len() - 1), 60.0);
    }

    #[test]
    fn degenerate_interval_rejected() {
        assert!(RadialGrid::build(1.0, 1.0, 100, GridMapping::LogUniform).is_err());
        assert!(RadialGrid::build(0.0, 1.0, 100, GridMapping::LogUniform).is_err());
        assert!(RadialGrid::build(1e-6, 60.0, 99, GridMapping::LogUniform).is_err());
    }

    #[test]
    fn unit_integral_matches_range_to_1e10() {
        for mapping in [GridMapping::LogUniform, GridMapping::HybridLogLinear] {
            for n in [100, 500, 2000] {
                let g = RadialGrid::build(1e-6, 60.0, n, mapping).unwrap();
                let ones = vec![1.0; g.len()];
                let q = g.integrate(&ones);
                assert_relative_eq!(q, 60.0 - 1e-6, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn quadrature_of_exp_decay() {
        let g = RadialGrid::default_grid();
        let f: Vec<f64> = g.points().iter().map(|&r| (-r).exp()).collect();
        let exact = (-1e-6f64).exp() - (-60.0f64).exp();
        assert_relative_eq!(g.integrate(&f), exact, max_relative = 1e-8);
    }

    #[test]
    fn hybrid_grid_quadrature_of_exp_decay() {
        let g = RadialGrid::build(1e-6, 60.0, 2000, GridMapping::HybridLogLinear).unwrap();
        let f: Vec<f64> = g.points().iter().map(|&r| (-r).exp()).collect();
        let exact = (-1e-6f64).exp() - (-60.0f64).exp();
        assert_relative_eq!(g.integrate(&f), exact, max_relative = 1e-8);
    }

    #[test]
    fn rho_examples() {
        let t = PlotTransform::default();
        assert_relative_eq!(t.rho_of_r(1.0).unwrap(), 2.79, max_relative = 1e-14);
        let t0 = PlotTransform::new(0.0);
        assert_relative_eq!(
            t0.rho_of_r(std::f64::consts::E).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        // direct evaluation: 2.79 * 1.33 + ln 1.33
        assert_relative_eq!(t.rho_of_r(1.33).unwrap(), 3.995_878_9, epsilon = 1e-6);
        assert!(t.rho_of_r(0.0).is_err());
        assert!(t.rho_of_r(-1.0).is_err());
    }

    #[test]
    fn rho_is_strictly_monotone_and_invertible() {
        let t = PlotTransform::default();
        let mut last = f64::NEG_INFINITY;
        for i in 1..2000 {
            let r = i as f64 * 0.03;
            let rho = t.rho_of_r(r).unwrap();
            assert!(rho > last);
            last = rho;
            assert_relative_eq!(t.r_of_rho(rho), r, max_relative = 1e-12);
        }
    }

    #[test]
    fn plot_scale_preserves_zero_and_sign_changes() {
        let g = RadialGrid::default_grid();
        let t = PlotTransform::default();
        let zero = vec![0.0; g.len()];
        let table = plot_scale(&zero, &g, &t).unwrap();
        assert!(table.iter().all(|p| p.f == 0.0));

        // nodeless hydrogen ground state stays single-signed
        let p1s: Vec<f64> = g.points().iter().map(|&r| 2.0 * r * (-r).exp()).collect();
        let table = plot_scale(&p1s, &g, &t).unwrap();
        let flips = table
            .windows(2)
            .filter(|w| w[0].f.signum() != w[1].f.signum() && w[0].f != 0.0)
            .count();
        assert_eq!(flips, 0);
    }
}
