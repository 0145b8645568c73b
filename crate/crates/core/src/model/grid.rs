use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A discrete distribution on an ordered set of abscissae.
///
/// Each point stands for a cell of the underlying continuum. The cell edges
/// are the midpoints between neighbouring points, closed off by `bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    points: Vec<f64>,
    weights: Vec<f64>,
    bounds: (f64, f64),
}

impl Grid1D {
    /// Builds a grid from points and non-negative weights. Weights are
    /// normalized to sum to one; bounds default to the extreme points.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let bounds = match (points.first(), points.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::InvalidGrid("grid has no points".into())),
        };
        Self::with_bounds(points, weights, bounds)
    }

    pub fn with_bounds(
        points: Vec<f64>,
        mut weights: Vec<f64>,
        bounds: (f64, f64),
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid has no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite point".into()));
        }
        if let Some(k) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points not strictly increasing at index {}: {} then {}",
                k + 1,
                points[k],
                points[k + 1]
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGrid(format!("invalid weight {w}")));
        }
        let (lo, hi) = bounds;
        if !(lo <= points[0] && points[points.len() - 1] <= hi) {
            return Err(Error::InvalidGrid(format!(
                "bounds [{lo}, {hi}] do not contain the points"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidGrid("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            points,
            weights,
            bounds,
        })
    }

    /// Single atom at `x`.
    pub fn point(x: f64) -> Result<Self> {
        Self::with_bounds(vec![x], vec![1.0], (x, x))
    }

    /// Cell-midpoint discretization of U[lo, hi] with `n` cells. A zero-width
    /// interval collapses to a single atom.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::from_density(lo, hi, n, |_| 1.0)
    }

    /// Midpoint quadrature of an (unnormalized) density on [lo, hi].
    pub fn from_density(lo: f64, hi: f64, n: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!("invalid interval [{lo}, {hi}]")));
        }
        if lo == hi {
            return Self::point(lo);
        }
        if n == 0 {
            return Err(Error::InvalidGrid("cell count must be positive".into()));
        }
        let h = (hi - lo) / n as f64;
        let points: Vec<f64> = (0..n).map(|k| lo + (k as f64 + 0.5) * h).collect();
        let weights = points.iter().map(|&x| density(x)).collect();
        Self::with_bounds(points, weights, (lo, hi))
    }

    /// Beta(a, b) rescaled to [lo, hi].
    pub fn beta(a: f64, b: f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "beta shape ({a}, {b}) must be positive"
            )));
        }
        Self::from_density(lo, hi, n, |x| {
            let t = (x - lo) / (hi - lo);
            t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0)
        })
    }

    /// Triangular distribution on [lo, hi] with the given mode.
    pub fn triangular(lo: f64, mode: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo <= mode && mode <= hi) {
            return Err(Error::InvalidGrid(format!(
                "mode {mode} outside [{lo}, {hi}]"
            )));
        }
        Self::from_density(lo, hi, n, |x| {
            if x < mode {
                (x - lo) / (mode - lo)
            } else if x > mode {
                (hi - x) / (hi - mode)
            } else {
                1.0
            }
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn width(&self) -> f64 {
        self.bounds.1 - self.bounds.0
    }

    /// True when all mass sits on a single zero-width cell.
    pub fn is_degenerate(&self) -> bool {
        self.points.len() == 1 && self.width() == 0.0
    }

    /// Cell edges: `len() + 1` non-decreasing values from `bounds.0` to `bounds.1`.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.points.len() + 1);
        edges.push(self.bounds.0);
        edges.extend(self.points.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        edges.push(self.bounds.1);
        edges
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Smallest point whose cumulative weight reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (&x, &w) in self.points.iter().zip(&self.weights) {
            acc += w;
            if acc >= q - 1e-15 {
                return x;
            }
        }
        *self.points.last().expect("grid is never empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_midpoints_and_edges() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.points(), &[0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.edges(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((g.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_width_interval_is_a_point() {
        let g = Grid1D::uniform(0.5, 0.5, 100).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.is_degenerate());
        assert_eq!(g.edges(), vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid1D::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Grid1D::new(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Grid1D::new(vec![0.0, 1.0], vec![1.0, -0.5]).is_err());
        assert!(Grid1D::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Grid1D::new(vec![], vec![]).is_err());
        assert!(Grid1D::uniform(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn skewed_beta_mean() {
        // Beta(2,5) has mean 2/7.
        let g = Grid1D::beta(2.0, 5.0, 0.0, 1.0, 2000).unwrap();
        assert!((g.mean() - 2.0 / 7.0).abs() < 1e-6);
    }

    #[test]
    fn triangular_is_symmetric_for_central_mode() {
        let g = Grid1D::triangular(0.0, 0.5, 1.0, 10).unwrap();
        let w = g.weights();
        for k in 0..5 {
            assert!((w[k] - w[9 - k]).abs() < 1e-15);
        }
    }
}
