use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Grid1D;
use crate::error::{Error, Result};

/// Second differences smaller than this count as zero.
pub const CURVATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Affine,
    StrictlyConvex,
    StrictlyConcave,
    Other,
}

impl Curvature {
    /// Curvature of `sign * p`.
    pub fn signed(self, sign: f64) -> Curvature {
        if sign >= 0.0 {
            return self;
        }
        match self {
            Curvature::StrictlyConvex => Curvature::StrictlyConcave,
            Curvature::StrictlyConcave => Curvature::StrictlyConvex,
            other => other,
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DemandKind {
    /// `a + b x`
    Affine { a: f64, b: f64 },
    /// `scale * x^exponent`, defined for `x >= 0`.
    Power { scale: f64, exponent: f64 },
    /// Logistic cdf: convex below the midpoint, concave above.
    Logistic { midpoint: f64, steepness: f64 },
    /// Arbitrary function; derivatives fall back to central differences.
    Custom {
        value: RealFn,
        derivative: Option<RealFn>,
        fd_step: f64,
    },
}

impl fmt::Debug for DemandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandKind::Affine { a, b } => write!(f, "Affine {{ a: {a}, b: {b} }}"),
            DemandKind::Power { scale, exponent } => {
                write!(f, "Power {{ scale: {scale}, exponent: {exponent} }}")
            }
            DemandKind::Logistic {
                midpoint,
                steepness,
            } => {
                write!(
                    f,
                    "Logistic {{ midpoint: {midpoint}, steepness: {steepness} }}"
                )
            }
            DemandKind::Custom { fd_step, .. } => write!(f, "Custom {{ fd_step: {fd_step} }}"),
        }
    }
}

/// Buyer demand: probability of sale as a function of the posterior mean value.
#[derive(Debug, Clone)]
pub struct DemandCurve {
    kind: DemandKind,
    curvature: Curvature,
}

impl DemandCurve {
    pub fn affine(a: f64, b: f64) -> Self {
        Self {
            kind: DemandKind::Affine { a, b },
            curvature: Curvature::Affine,
        }
    }

    pub fn linear() -> Self {
        Self::affine(0.0, 1.0)
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        let curvature = if exponent > 1.0 {
            Curvature::StrictlyConvex
        } else if exponent < 1.0 {
            Curvature::StrictlyConcave
        } else {
            Curvature::Affine
        };
        Self {
            kind: DemandKind::Power { scale, exponent },
            curvature,
        }
    }

    pub fn square() -> Self {
        Self::power(1.0, 2.0)
    }

    pub fn sqrt() -> Self {
        Self::power(1.0, 0.5)
    }

    pub fn logistic(midpoint: f64, steepness: f64) -> Self {
        Self {
            kind: DemandKind::Logistic {
                midpoint,
                steepness,
            },
            curvature: Curvature::Other,
        }
    }

    /// Wraps an arbitrary demand. `domain_width` sets the finite-difference
    /// step (1e-5 of the width) used when no derivative is supplied.
    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<RealFn>,
        curvature: Curvature,
        domain_width: f64,
    ) -> Self {
        Self {
            kind: DemandKind::Custom {
                value: Arc::new(value),
                derivative,
                fd_step: 1e-5 * domain_width.max(f64::MIN_POSITIVE),
            },
            curvature,
        }
    }

    pub fn kind(&self) -> &DemandKind {
        &self.kind
    }

    /// Declared curvature of the curve.
    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    /// `(a, b)` when the curve is affine.
    pub fn affine_coefficients(&self) -> Option<(f64, f64)> {
        match self.kind {
            DemandKind::Affine { a, b } => Some((a, b)),
            DemandKind::Power { scale, exponent } if exponent == 1.0 => Some((0.0, scale)),
            _ => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            DemandKind::Affine { a, b } => a + b * x,
            DemandKind::Power { scale, exponent } => scale * x.max(0.0).powf(*exponent),
            DemandKind::Logistic {
                midpoint,
                steepness,
            } => 1.0 / (1.0 + (-steepness * (x - midpoint)).exp()),
            DemandKind::Custom { value, .. } => value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            DemandKind::Affine { b, .. } => *b,
            DemandKind::Power { scale, exponent } => {
                scale * exponent * x.max(0.0).powf(exponent - 1.0)
            }
            DemandKind::Logistic {
                midpoint,
                steepness,
            } => {
                let s = 1.0 / (1.0 + (-steepness * (x - midpoint)).exp());
                steepness * s * (1.0 - s)
            }
            DemandKind::Custom {
                value,
                derivative,
                fd_step,
            } => match derivative {
                Some(d) => d(x),
                None => (value(x + fd_step) - value(x - fd_step)) / (2.0 * fd_step),
            },
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match &self.kind {
            DemandKind::Affine { .. } => 0.0,
            DemandKind::Power { scale, exponent } => {
                scale * exponent * (exponent - 1.0) * x.max(0.0).powf(exponent - 2.0)
            }
            DemandKind::Logistic {
                midpoint,
                steepness,
            } => {
                let s = 1.0 / (1.0 + (-steepness * (x - midpoint)).exp());
                steepness * steepness * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            DemandKind::Custom { fd_step, .. } => {
                let h = fd_step * 10.0;
                (self.derivative(x + h) - self.derivative(x - h)) / (2.0 * h)
            }
        }
    }

    /// Checks range and strict monotonicity on the grid points.
    pub fn validate_on(&self, grid: &Grid1D) -> Result<()> {
        let pts = grid.points();
        for &x in pts {
            let v = self.value(x);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Input(format!("demand p({x}) = {v} outside [0, 1]")));
            }
        }
        for w in pts.windows(2) {
            let (p_lo, p_hi) = (self.value(w[0]), self.value(w[1]));
            if !(p_hi > p_lo) {
                return Err(Error::NonIncreasingDemand {
                    lo: w[0],
                    hi: w[1],
                    p_lo,
                    p_hi,
                });
            }
        }
        Ok(())
    }
}

/// Curvature read off the sign pattern of second differences on the grid.
/// Grids with fewer than three points yield `Other`.
pub fn classify_curvature(p: &DemandCurve, grid: &Grid1D) -> Curvature {
    let x = grid.points();
    if x.len() < 3 {
        return Curvature::Other;
    }
    let v: Vec<f64> = x.iter().map(|&t| p.value(t)).collect();
    let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
    for k in 1..x.len() - 1 {
        let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
        let slope_change = (v[k + 1] - v[k]) / h1 - (v[k] - v[k - 1]) / h0;
        // Rescale to a plain second difference so uniform grids match p[k+1] - 2p[k] + p[k-1].
        let d2 = slope_change * 0.5 * (h0 + h1);
        if d2.abs() < CURVATURE_TOL {
            zero += 1;
        } else if d2 > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    match (pos, neg, zero) {
        (0, 0, _) => Curvature::Affine,
        (_, 0, 0) => Curvature::StrictlyConvex,
        (0, _, 0) => Curvature::StrictlyConcave,
        _ => Curvature::Other,
    }
}
